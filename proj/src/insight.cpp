#include "forge/insight.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/text.hpp"

namespace forge::insight {

const std::vector<std::string>& dimensions() {
  static const std::vector<std::string> dims = {
      "char_count",      "word_count",         "line_count",        "avg_line_length",
      "max_line_length", "paragraph_count",    "alnum_ratio",       "special_char_ratio",
      "flagged_words_ratio", "stopwords_ratio", "word_repetition_ratio", "perplexity",
      "language_confidence"};
  return dims;
}

DimensionSource dimension_source(std::string_view dim) {
  static const std::map<std::string, DimensionSource, std::less<>> sources = {
      {"char_count", {"text_length_filter", "char_count"}},
      {"word_count", {"word_count_filter", "word_count"}},
      {"line_count", {"line_count_filter", "line_count"}},
      {"avg_line_length", {"avg_line_length_filter", "avg_line_length"}},
      {"max_line_length", {"max_line_length_filter", "max_line_length"}},
      {"paragraph_count", {"paragraph_count_filter", "paragraph_count"}},
      {"alnum_ratio", {"alnum_ratio_filter", "alnum_ratio"}},
      {"special_char_ratio", {"special_char_ratio_filter", "special_char_ratio"}},
      {"flagged_words_ratio", {"flagged_words_filter", "flagged_ratio"}},
      {"stopwords_ratio", {"stopwords_filter", "stopwords_ratio"}},
      {"word_repetition_ratio", {"word_repetition_filter", "word_repetition_ratio"}},
      {"perplexity", {"perplexity_filter", "perplexity"}},
      {"language_confidence", {"language_id_filter", "language_confidence"}},
  };
  auto it = sources.find(dim);
  if (it == sources.end()) throw UnknownDimension("unknown analyzer dimension '" + std::string(dim) + "'");
  return it->second;
}

const DimensionStats* StatsReport::find(std::string_view name) const {
  for (const auto& d : dims) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Degenerate("quantile of an empty sample");
  double n = static_cast<double>(sorted.size());
  // The epsilon absorbs representation error in q (0.95 * 20 must be 19).
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

DimensionStats summarize(std::string name, std::vector<double> values, std::size_t bins) {
  DimensionStats d;
  d.name = std::move(name);
  d.count = values.size();
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  d.mean = mean;
  d.std = std::sqrt(ss / n);
  d.min = values.front();
  d.max = values.back();
  d.p5 = nearest_rank(values, 0.05);
  d.p25 = nearest_rank(values, 0.25);
  d.p50 = nearest_rank(values, 0.50);
  d.p75 = nearest_rank(values, 0.75);
  d.p95 = nearest_rank(values, 0.95);
  double iqr = *d.p75 - *d.p25;
  d.lower_fence = *d.p25 - 1.5 * iqr;
  d.upper_fence = *d.p75 + 1.5 * iqr;

  Histogram& h = d.histogram;
  h.lo = *d.min;
  h.hi = *d.max;
  if (h.lo == h.hi || bins <= 1) {
    h.counts = {values.size()};
  } else {
    h.counts.assign(bins, 0);
    double w = (h.hi - h.lo) / static_cast<double>(bins);
    for (double v : values) {
      auto b = static_cast<std::size_t>(std::floor((v - h.lo) / w));
      ++h.counts[std::min(b, bins - 1)];
    }
  }
  double entropy = 0;
  for (auto c : h.counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / n;
    entropy -= p * std::log2(p);
  }
  d.entropy = entropy;
  return d;
}

StatsReport analyze(const Dataset& dataset, const AnalyzeOptions& options, Dataset* with_stats, const OpRegistry* registry) {
  const OpRegistry& reg = registry ? *registry : OpRegistry::builtin();
  std::vector<std::string> dims = options.dims.empty() ? dimensions() : options.dims;
  std::vector<std::unique_ptr<Op>> filters;
  std::vector<std::string> keys;
  for (const auto& dim : dims) {
    auto src = dimension_source(dim);
    auto given = options.filter_params.find(src.filter);
    Json params = reg.resolve_params(src.filter, given == options.filter_params.end() ? Json::object() : given->second);
    filters.push_back(reg.create(src.filter, params));
    keys.push_back(src.stat_key);
  }

  std::vector<Sample> samples = dataset.samples();
  std::vector<std::uint64_t> tokens(std::max<std::size_t>(1, options.workers), 0);
  parallel_shards(samples.size(), options.workers, [&](std::size_t shard, std::size_t begin, std::size_t end) {
    ContextStore ctx;
    static const FieldPath text_field = FieldPath::parse("text");
    for (std::size_t i = begin; i < end; ++i) {
      for (const auto& f : filters) static_cast<const Filter&>(*f).add_stats(samples[i], ctx);
      tokens[shard] += ctx.words(text_field, samples[i].text).size();
      ctx.clear();
    }
  });

  StatsReport report;
  report.samples = samples.size();
  for (const auto& s : samples) report.bytes += s.text.size();
  report.tokens = std::accumulate(tokens.begin(), tokens.end(), std::uint64_t{0});
  for (std::size_t d = 0; d < dims.size(); ++d) {
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples) {
      auto it = s.stats.find(keys[d]);
      if (it != s.stats.end()) values.push_back(it->second);
    }
    report.dims.push_back(summarize(dims[d], std::move(values)));
  }
  if (with_stats) *with_stats = Dataset(std::move(samples), dataset.schema());
  return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> read_opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

Json dim_json(const DimensionStats& d) {
  return {{"count", d.count},
          {"mean", opt(d.mean)},
          {"std", opt(d.std)},
          {"min", opt(d.min)},
          {"max", opt(d.max)},
          {"p5", opt(d.p5)},
          {"p25", opt(d.p25)},
          {"p50", opt(d.p50)},
          {"p75", opt(d.p75)},
          {"p95", opt(d.p95)},
          {"entropy", opt(d.entropy)},
          {"lower_fence", opt(d.lower_fence)},
          {"upper_fence", opt(d.upper_fence)},
          {"histogram", {{"lo", d.histogram.lo}, {"hi", d.histogram.hi}, {"counts", d.histogram.counts}}}};
}

const char* const kAggregates[] = {"mean", "std", "min", "max", "p5", "p25", "p50", "p75", "p95", "entropy"};

}  // namespace

Json to_json(const StatsReport& r) {
  Json dims = Json::object();
  for (const auto& d : r.dims) dims[d.name] = dim_json(d);
  return {{"samples", r.samples}, {"bytes", r.bytes}, {"tokens", r.tokens}, {"dims", dims}};
}

StatsReport report_from_json(const Json& j) {
  StatsReport r;
  r.samples = j.at("samples").get<std::uint64_t>();
  r.bytes = j.at("bytes").get<std::uint64_t>();
  r.tokens = j.at("tokens").get<std::uint64_t>();
  for (auto it = j.at("dims").begin(); it != j.at("dims").end(); ++it) {
    const Json& v = it.value();
    DimensionStats d;
    d.name = it.key();
    d.count = v.at("count").get<std::uint64_t>();
    d.mean = read_opt(v, "mean");
    d.std = read_opt(v, "std");
    d.min = read_opt(v, "min");
    d.max = read_opt(v, "max");
    d.p5 = read_opt(v, "p5");
    d.p25 = read_opt(v, "p25");
    d.p50 = read_opt(v, "p50");
    d.p75 = read_opt(v, "p75");
    d.p95 = read_opt(v, "p95");
    d.entropy = read_opt(v, "entropy");
    d.lower_fence = read_opt(v, "lower_fence");
    d.upper_fence = read_opt(v, "upper_fence");
    const Json& h = v.at("histogram");
    d.histogram.lo = h.at("lo").get<double>();
    d.histogram.hi = h.at("hi").get<double>();
    d.histogram.counts = h.at("counts").get<std::vector<std::uint64_t>>();
    r.dims.push_back(std::move(d));
  }
  return r;
}

Json diff_report(const StatsReport& before, const StatsReport& after, const std::vector<FunnelStep>& funnel) {
  Json dims = Json::object();
  std::vector<std::string> names;
  for (const auto& d : before.dims) names.push_back(d.name);
  for (const auto& d : after.dims) {
    if (std::find(names.begin(), names.end(), d.name) == names.end()) names.push_back(d.name);
  }
  for (const auto& name : names) {
    const DimensionStats* b = before.find(name);
    const DimensionStats* a = after.find(name);
    Json bj = b ? dim_json(*b) : Json(nullptr);
    Json aj = a ? dim_json(*a) : Json(nullptr);
    Json delta = Json::object();
    delta["count"] = static_cast<std::int64_t>(a ? a->count : 0) - static_cast<std::int64_t>(b ? b->count : 0);
    for (const char* key : kAggregates) {
      if (bj.is_object() && aj.is_object() && bj[key].is_number() && aj[key].is_number()) {
        delta[key] = aj[key].get<double>() - bj[key].get<double>();
      } else {
        delta[key] = nullptr;
      }
    }
    dims[name] = {{"delta", delta},
                  {"before", bj},
                  {"after", aj}};
  }
  Json f = Json::array();
  for (const auto& s : funnel) f.push_back({{"stage", s.stage}, {"in", s.in}, {"out", s.out}, {"removed", s.in - s.out}});
  return {{"samples", {{"before", before.samples}, {"after", after.samples}}},
          {"dims", dims},
          {"funnel", f}};
}

// ---------------------------------------------------------------------------
// HTML

namespace {

std::string esc(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *v);
  return buf;
}

std::string histogram_svg(const Histogram& h, const Histogram* overlay) {
  const double W = 420, H = 120;
  std::uint64_t peak = 1;
  for (auto c : h.counts) peak = std::max(peak, c);
  if (overlay) {
    for (auto c : overlay->counts) peak = std::max(peak, c);
  }
  std::string svg = "<svg width=\"420\" height=\"120\" viewBox=\"0 0 420 120\">";
  auto bars = [&](const Histogram& hist, const char* fill) {
    if (hist.counts.empty()) return;
    double bw = W / static_cast<double>(hist.counts.size());
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      double bh = H * static_cast<double>(hist.counts[i]) / static_cast<double>(peak);
      char buf[160];
      std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"%s\"/>",
                    i * bw, H - bh, std::max(bw - 1, 0.5), bh, fill);
      svg += buf;
    }
  };
  bars(h, "#4a7bb7");
  if (overlay) bars(*overlay, "rgba(214,96,77,0.55)");
  svg += "</svg>";
  return svg;
}

std::string boxplot_svg(const DimensionStats& d) {
  if (!d.min) return "";
  double lo = *d.min, hi = *d.max;
  double span = hi > lo ? hi - lo : 1.0;
  auto x = [&](double v) { return 10 + 400 * (std::clamp(v, lo, hi) - lo) / span; };
  char buf[640];
  std::snprintf(buf, sizeof buf,
                "<svg width=\"420\" height=\"40\" viewBox=\"0 0 420 40\">"
                "<line x1=\"%.1f\" y1=\"20\" x2=\"%.1f\" y2=\"20\" stroke=\"#555\"/>"
                "<rect x=\"%.1f\" y=\"8\" width=\"%.1f\" height=\"24\" fill=\"#cfdcec\" stroke=\"#555\"/>"
                "<line x1=\"%.1f\" y1=\"8\" x2=\"%.1f\" y2=\"32\" stroke=\"#222\" stroke-width=\"2\"/>"
                "</svg>",
                x(*d.lower_fence), x(*d.upper_fence), x(*d.p25), std::max(x(*d.p75) - x(*d.p25), 1.0), x(*d.p50),
                x(*d.p50));
  return buf;
}

}  // namespace

std::string render_html(const StatsReport& report, const Json* diff, std::string_view title) {
  std::string html = "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>" + esc(title) +
                     "</title>\n<style>body{font-family:sans-serif;margin:2em;color:#222}"
                     "table{border-collapse:collapse;margin:.5em 0}td,th{padding:2px 8px;border-bottom:1px solid #ddd;"
                     "text-align:right}h2{margin-top:1.6em}</style></head><body>\n";
  html += "<h1>" + esc(title) + "</h1>\n<p>samples: " + std::to_string(report.samples) +
          ", bytes: " + std::to_string(report.bytes) + ", tokens: " + std::to_string(report.tokens) + "</p>\n";
  if (diff && diff->contains("funnel") && !(*diff)["funnel"].empty()) {
    html += "<h2>funnel</h2><table><tr><th>stage</th><th>in</th><th>out</th><th>removed</th></tr>";
    for (const auto& s : (*diff)["funnel"]) {
      html += "<tr><td>" + esc(s["stage"].get<std::string>()) + "</td><td>" + std::to_string(s["in"].get<std::uint64_t>()) +
              "</td><td>" + std::to_string(s["out"].get<std::uint64_t>()) + "</td><td>" +
              std::to_string(s["removed"].get<std::uint64_t>()) + "</td></tr>";
    }
    html += "</table>\n";
  }
  for (const auto& d : report.dims) {
    html += "<h2>" + esc(d.name) + "</h2>\n<table><tr><th>count</th><th>mean</th><th>std</th><th>min</th><th>p5</th>"
            "<th>p25</th><th>p50</th><th>p75</th><th>p95</th><th>max</th><th>entropy</th></tr><tr>";
    html += "<td>" + std::to_string(d.count) + "</td>";
    for (const auto* v : {&d.mean, &d.std, &d.min, &d.p5, &d.p25, &d.p50, &d.p75, &d.p95, &d.max, &d.entropy}) {
      html += "<td>" + num(*v) + "</td>";
    }
    html += "</tr></table>\n";
    std::optional<Histogram> before;
    if (diff && diff->contains("dims") && (*diff)["dims"].contains(d.name)) {
      const Json& b = (*diff)["dims"][d.name]["before"];
      if (b.is_object()) {
        Histogram h;
        h.counts = b["histogram"]["counts"].get<std::vector<std::uint64_t>>();
        before = h;
      }
    }
    html += histogram_svg(d.histogram, before ? &*before : nullptr);
    html += "<br>" + boxplot_svg(d) + "\n";
  }
  html += "<script type=\"application/json\" id=\"report-data\">";
  std::string data = to_json(report).dump();
  // Keep the embedded JSON from closing the script element.
  for (std::size_t p = data.find("</"); p != std::string::npos; p = data.find("</", p + 2)) data.replace(p, 2, "<\\/");
  html += data;
  html += "</script>\n</body></html>\n";
  return html;
}

// ---------------------------------------------------------------------------
// Tracer

std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Discarded: return "discarded";
    case TraceKind::Edited: return "edited";
    case TraceKind::DuplicatePair: return "duplicate_pair";
  }
  return "?";
}

Json TraceRecord::to_json() const {
  Json j = {{"op", op}, {"stage", stage}, {"kind", std::string(insight::to_string(kind))}};
  switch (kind) {
    case TraceKind::Discarded: {
      j["id"] = sample_id;
      j["text"] = text;
      Json st = Json::object();
      for (const auto& [k, v] : stats) st[k] = v;
      j["stats"] = st;
      break;
    }
    case TraceKind::Edited:
      j["id"] = sample_id;
      j["before"] = text;
      j["after"] = after;
      j["span"] = {span_start, span_end_before, span_end_after};
      break;
    case TraceKind::DuplicatePair:
      j["kept_id"] = kept_id;
      j["removed_id"] = sample_id;
      j["score"] = score;
      j["removed_text"] = text;
      break;
  }
  return j;
}

void TraceBuffer::offer(TraceRecord record) {
  if (budget_ == 0) return;
  std::uint64_t rank = hash64(record.op + '\x1f' + std::to_string(record.sample_id), seed_);
  auto& kept = kept_[record.op];
  auto key = std::make_pair(rank, record.sample_id);
  if (kept.size() >= budget_ && key >= kept.rbegin()->first) return;
  kept.emplace(key, std::move(record));
  if (kept.size() > budget_) kept.erase(std::prev(kept.end()));
}

void TraceBuffer::discarded(std::size_t stage, const std::string& op, const Sample& sample) {
  ++counters_[op].discarded;
  ++removals_[stage];
  TraceRecord r;
  r.op = op;
  r.stage = stage;
  r.kind = TraceKind::Discarded;
  r.sample_id = sample.id;
  r.text = sample.text;
  r.stats = sample.stats;
  offer(std::move(r));
}

void TraceBuffer::edited(std::size_t stage, const std::string& op, std::uint64_t id, std::string_view before,
                         std::string_view after) {
  ++counters_[op].edited;
  TraceRecord r;
  r.op = op;
  r.stage = stage;
  r.kind = TraceKind::Edited;
  r.sample_id = id;
  std::size_t prefix = 0;
  while (prefix < before.size() && prefix < after.size() && before[prefix] == after[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < before.size() - prefix && suffix < after.size() - prefix &&
         before[before.size() - 1 - suffix] == after[after.size() - 1 - suffix]) {
    ++suffix;
  }
  r.span_start = prefix;
  r.span_end_before = before.size() - suffix;
  r.span_end_after = after.size() - suffix;
  r.text = before;
  r.after = after;
  offer(std::move(r));
}

void TraceBuffer::duplicate(std::size_t stage, const std::string& op, const DuplicatePair& pair, std::string_view removed_text) {
  ++counters_[op].duplicates;
  ++removals_[stage];
  TraceRecord r;
  r.op = op;
  r.stage = stage;
  r.kind = TraceKind::DuplicatePair;
  r.sample_id = pair.removed_id;
  r.kept_id = pair.kept_id;
  r.score = pair.score;
  r.text = removed_text;
  offer(std::move(r));
}

void TraceBuffer::merge(TraceBuffer&& other) {
  for (const auto& [op, c] : other.counters_) {
    auto& mine = counters_[op];
    mine.discarded += c.discarded;
    mine.edited += c.edited;
    mine.duplicates += c.duplicates;
  }
  for (const auto& [stage, n] : other.removals_) removals_[stage] += n;
  for (auto& [op, kept] : other.kept_) {
    for (auto& [key, rec] : kept) offer(std::move(rec));
  }
}

std::vector<TraceRecord> TraceBuffer::records(const std::string& op) const {
  std::vector<TraceRecord> out;
  auto it = kept_.find(op);
  if (it == kept_.end()) return out;
  for (const auto& [key, rec] : it->second) out.push_back(rec);
  std::sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) { return a.sample_id < b.sample_id; });
  return out;
}

void Tracer::merge(TraceBuffer&& buffer) {
  std::lock_guard lock(mu_);
  all_.merge(std::move(buffer));
}

void Tracer::stage(std::size_t, std::string label, std::uint64_t in, std::uint64_t out) {
  std::lock_guard lock(mu_);
  funnel_.push_back({std::move(label), in, out});
}

std::uint64_t Tracer::stage_removals(std::size_t index) const {
  std::lock_guard lock(mu_);
  auto it = all_.stage_removals().find(index);
  return it == all_.stage_removals().end() ? 0 : it->second;
}

void Tracer::write(const std::filesystem::path& dir) const {
  std::lock_guard lock(mu_);
  std::filesystem::create_directories(dir);
  Json counters = Json::object();
  for (const auto& [op, c] : all_.counters()) {
    counters[op] = {{"discarded", c.discarded}, {"edited", c.edited}, {"duplicates", c.duplicates}};
    std::string lines;
    for (const auto& rec : all_.records(op)) lines += rec.to_json().dump() + "\n";
    write_file_atomic(dir / (op + ".jsonl"), lines);
  }
  Json funnel = Json::array();
  for (const auto& s : funnel_) funnel.push_back({{"stage", s.stage}, {"in", s.in}, {"out", s.out}});
  write_file_atomic(dir / "counters.json", Json{{"ops", counters}, {"funnel", funnel}}.dump(2) + "\n");
}

}  // namespace forge::insight
