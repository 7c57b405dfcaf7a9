#include "forge/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forge/error.hpp"
#include "forge/insight.hpp"
#include "forge/log.hpp"
#include "forge/random.hpp"
#include "forge/resources.hpp"
#include "forge/text.hpp"

namespace forge::sampler {

namespace {

constexpr const char* kMissing = "missing";

enum class Source { Stat, Meta, Text };

struct Dimension {
  Source source = Source::Stat;
  std::string stat_key;
  FieldPath path;
  std::string analyzer_dim;  // non-empty when the stat can be computed
};

Dimension resolve_dimension(const std::string& name) {
  Dimension d;
  auto analyzer_dim_for = [](const std::string& key) -> std::string {
    for (const auto& dim : insight::dimensions()) {
      if (insight::dimension_source(dim).stat_key == key) return dim;
    }
    return {};
  };
  if (name == "text" || name.starts_with("meta.") || name.starts_with("stats.")) {
    d.path = FieldPath::parse(name);
    if (d.path.root() == FieldPath::Root::Text) {
      d.source = Source::Text;
    } else if (d.path.root() == FieldPath::Root::Meta) {
      d.source = Source::Meta;
    } else {
      d.stat_key = d.path.stat_key();
      d.analyzer_dim = analyzer_dim_for(d.stat_key);
    }
    return d;
  }
  const auto& dims = insight::dimensions();
  if (std::find(dims.begin(), dims.end(), name) == dims.end()) {
    throw UnknownDimension("unknown sampling dimension '" + name + "' (use stats.<key>, meta.<path>, text, or an analyzer dimension)");
  }
  d.stat_key = insight::dimension_source(name).stat_key;
  d.analyzer_dim = name;
  return d;
}

std::string categorical_label(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::uint64_t stratum_seed(std::uint64_t seed, std::string_view label) { return mix64(seed ^ hash64(label, 0x5eed)); }

std::size_t quota_count(const Quota& q, std::size_t n) {
  if (q.kind == Quota::Kind::Count) return static_cast<std::size_t>(q.value);
  return static_cast<std::size_t>(std::floor(q.value * static_cast<double>(n) + 1e-9));
}

Quota quota_from_json(const Json& j, const std::string& label) {
  Quota q;
  if (j.is_number_integer() || j.is_number_unsigned()) {
    q.value = j.get<double>();
  } else if (j.is_number_float()) {
    double v = j.get<double>();
    // Fractional values are proportions; integral floats are counts.
    if (v < 1.0 || v != std::floor(v)) {
      q.kind = Quota::Kind::Proportion;
    }
    q.value = v;
  } else if (j.is_object() && j.contains("proportion")) {
    q.kind = Quota::Kind::Proportion;
    q.value = j["proportion"].get<double>();
  } else if (j.is_object() && j.contains("count")) {
    q.value = j["count"].get<double>();
  } else {
    throw ParamError("quota for stratum '" + label + "' must be a count, a proportion, or {count|proportion: x}");
  }
  return q;
}

void validate(const StrataSpec& spec) {
  double proportions = 0;
  auto check = [&](const Quota& q, const std::string& label) {
    if (!(q.value >= 0) || !std::isfinite(q.value)) throw ParamError("quota for stratum '" + label + "' must be >= 0");
    if (q.kind == Quota::Kind::Count && q.value != std::floor(q.value)) {
      throw ParamError("count quota for stratum '" + label + "' must be an integer");
    }
    if (q.kind == Quota::Kind::Proportion) proportions += q.value;
  };
  for (const auto& [label, q] : spec.quotas) check(q, label);
  if (spec.default_quota) check(*spec.default_quota, "<default>");
  if (proportions > 1.0 + 1e-9) throw ParamError("stratum proportions sum to more than 1");
  if ((spec.binning == Binning::EqualWidth || spec.binning == Binning::Quantile) && spec.bins == 0) {
    throw ParamError("bins must be >= 1");
  }
  if (!spec.labels.empty() && spec.labels.size() != spec.bins) {
    throw ParamError("labels has " + std::to_string(spec.labels.size()) + " entries but bins is " +
                     std::to_string(spec.bins));
  }
}

// Stratum labels in report order for the given binning.
std::vector<std::string> ordered_labels(const StrataSpec& spec, const std::vector<std::string>& assigned) {
  std::vector<std::string> out;
  if (spec.binning == Binning::EqualWidth || spec.binning == Binning::Quantile) {
    for (std::size_t i = 0; i < spec.bins; ++i) {
      out.push_back(spec.labels.empty() ? "bin" + std::to_string(i) : spec.labels[i]);
    }
  } else {
    out = assigned;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    std::erase(out, kMissing);
  }
  for (const auto& [label, q] : spec.quotas) {
    if (std::find(out.begin(), out.end(), label) == out.end() && label != kMissing) out.push_back(label);
  }
  if (std::find(assigned.begin(), assigned.end(), kMissing) != assigned.end()) out.push_back(kMissing);
  return out;
}

}  // namespace

const char* to_string(Binning b) {
  switch (b) {
    case Binning::EqualWidth: return "equal_width";
    case Binning::Quantile: return "quantile";
    case Binning::Categorical: return "categorical";
    case Binning::VerbLexicon: return "verb_lexicon";
  }
  return "?";
}

Binning binning_from_string(std::string_view s) {
  if (s == "equal_width") return Binning::EqualWidth;
  if (s == "quantile") return Binning::Quantile;
  if (s == "categorical") return Binning::Categorical;
  if (s == "verb_lexicon") return Binning::VerbLexicon;
  throw ParamError("unknown binning '" + std::string(s) + "' (expected equal_width, quantile, categorical or verb_lexicon)");
}

StrataSpec StrataSpec::from_json(const Json& j) {
  if (!j.is_object()) throw ParamError("strata spec must be a mapping");
  StrataSpec spec;
  for (const auto& [key, v] : j.items()) {
    if (key == "dimension") spec.dimension = v.get<std::string>();
    else if (key == "binning") spec.binning = binning_from_string(v.get<std::string>());
    else if (key == "bins") spec.bins = v.get<std::size_t>();
    else if (key == "labels") spec.labels = v.get<std::vector<std::string>>();
    else if (key == "quotas") {
      if (!v.is_object()) throw ParamError("quotas must be a mapping of stratum -> quota");
      for (const auto& [label, q] : v.items()) spec.quotas[label] = quota_from_json(q, label);
    } else if (key == "default_quota") spec.default_quota = quota_from_json(v, "<default>");
    else if (key == "seed") spec.seed = v.get<std::uint64_t>();
    else if (key == "workers" || key == "np") spec.workers = v.get<std::size_t>();
    else if (key == "filter_params") {
      for (const auto& [name, p] : v.items()) spec.filter_params[name] = p;
    } else {
      throw ParamError("unknown strata key '" + key + "'");
    }
  }
  if (spec.dimension.empty()) throw ParamError("strata spec needs a dimension");
  return spec;
}

std::string leading_verb(std::string_view text) {
  static const std::vector<std::string> lexicon = [] {
    auto v = reference::instruction_verbs();
    std::sort(v.begin(), v.end());
    return v;
  }();
  auto tokens = text::words(text);
  if (tokens.empty()) return "other";
  std::string first = tokens.front();
  // Strip trailing punctuation ("Explain:" -> "explain").
  while (!first.empty() && std::ispunct(static_cast<unsigned char>(first.back()))) first.pop_back();
  if (std::binary_search(lexicon.begin(), lexicon.end(), first)) return first;
  return "other";
}

std::vector<std::string> assign_strata(const Dataset& dataset, const StrataSpec& spec, Dataset* with_stats) {
  validate(spec);
  Dimension dim = resolve_dimension(spec.dimension);
  bool numeric = spec.binning == Binning::EqualWidth || spec.binning == Binning::Quantile;
  if (spec.binning == Binning::VerbLexicon && dim.source == Source::Stat) {
    throw ParamError("verb_lexicon binning needs a text field, not " + spec.dimension);
  }
  if (numeric && dim.source == Source::Text) throw ParamError("numeric binning needs a stat or numeric meta field");

  const Dataset* ds = &dataset;
  Dataset computed;
  if (dim.source == Source::Stat) {
    bool missing = std::any_of(dataset.begin(), dataset.end(), [&](const Sample& s) { return !s.stats.contains(dim.stat_key); });
    if (missing) {
      if (dim.analyzer_dim.empty()) {
        throw UnknownDimension("stat '" + dim.stat_key + "' is missing and no analyzer dimension computes it");
      }
      insight::AnalyzeOptions opts;
      opts.dims = {dim.analyzer_dim};
      opts.workers = spec.workers;
      opts.filter_params = spec.filter_params;
      insight::analyze(dataset, opts, &computed);
      ds = &computed;
    }
  }

  std::vector<std::string> labels(ds->size());
  std::vector<std::optional<double>> values(ds->size());
  bool any_present = ds->empty();
  for (std::size_t i = 0; i < ds->size(); ++i) {
    const Sample& s = (*ds)[i];
    if (dim.source == Source::Stat) {
      values[i] = s.stats.at(dim.stat_key);
      any_present = true;
      continue;
    }
    if (dim.source == Source::Text) {
      labels[i] = spec.binning == Binning::VerbLexicon ? leading_verb(s.text) : s.text;
      any_present = true;
      continue;
    }
    const Json* v = find_meta(s, dim.path);
    if (!v || v->is_null()) {
      labels[i] = kMissing;
      continue;
    }
    any_present = true;
    if (numeric) {
      if (!v->is_number()) throw FieldTypeError(spec.dimension + " is not numeric in sample " + std::to_string(s.id));
      values[i] = v->get<double>();
    } else if (spec.binning == Binning::VerbLexicon) {
      if (!v->is_string()) throw FieldTypeError(spec.dimension + " is not a string in sample " + std::to_string(s.id));
      labels[i] = leading_verb(v->get_ref<const std::string&>());
    } else {
      labels[i] = categorical_label(*v);
    }
  }
  if (!any_present) throw UnknownDimension("dimension '" + spec.dimension + "' is absent from every sample");

  if (dim.source == Source::Stat && !numeric) {
    for (std::size_t i = 0; i < ds->size(); ++i) labels[i] = categorical_label(Json(*values[i]));
  } else if (numeric) {
    std::vector<double> present;
    for (const auto& v : values) {
      if (v) present.push_back(*v);
    }
    auto name = [&](std::size_t b) { return spec.labels.empty() ? "bin" + std::to_string(b) : spec.labels[b]; };
    const std::size_t k = spec.bins;
    std::vector<double> edges;
    double lo = 0, hi = 0;
    if (!present.empty()) {
      std::sort(present.begin(), present.end());
      lo = present.front();
      hi = present.back();
      if (spec.binning == Binning::Quantile) {
        for (std::size_t e = 1; e < k; ++e) {
          edges.push_back(insight::nearest_rank(present, static_cast<double>(e) / static_cast<double>(k)));
        }
      }
    }
    for (std::size_t i = 0; i < ds->size(); ++i) {
      if (!values[i]) continue;
      double v = *values[i];
      std::size_t b = 0;
      if (spec.binning == Binning::EqualWidth) {
        if (hi > lo) {
          b = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(k)));
          b = std::min(b, k - 1);
        }
      } else {
        b = static_cast<std::size_t>(std::count_if(edges.begin(), edges.end(), [&](double e) { return v > e; }));
      }
      labels[i] = name(b);
    }
  }
  if (with_stats) *with_stats = *ds;
  return labels;
}

SampleResult stratified_sample(const Dataset& dataset, const StrataSpec& spec) {
  auto labels = assign_strata(dataset, spec);
  auto order = ordered_labels(spec, labels);
  std::map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  SampleResult result;
  std::vector<std::size_t> chosen;
  for (const auto& label : order) {
    StratumReport r;
    r.label = label;
    auto it = members.find(label);
    std::vector<std::size_t> idx = it == members.end() ? std::vector<std::size_t>() : it->second;
    r.size = idx.size();
    auto q = spec.quotas.find(label);
    if (q != spec.quotas.end()) r.quota = quota_count(q->second, dataset.size());
    else if (spec.default_quota) r.quota = quota_count(*spec.default_quota, dataset.size());
    r.taken = std::min(r.quota, r.size);
    std::mt19937_64 rng(stratum_seed(spec.seed, label));
    // Partial Fisher-Yates: the first `taken` slots are a uniform draw.
    for (std::size_t i = 0; i < r.taken; ++i) {
      std::size_t j = i + uniform_below(rng, idx.size() - i);
      std::swap(idx[i], idx[j]);
    }
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(r.taken));
    if (r.shortfall() > 0) {
      log::warn("stratum '{}' has {} samples, quota {}: shortfall {}", label, r.size, r.quota, r.shortfall());
    }
    result.strata.push_back(std::move(r));
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<Sample> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(dataset[i]);
  result.dataset = Dataset(std::move(out), dataset.schema());
  return result;
}

Json SampleResult::report_json() const {
  Json strata_json = Json::array();
  std::size_t shortfall = 0;
  for (const auto& r : strata) {
    strata_json.push_back(
        {{"stratum", r.label}, {"size", r.size}, {"quota", r.quota}, {"taken", r.taken}, {"shortfall", r.shortfall()}});
    shortfall += r.shortfall();
  }
  return Json{{"samples", dataset.size()}, {"total_shortfall", shortfall}, {"strata", strata_json}};
}

Dataset proportional_subsample(const Dataset& dataset, double fraction, std::uint64_t seed,
                               const std::string& dimension, std::size_t bins) {
  if (!(fraction > 0) || fraction > 1) throw ParamError("subsample fraction must be in (0, 1]");
  if (fraction == 1.0 || dataset.empty()) return dataset;
  StrataSpec spec;
  spec.dimension = dimension;
  spec.binning = Binning::Quantile;
  spec.bins = bins;
  spec.seed = seed;
  auto labels = assign_strata(dataset, spec);
  std::map<std::string, std::size_t> sizes;
  for (const auto& l : labels) ++sizes[l];
  for (const auto& [label, n] : sizes) {
    auto take = static_cast<double>(std::llround(fraction * static_cast<double>(n)));
    spec.quotas[label] = Quota{Quota::Kind::Count, std::max(1.0, take)};
  }
  return stratified_sample(dataset, spec).dataset;
}

MixResult mix(const MixtureSpec& spec, std::uint64_t seed) {
  const std::size_t m = spec.sources.size();
  if (m == 0) throw ParamError("mixture needs at least one source");
  if (spec.weights.size() != m) {
    throw ParamError("mixture has " + std::to_string(m) + " sources but " + std::to_string(spec.weights.size()) + " weights");
  }
  if (!spec.names.empty() && spec.names.size() != m) throw ParamError("mixture names must match sources");
  double total = 0;
  for (double w : spec.weights) {
    if (!(w >= 0 && w <= 1)) throw ParamError("mixture weights must be in [0, 1]");
    total += w;
  }
  if (total <= 0) throw ParamError("mixture weights sum to zero");

  MixResult result;
  std::vector<Sample> out;
  Schema schema{"text", "meta.source"};
  for (std::size_t i = 0; i < m; ++i) {
    const Dataset& src = spec.sources[i];
    schema.insert(src.schema().begin(), src.schema().end());
    auto count = static_cast<std::size_t>(
        std::floor(static_cast<double>(spec.target) * spec.weights[i] / total + 1e-9));
    std::string name = spec.names.empty() ? "source" + std::to_string(i) : spec.names[i];
    std::mt19937_64 rng(mix64(seed + 0x9e3779b97f4a7c15ULL * (i + 1)));
    std::vector<std::size_t> picks;
    bool replace = count > src.size();
    if (count > 0 && src.empty()) throw ParamError("mixture source '" + name + "' is empty");
    if (replace) {
      log::warn("mixture source '{}' has {} samples for a draw of {}: sampling with replacement", name, src.size(), count);
      for (std::size_t k = 0; k < count; ++k) picks.push_back(uniform_below(rng, src.size()));
    } else {
      std::vector<std::size_t> idx(src.size());
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t k = 0; k < count; ++k) {
        std::size_t j = k + uniform_below(rng, idx.size() - k);
        std::swap(idx[k], idx[j]);
      }
      picks.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(picks.begin(), picks.end());
    }
    for (std::size_t k = 0; k < picks.size(); ++k) {
      Sample s = src[picks[k]];
      s.id = make_sample_id(i, k);
      s.meta["source"] = name;
      out.push_back(std::move(s));
    }
    result.counts.push_back(count);
    result.with_replacement.push_back(replace);
  }
  result.dataset = Dataset(std::move(out), std::move(schema));
  return result;
}

Json MixResult::report_json(const MixtureSpec& spec) const {
  Json sources = Json::array();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sources.push_back({{"source", spec.names.empty() ? "source" + std::to_string(i) : spec.names[i]},
                       {"weight", spec.weights[i]},
                       {"available", spec.sources[i].size()},
                       {"drawn", counts[i]},
                       {"with_replacement", static_cast<bool>(with_replacement[i])}});
  }
  return Json{{"target", spec.target}, {"samples", dataset.size()}, {"sources", sources}};
}

}  // namespace forge::sampler
