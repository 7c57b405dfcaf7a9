#include "forge/quality.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/parallel.hpp"
#include "forge/random.hpp"
#include "forge/text.hpp"

namespace forge::quality {

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

namespace {

constexpr char kMagic[4] = {'F', 'Q', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

void check_h(int h) {
  if (h < 10 || h > 26) throw ParamError("feature bits h must be in [10, 26], got " + std::to_string(h));
}

// Codepoint-aligned prefix lengths of s, longest first, capped at max_bytes.
std::vector<std::size_t> prefix_lengths(std::string_view s, std::size_t max_bytes) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    text::next_codepoint(s, pos);
    if (pos > max_bytes) break;
    out.push_back(pos);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Example> to_examples(const Dataset& ds, int y, const std::vector<std::size_t>& idx, int h,
                                 const FieldPath& field, const Tokenizer& tok) {
  std::vector<Example> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back({featurize(field_text(ds[i], field), h, tok), y});
  return out;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n) {
    if (data.size() - pos < n) throw IoError(path + ": truncated model file");
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string get_str() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s(data.substr(pos, n));
    pos += n;
    return s;
  }
};

}  // namespace

std::vector<std::string> WhitespaceTokenizer::tokenize(std::string_view text) const { return text::words(text); }

VocabTokenizer::VocabTokenizer(std::vector<std::string> pieces, std::string source)
    : pieces_(std::move(pieces)), source_(std::move(source)) {
  std::erase(pieces_, std::string());
  std::sort(pieces_.begin(), pieces_.end());
  pieces_.erase(std::unique(pieces_.begin(), pieces_.end()), pieces_.end());
  for (const auto& p : pieces_) max_len_ = std::max(max_len_, p.size());
}

VocabTokenizer VocabTokenizer::load(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) nl = content.size();
    std::string line = content.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Tab-separated score columns are ignored.
    if (auto tab = line.find('\t'); tab != std::string::npos) line.resize(tab);
    pieces.push_back(text::to_lower(text::nfc(line)));
    start = nl + 1;
  }
  return VocabTokenizer(std::move(pieces), path.string());
}

std::vector<std::string> VocabTokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& word : text::words(text)) {
    std::string_view rest = word;
    while (!rest.empty()) {
      auto lengths = prefix_lengths(rest, std::max<std::size_t>(max_len_, 1));
      std::size_t take = 0;
      for (std::size_t len : lengths) {
        if (std::binary_search(pieces_.begin(), pieces_.end(), rest.substr(0, len))) {
          take = len;
          break;
        }
      }
      if (take == 0) {
        std::size_t pos = 0;
        text::next_codepoint(rest, pos);
        take = pos;
      }
      out.emplace_back(rest.substr(0, take));
      rest.remove_prefix(take);
    }
  }
  return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec) {
  if (spec.empty() || spec == "whitespace") return std::make_unique<WhitespaceTokenizer>();
  if (spec.starts_with("vocab:")) return std::make_unique<VocabTokenizer>(VocabTokenizer::load(std::string(spec.substr(6))));
  throw ParamError("unknown tokenizer '" + std::string(spec) + "' (expected whitespace or vocab:<path>)");
}

SparseVector featurize(std::string_view text, int h, const Tokenizer& tokenizer) {
  check_h(h);
  const std::uint64_t mask = (std::uint64_t{1} << h) - 1;
  std::unordered_map<std::uint32_t, double> counts;
  for (const auto& tok : tokenizer.tokenize(text)) counts[static_cast<std::uint32_t>(hash64(tok) & mask)] += 1.0;
  SparseVector out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end());
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(const std::vector<double>& w, const SparseVector& x) {
  double z = 0;
  for (auto [i, v] : x) z += w[i] * v;
  return z;
}

}  // namespace

double loss_and_gradient(const std::vector<double>& w, double b, const std::vector<Example>& data, double l2,
                         std::vector<double>* grad_w, double* grad_b) {
  if (grad_w) grad_w->assign(w.size(), 0.0);
  if (grad_b) *grad_b = 0;
  double loss = 0;
  const double n = static_cast<double>(std::max<std::size_t>(1, data.size()));
  for (const auto& ex : data) {
    double z = dot(w, ex.x) + b;
    // -[y log s(z) + (1-y) log(1-s(z))] = softplus(z) - y z
    loss += softplus(z) - ex.y * z;
    if (grad_w || grad_b) {
      double r = (sigmoid(z) - ex.y) / n;
      if (grad_w) {
        for (auto [i, v] : ex.x) (*grad_w)[i] += r * v;
      }
      if (grad_b) *grad_b += r;
    }
  }
  loss /= n;
  double sq = 0;
  for (double x : w) sq += x * x;
  loss += 0.5 * l2 * sq;
  if (grad_w) {
    for (std::size_t i = 0; i < w.size(); ++i) (*grad_w)[i] += l2 * w[i];
  }
  return loss;
}

QualityModel QualityModel::zero(int h) {
  check_h(h);
  QualityModel m;
  m.h = h;
  m.weights.assign(std::size_t{1} << h, 0.0);
  return m;
}

double QualityModel::margin(const SparseVector& x) const { return dot(weights, x) + bias; }

EvalMetrics evaluate(const QualityModel& model, const std::vector<Example>& data) {
  EvalMetrics m;
  m.eval_size = data.size();
  for (const auto& ex : data) {
    bool pred = sigmoid(model.margin(ex.x)) > 0.5;
    if (pred && ex.y == 1) ++m.tp;
    else if (pred) ++m.fp;
    else if (ex.y == 1) ++m.fn;
    else ++m.tn;
  }
  m.precision = m.tp + m.fp ? double(m.tp) / double(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn ? double(m.tp) / double(m.tp + m.fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  m.accuracy = data.empty() ? 0.0 : double(m.tp + m.tn) / double(data.size());
  return m;
}

QualityModel train(const Dataset& positive, const Dataset& negative, const TrainOptions& options,
                   const Tokenizer& tokenizer) {
  if (positive.empty()) throw Degenerate("positive training set is empty");
  if (negative.empty()) throw Degenerate("negative training set is empty");
  if (options.lr <= 0) throw ParamError("lr must be positive");
  if (options.batch_size == 0) throw ParamError("batch_size must be positive");
  if (options.l2 < 0) throw ParamError("l2 must be non-negative");
  if (options.eval_fraction < 0 || options.eval_fraction >= 1) throw ParamError("eval_fraction must be in [0, 1)");
  QualityModel model = QualityModel::zero(options.h);
  model.tokenizer = tokenizer.id();

  std::mt19937_64 rng(options.seed);
  std::vector<Example> train_set, eval_set;
  auto split = [&](const Dataset& ds, int y) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    auto n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(ds.size()) * options.eval_fraction));
    n_eval = std::min(n_eval, ds.size() - 1);
    std::vector<std::size_t> ev(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_eval));
    std::vector<std::size_t> tr(idx.begin() + static_cast<std::ptrdiff_t>(n_eval), idx.end());
    auto a = to_examples(ds, y, tr, options.h, options.field, tokenizer);
    auto b = to_examples(ds, y, ev, options.h, options.field, tokenizer);
    std::move(a.begin(), a.end(), std::back_inserter(train_set));
    std::move(b.begin(), b.end(), std::back_inserter(eval_set));
  };
  split(positive, 1);
  split(negative, 0);

  auto& w = model.weights;
  model.epoch_losses.push_back(loss_and_gradient(w, model.bias, train_set, options.l2));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::unordered_map<std::uint32_t, double> grad;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order, rng);
    // Weights are stored as scale * v so the dense L2 decay is O(1) per batch.
    double scale = 1.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      std::size_t end = std::min(order.size(), start + options.batch_size);
      const double m = static_cast<double>(end - start);
      grad.clear();
      double gb = 0;
      for (std::size_t k = start; k < end; ++k) {
        const Example& ex = train_set[order[k]];
        double z = scale * dot(w, ex.x) + model.bias;
        double r = (sigmoid(z) - ex.y) / m;
        for (auto [i, v] : ex.x) grad[i] += r * v;
        gb += r;
      }
      scale *= 1.0 - options.lr * options.l2;
      for (auto [i, g] : grad) w[i] -= options.lr * g / scale;
      model.bias -= options.lr * gb;
      if (scale < 1e-100) {
        for (double& x : w) x *= scale;
        scale = 1.0;
      }
    }
    if (scale != 1.0) {
      for (double& x : w) x *= scale;
    }
    model.epoch_losses.push_back(loss_and_gradient(w, model.bias, train_set, options.l2));
    log::debug("quality epoch {}: loss {:.6f}", epoch + 1, model.epoch_losses.back());
  }

  model.eval = evaluate(model, eval_set);
  model.eval.train_size = train_set.size();
  model.metadata = Json{{"positive", positive.size()}, {"negative", negative.size()}, {"h", options.h},
                        {"lr", options.lr},         {"batch_size", options.batch_size},
                        {"l2", options.l2},         {"epochs", options.epochs},
                        {"seed", options.seed},     {"eval_fraction", options.eval_fraction},
                        {"field", options.field.str()}, {"tokenizer", model.tokenizer},
                        {"epoch_losses", model.epoch_losses},
                        {"eval",
                         {{"precision", model.eval.precision},
                          {"recall", model.eval.recall},
                          {"f1", model.eval.f1},
                          {"accuracy", model.eval.accuracy},
                          {"train_size", model.eval.train_size},
                          {"eval_size", model.eval.eval_size}}}};
  return model;
}

double score(const QualityModel& model, std::string_view text, const Tokenizer& tokenizer) {
  return sigmoid(model.margin(featurize(text, model.h, tokenizer)));
}

Dataset score_dataset(const QualityModel& model, Dataset dataset, std::size_t workers, const FieldPath& field) {
  auto tokenizer = make_tokenizer(model.tokenizer);
  auto& samples = dataset.mutable_samples();
  parallel_shards(samples.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      samples[i].stats["quality_score"] = score(model, field_text(samples[i], field), *tokenizer);
    }
  });
  dataset.declare("stats.quality_score");
  return dataset;
}

void save_model(const QualityModel& model, const std::filesystem::path& path) {
  check_h(model.h);
  if (model.weights.size() != (std::size_t{1} << model.h)) throw ParamError("model weight count does not match h");
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.h));
  put<double>(out, model.bias);
  put_str(out, model.tokenizer);
  put_str(out, model.metadata.dump());
  out.reserve(out.size() + model.weights.size() * sizeof(double));
  for (double x : model.weights) put<double>(out, x);
  write_file_atomic(path, out);
}

QualityModel load_model(const std::filesystem::path& path) {
  std::string content = read_file(path);
  Reader r{content, 0, path.string()};
  r.need(4);
  if (std::memcmp(content.data(), kMagic, 4) != 0) throw IoError(path.string() + ": not a quality model file");
  r.pos = 4;
  auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw IoError(path.string() + ": unsupported model version " + std::to_string(version));
  QualityModel m;
  m.h = static_cast<int>(r.get<std::uint32_t>());
  check_h(m.h);
  m.bias = r.get<double>();
  m.tokenizer = r.get_str();
  m.metadata = Json::parse(r.get_str());
  std::size_t n = std::size_t{1} << m.h;
  r.need(n * sizeof(double));
  m.weights.resize(n);
  std::memcpy(m.weights.data(), content.data() + r.pos, n * sizeof(double));
  if (m.metadata.contains("epoch_losses")) m.epoch_losses = m.metadata["epoch_losses"].get<std::vector<double>>();
  return m;
}

KeepKind keep_kind_from_string(std::string_view s) {
  if (s == "label") return KeepKind::Label;
  if (s == "pareto") return KeepKind::Pareto;
  throw ParamError("unknown keep method '" + std::string(s) + "' (expected label or pareto)");
}

double uniform_open0(std::mt19937_64& rng) { return 1.0 - uniform_unit(rng); }

double lomax(std::mt19937_64& rng, double alpha) {
  if (!(alpha > 0)) throw ParamError("pareto alpha must be positive");
  return std::pow(uniform_open0(rng), -1.0 / alpha) - 1.0;
}

bool Keeper::keep(double score) {
  if (rule_.kind == KeepKind::Label) return score > 0.5;
  return score > 1.0 - lomax(rng_, rule_.alpha);
}

Dataset apply_keep_rule(const Dataset& scored, KeepRule rule) {
  Keeper keeper(rule);
  std::vector<Sample> out;
  for (const auto& s : scored) {
    auto it = s.stats.find("quality_score");
    if (it == s.stats.end()) throw MissingStat("sample " + std::to_string(s.id) + " has no stats.quality_score");
    if (keeper.keep(it->second)) out.push_back(s);
  }
  return Dataset(std::move(out), scored.schema());
}

}  // namespace forge::quality
