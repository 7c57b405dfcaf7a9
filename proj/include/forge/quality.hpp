#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/core.hpp"

// Logistic-regression quality classifier over hashed term frequencies, and
// the label / Pareto keep rules.
namespace forge::quality {

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
  /// Stored in model files so scoring uses the tokenizer training used.
  virtual std::string id() const = 0;
};

/// Lowercased Unicode-whitespace tokens (CJK per code point).
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string id() const override { return "whitespace"; }
};

/// Greedy longest-match over a piece vocabulary (one piece per line),
/// applied to each whitespace token. Unmatched code points become single
/// pieces. A stand-in for subword models; no vocabulary ships.
class VocabTokenizer final : public Tokenizer {
 public:
  VocabTokenizer(std::vector<std::string> pieces, std::string source);
  static VocabTokenizer load(const std::filesystem::path& path);
  std::vector<std::string> tokenize(std::string_view text) const override;
  std::string id() const override { return "vocab:" + source_; }

 private:
  std::vector<std::string> pieces_;
  std::size_t max_len_ = 0;
  std::string source_;
};

/// Resolves a tokenizer id ("whitespace" or "vocab:<path>").
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view spec);

/// (index, count) pairs sorted by index.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

/// Token t adds 1 at hash(t) mod 2^h. ParamError unless 10 <= h <= 26.
SparseVector featurize(std::string_view text, int h, const Tokenizer& tokenizer = WhitespaceTokenizer());

double sigmoid(double z);

struct Example {
  SparseVector x;
  int y = 0;
};

/// Mean logistic loss + (l2 / 2) * |w|^2. Fills the dense gradient when
/// requested.
double loss_and_gradient(const std::vector<double>& w, double b, const std::vector<Example>& data, double l2,
                         std::vector<double>* grad_w = nullptr, double* grad_b = nullptr);

struct TrainOptions {
  int h = 20;
  double lr = 0.1;
  std::size_t batch_size = 256;
  double l2 = 1e-6;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  /// Share of each class held out for evaluation (4:1 split).
  double eval_fraction = 0.2;
  FieldPath field;
};

struct EvalMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
  std::size_t train_size = 0, eval_size = 0;
};

struct QualityModel {
  int h = 20;
  std::vector<double> weights;
  double bias = 0;
  std::string tokenizer = "whitespace";
  /// Training loss on the train split after each epoch (index 0 = before
  /// training).
  std::vector<double> epoch_losses;
  EvalMetrics eval;
  Json metadata = Json::object();

  static QualityModel zero(int h);
  double margin(const SparseVector& x) const;
};

/// Stratified 4:1 split per class, then shuffled mini-batch gradient
/// descent with L2. Throws Degenerate when a class is empty.
QualityModel train(const Dataset& positive, const Dataset& negative, const TrainOptions& options = {},
                   const Tokenizer& tokenizer = WhitespaceTokenizer());
EvalMetrics evaluate(const QualityModel& model, const std::vector<Example>& data);

double score(const QualityModel& model, std::string_view text, const Tokenizer& tokenizer = WhitespaceTokenizer());
/// Writes stats.quality_score on every sample.
Dataset score_dataset(const QualityModel& model, Dataset dataset, std::size_t workers = 1,
                      const FieldPath& field = FieldPath());

/// Versioned binary: "FQCM" | u32 version | u32 h | f64 bias |
/// str tokenizer | str metadata json | 2^h f64 weights.
void save_model(const QualityModel& model, const std::filesystem::path& path);
QualityModel load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Keep rules

enum class KeepKind { Label, Pareto };

struct KeepRule {
  KeepKind kind = KeepKind::Label;
  double alpha = 9.0;
  std::uint64_t seed = 42;
};

KeepKind keep_kind_from_string(std::string_view s);

/// U in (0, 1] from 53 random bits.
double uniform_open0(std::mt19937_64& rng);
/// Lomax(alpha) by inverse CDF: U^(-1/alpha) - 1.
double lomax(std::mt19937_64& rng, double alpha);

/// label: score > 0.5. pareto: score > 1 - X with X ~ Lomax(alpha), one
/// draw per call from the rule's seeded stream.
class Keeper {
 public:
  explicit Keeper(KeepRule rule) : rule_(rule), rng_(rule.seed) {}
  bool keep(double score);

 private:
  KeepRule rule_;
  std::mt19937_64 rng_;
};

/// Keeps samples by stats.quality_score, in dataset order.
Dataset apply_keep_rule(const Dataset& scored, KeepRule rule);

}  // namespace forge::quality
