#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "forge/core.hpp"
#include "forge/quality.hpp"

// Random and successive-halving search over recipe params and mixture
// weights.
namespace forge::hpo {

struct Param {
  enum class Kind { Continuous, Integer, Categorical };
  std::string name;
  Kind kind = Kind::Continuous;
  double lo = 0, hi = 1;
  std::vector<Json> choices;
  /// Where the value goes: a recipe override path (`word_count_filter.min`)
  /// or a mixture weight (`weight.<i>`). Defaults to the name.
  std::string binding;

  Json draw(std::mt19937_64& rng) const;
  /// Numeric view for correlation: the value, or the choice index.
  double numeric(const Json& value) const;
};

struct SearchSpace {
  std::vector<Param> params;

  /// `{name: {type: float|int|choice, low, high, choices, binding}}`.
  static SearchSpace from_json(const Json& j);
  const Param* find(std::string_view name) const;
};

struct Trial {
  std::size_t index = 0;
  /// Configuration id; halving re-evaluates a config at several rungs.
  std::size_t config = 0;
  std::size_t rung = 0;
  double fraction = 1.0;
  Json assignment = Json::object();
  std::optional<double> value;
  std::string error;
  Json artifacts = Json::object();

  bool failed() const { return !value.has_value(); }
  Json to_json() const;
};

/// Value for an assignment evaluated on `fraction` of the input. A throw
/// or non-finite value marks the trial failed.
using Objective = std::function<double(const Json& assignment, double fraction, Json& artifacts)>;

enum class Scheduler { Random, Halving };
Scheduler scheduler_from_string(std::string_view s);

struct SearchOptions {
  Scheduler scheduler = Scheduler::Random;
  /// Number of configurations drawn.
  std::size_t budget = 20;
  std::uint64_t seed = 42;
  double eta = 3.0;
  std::vector<double> fractions = {1.0 / 9.0, 1.0 / 3.0, 1.0};
  bool maximize = true;
  /// Trials within one batch run concurrently when > 1. The objective must
  /// then be thread-safe.
  std::size_t parallel_trials = 1;
  /// History JSONL, one trial per line, appended as trials finish.
  std::optional<std::filesystem::path> history_path;
};

struct SearchResult {
  std::optional<Trial> best;
  std::vector<Trial> history;
  /// Sum of evaluated fractions; a full-size evaluation counts 1.
  double evaluation_units = 0;

  Json to_json() const;
};

/// Throws ParamError when budget is 0 or the space is empty.
SearchResult search(const SearchSpace& space, const Objective& objective, const SearchOptions& options);

/// Whitespace tokens by default; any Tokenizer may be passed.
std::uint64_t count_tokens(const Dataset& dataset, const quality::Tokenizer& tokenizer = quality::WhitespaceTokenizer());

/// n / N + s: n tokens in `mixed`, s the mean quality score (stats
/// .quality_score, else scored with `model`, else 0 for an empty set).
double objective_mix_quality(const Dataset& mixed, std::uint64_t total_tokens, const quality::QualityModel* model,
                             const quality::Tokenizer& tokenizer = quality::WhitespaceTokenizer());
double objective_mix_quality(std::uint64_t n, std::uint64_t total_tokens, double mean_score);

/// Zero when either side has zero variance or fewer than two points.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson over average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Per param: pearson, spearman, importance = |spearman| / sum |spearman|.
/// Uses completed trials; with fewer than two, every value is null.
Json importance_report(const SearchSpace& space, const std::vector<Trial>& history);

std::vector<Trial> read_history(const std::filesystem::path& path);

}  // namespace forge::hpo
