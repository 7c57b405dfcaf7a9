#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/core.hpp"

// Stratified sampling over a stat/meta dimension, and weighted mixing of
// several datasets.
namespace forge::sampler {

enum class Binning { EqualWidth, Quantile, Categorical, VerbLexicon };

const char* to_string(Binning b);
Binning binning_from_string(std::string_view s);

struct Quota {
  enum class Kind { Count, Proportion } kind = Kind::Count;
  /// A count, or a share of the whole dataset.
  double value = 0;
};

struct StrataSpec {
  /// `stats.<key>`, `meta.<path>`, `text`, or a bare analyzer dimension
  /// name such as `word_count`.
  std::string dimension;
  Binning binning = Binning::Categorical;
  /// Bin count for equal_width / quantile.
  std::size_t bins = 4;
  /// Optional names for numeric bins, lowest first; default `bin<i>`.
  std::vector<std::string> labels;
  std::map<std::string, Quota> quotas;
  /// Applied to strata not named in `quotas`; absent means 0.
  std::optional<Quota> default_quota;
  std::uint64_t seed = 42;
  /// Filter params used when the dimension stat must be computed.
  std::map<std::string, Json> filter_params;
  std::size_t workers = 1;

  static StrataSpec from_json(const Json& j);
};

struct StratumReport {
  std::string label;
  std::size_t size = 0;
  std::size_t quota = 0;
  std::size_t taken = 0;
  std::size_t shortfall() const { return quota > taken ? quota - taken : 0; }
};

struct SampleResult {
  Dataset dataset;
  /// In stratum order (numeric bins ascending, categories sorted).
  std::vector<StratumReport> strata;

  Json report_json() const;
};

/// Each stratum contributes min(quota, size) samples drawn uniformly without
/// replacement. Output keeps dataset order. Throws UnknownDimension.
SampleResult stratified_sample(const Dataset& dataset, const StrataSpec& spec);

/// Stratum label for every sample, in dataset order, with missing stats
/// computed through the analyzer when the dimension is a known stat.
std::vector<std::string> assign_strata(const Dataset& dataset, const StrataSpec& spec, Dataset* with_stats = nullptr);

/// First token of `text` when it is in the shipped instruction-verb
/// lexicon, else "other". A stand-in for dependency-parsed verbs.
std::string leading_verb(std::string_view text);

/// `fraction` of every quantile stratum on `dimension`, so the subset keeps
/// the input's shape.
Dataset proportional_subsample(const Dataset& dataset, double fraction, std::uint64_t seed,
                               const std::string& dimension = "word_count", std::size_t bins = 4);

struct MixtureSpec {
  std::vector<Dataset> sources;
  std::vector<double> weights;
  /// meta.source tag per source; default `source<i>`.
  std::vector<std::string> names;
  std::size_t target = 0;
};

struct MixResult {
  Dataset dataset;
  std::vector<std::size_t> counts;
  /// Source was oversubscribed and drawn with replacement.
  std::vector<bool> with_replacement;

  Json report_json(const MixtureSpec& spec) const;
};

/// floor(target * w_i / sum w) samples from source i, tagged with
/// meta.source and renumbered (shard = source index).
MixResult mix(const MixtureSpec& spec, std::uint64_t seed);

}  // namespace forge::sampler
