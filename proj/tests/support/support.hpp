#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "forge/core.hpp"
#include "forge/pipeline.hpp"

// Shared test fixtures: corpus generators, the naive reference executor and
// independent oracles.
namespace forge::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "forge-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct CorpusOptions {
  /// Share of documents that repeat or lightly edit an earlier one.
  double duplicate_rate = 0.05;
  bool with_meta = true;
};

/// Mixed documents: prose, link/email noise, repetitive spam, symbol runs,
/// CJK, code, short fragments and (near-)duplicates.
Dataset synthetic_corpus(std::size_t n, std::uint64_t seed, const CorpusOptions& options = {});

/// Short one-line documents for throughput tests.
Dataset short_docs(std::size_t n, std::uint64_t seed);

/// English-like prose with `words` words drawn from the shared vocabulary.
std::string prose(std::mt19937_64& rng, std::size_t words);

struct PlantedCorpus {
  Dataset dataset;
  /// (original id, duplicate id) with exact 5-shingle Jaccard >= 0.8.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
};

PlantedCorpus planted_duplicates(std::size_t pairs, std::size_t distractors, std::uint64_t seed);

/// Random recipe over the sample-level and dedup catalog, 2..max_ops ops.
std::string random_recipe(std::mt19937_64& rng, std::size_t max_ops = 8);

/// Applies the recipe ops one at a time in recipe order, with a fresh
/// context per op: no fusion, no reordering, no sharding.
Dataset naive_execute(const pipeline::Recipe& recipe, Dataset dataset);

// --- oracles ---------------------------------------------------------------

/// Word k-gram strings (lowercased whitespace tokens), no hashing.
std::vector<std::string> oracle_shingles(const std::string& text, std::size_t k);
double oracle_jaccard(const std::string& a, const std::string& b, std::size_t k);

/// Nearest-rank quantile by full sort.
double oracle_quantile(std::vector<double> values, double q);

}  // namespace forge::testing
