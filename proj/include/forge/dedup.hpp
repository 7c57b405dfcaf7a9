#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/core.hpp"
#include "forge/ops.hpp"

// Hash-based (exact digest, MinHash-LSH) and vector-based (SimHash)
// deduplication. Every method keeps the first occurrence in dataset order.
namespace forge::dedup {

/// Sorted, unique 64-bit hashes of word k-grams. Texts with fewer than k
/// tokens (but at least one) yield a single shingle of all tokens.
using ShingleSet = std::vector<std::uint64_t>;
ShingleSet shingles(std::string_view text, std::size_t k);
/// |A ∩ B| / |A ∪ B|; two empty sets give 1.
double jaccard(const ShingleSet& a, const ShingleSet& b);

struct MinHashSignature {
  std::size_t k = 5;
  std::size_t num_perm = 128;
  std::vector<std::uint64_t> values;
};

/// p independent permutations h_i(x) = mix(a_i * x + b_i), a_i odd.
class MinHasher {
 public:
  MinHasher(std::size_t num_perm, std::uint64_t seed);
  std::vector<std::uint64_t> signature(const ShingleSet& shingles) const;
  std::size_t num_perm() const noexcept { return a_.size(); }

 private:
  std::vector<std::uint64_t> a_;
  std::vector<std::uint64_t> b_;
};

MinHashSignature minhash_signature(std::string_view text, std::size_t k, std::size_t num_perm, std::uint64_t seed);
/// Fraction of matching positions.
double signature_similarity(const MinHashSignature& a, const MinHashSignature& b);
/// 1 - (1 - J^r)^b
double lsh_candidate_probability(double jaccard, std::size_t bands, std::size_t rows);

std::uint64_t simhash(std::string_view text);
int hamming(std::uint64_t a, std::uint64_t b);

/// Paired-dataset mode: when `remove_from_source` is set, only samples whose
/// `meta.source` equals it are removable; every other sample is a reference
/// that is always kept and indexed first.
struct CommonParams {
  FieldPath field;
  std::optional<std::string> remove_from_source;
  std::size_t workers = 1;
};

struct ExactParams : CommonParams {
  bool normalize_whitespace = true;
  bool lowercase = false;
};

struct LshParams : CommonParams {
  std::size_t k = 5;
  std::size_t num_perm = 128;
  std::size_t bands = 16;
  std::size_t rows = 8;
  double threshold = 0.8;
  std::uint64_t seed = 42;
};

struct SimHashParams : CommonParams {
  int max_hamming = 4;
};

DedupResult exact_dedup(const Dataset& dataset, const ExactParams& params = {});
/// Candidates from shared LSH buckets are verified with exact Jaccard over
/// shingles; ParamError when bands * rows != num_perm.
DedupResult lsh_dedup(const Dataset& dataset, const LshParams& params = {});
/// Radius search through a pigeonhole index of max(4, max_hamming + 1)
/// bit blocks; ParamError outside [0, 64].
DedupResult simhash_dedup(const Dataset& dataset, const SimHashParams& params = {});

}  // namespace forge::dedup
