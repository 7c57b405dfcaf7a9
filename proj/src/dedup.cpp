#include "forge/dedup.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/text.hpp"

namespace forge::dedup {

ShingleSet shingles(std::string_view raw, std::size_t k) {
  if (k == 0) throw ParamError("shingle size must be positive");
  auto words = text::words(raw);
  ShingleSet out;
  if (words.empty()) return out;
  auto hash_range = [&](std::size_t begin, std::size_t end) {
    std::string joined;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) joined += '\x1f';
      joined += words[i];
    }
    return hash64(joined);
  };
  if (words.size() < k) {
    out.push_back(hash_range(0, words.size()));
    return out;
  }
  out.reserve(words.size() - k + 1);
  for (std::size_t i = 0; i + k <= words.size(); ++i) out.push_back(hash_range(i, i + k));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double jaccard(const ShingleSet& a, const ShingleSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

MinHasher::MinHasher(std::size_t num_perm, std::uint64_t seed) {
  if (num_perm == 0) throw ParamError("num_perm must be >= 1");
  a_.resize(num_perm);
  b_.resize(num_perm);
  for (std::size_t i = 0; i < num_perm; ++i) {
    a_[i] = mix64(seed * 0x9E3779B97F4A7C15ULL + 2 * i + 1) | 1ULL;
    b_[i] = mix64(seed * 0xC2B2AE3D27D4EB4FULL + 2 * i + 2);
  }
}

std::vector<std::uint64_t> MinHasher::signature(const ShingleSet& set) const {
  std::vector<std::uint64_t> sig(a_.size(), std::numeric_limits<std::uint64_t>::max());
  for (std::uint64_t x : set) {
    for (std::size_t i = 0; i < a_.size(); ++i) {
      std::uint64_t h = mix64(a_[i] * x + b_[i]);
      if (h < sig[i]) sig[i] = h;
    }
  }
  return sig;
}

MinHashSignature minhash_signature(std::string_view text, std::size_t k, std::size_t num_perm, std::uint64_t seed) {
  MinHasher hasher(num_perm, seed);
  return {k, num_perm, hasher.signature(shingles(text, k))};
}

double signature_similarity(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) throw ParamError("signature sizes differ");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) same += a.values[i] == b.values[i];
  return static_cast<double>(same) / static_cast<double>(a.values.size());
}

double lsh_candidate_probability(double j, std::size_t bands, std::size_t rows) {
  return 1.0 - std::pow(1.0 - std::pow(j, static_cast<double>(rows)), static_cast<double>(bands));
}

std::uint64_t simhash(std::string_view raw) {
  auto words = text::words(raw);
  std::unordered_map<std::string, std::int64_t> freq;
  for (auto& w : words) ++freq[std::move(w)];
  std::array<std::int64_t, 64> acc{};
  for (const auto& [feature, weight] : freq) {
    std::uint64_t h = hash64(feature);
    for (int bit = 0; bit < 64; ++bit) acc[bit] += ((h >> bit) & 1ULL) ? weight : -weight;
  }
  std::uint64_t out = 0;
  for (int bit = 0; bit < 64; ++bit) {
    if (acc[bit] > 0) out |= 1ULL << bit;
  }
  return out;
}

int hamming(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

namespace {

/// Order of consideration plus removability: references (non-removable)
/// first in paired mode, then everything else in dataset order.
struct Plan {
  std::vector<std::size_t> order;
  std::vector<bool> removable;
};

Plan consideration_order(const Dataset& ds, const CommonParams& params) {
  Plan plan;
  plan.removable.assign(ds.size(), true);
  if (!params.remove_from_source) {
    plan.order.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) plan.order[i] = i;
    return plan;
  }
  static const FieldPath source_path = FieldPath::parse("meta.source");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Json* src = find_meta(ds[i], source_path);
    plan.removable[i] = src && src->is_string() && src->get_ref<const std::string&>() == *params.remove_from_source;
    if (!plan.removable[i]) plan.order.push_back(i);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (plan.removable[i]) plan.order.push_back(i);
  }
  return plan;
}

DedupResult assemble(const Dataset& ds, const std::vector<bool>& removed, std::vector<DuplicatePair> pairs) {
  std::vector<Sample> kept;
  kept.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!removed[i]) kept.push_back(ds[i]);
  }
  // Pairs are reported in dataset order of the removed sample.
  std::map<std::uint64_t, std::size_t> pos;
  for (std::size_t i = 0; i < ds.size(); ++i) pos[ds[i].id] = i;
  std::stable_sort(pairs.begin(), pairs.end(),
                   [&](const DuplicatePair& a, const DuplicatePair& b) { return pos[a.removed_id] < pos[b.removed_id]; });
  return {Dataset(std::move(kept), ds.schema()), std::move(pairs)};
}

template <typename T, typename Fn>
std::vector<T> compute_parallel(const Dataset& ds, std::size_t workers, Fn&& fn) {
  std::vector<T> out(ds.size());
  parallel_shards(ds.size(), workers, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fn(ds[i]);
  });
  return out;
}

}  // namespace

DedupResult exact_dedup(const Dataset& ds, const ExactParams& params) {
  auto digests = compute_parallel<Fingerprint>(ds, params.workers, [&](const Sample& s) {
    std::string_view raw = field_text(s, params.field);
    std::string norm = params.normalize_whitespace ? text::normalize_whitespace(raw) : std::string(raw);
    if (params.lowercase) norm = text::to_lower(norm);
    return hash128(norm);
  });
  Plan plan = consideration_order(ds, params);
  std::map<Fingerprint, std::uint64_t> first;
  std::vector<bool> removed(ds.size(), false);
  std::vector<DuplicatePair> pairs;
  for (std::size_t i : plan.order) {
    auto [it, inserted] = first.emplace(digests[i], ds[i].id);
    if (!inserted && plan.removable[i]) {
      removed[i] = true;
      pairs.push_back({it->second, ds[i].id, 1.0});
    }
  }
  return assemble(ds, removed, std::move(pairs));
}

DedupResult lsh_dedup(const Dataset& ds, const LshParams& params) {
  if (params.bands * params.rows != params.num_perm) {
    throw ParamError("bands * rows must equal num_perm (" + std::to_string(params.bands) + " * " +
                     std::to_string(params.rows) + " != " + std::to_string(params.num_perm) + ")");
  }
  if (params.threshold < 0.0 || params.threshold > 1.0) throw ParamError("threshold must lie in [0, 1]");
  MinHasher hasher(params.num_perm, params.seed);
  struct Entry {
    ShingleSet shingles;
    std::vector<std::uint64_t> band_keys;
  };
  auto entries = compute_parallel<Entry>(ds, params.workers, [&](const Sample& s) {
    Entry e;
    e.shingles = shingles(field_text(s, params.field), params.k);
    if (e.shingles.empty()) return e;
    auto sig = hasher.signature(e.shingles);
    e.band_keys.resize(params.bands);
    for (std::size_t b = 0; b < params.bands; ++b) {
      std::string_view bytes(reinterpret_cast<const char*>(sig.data() + b * params.rows),
                             params.rows * sizeof(std::uint64_t));
      e.band_keys[b] = hash64(bytes, b);
    }
    return e;
  });

  Plan plan = consideration_order(ds, params);
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> buckets(params.bands);
  std::vector<bool> removed(ds.size(), false);
  std::vector<DuplicatePair> pairs;
  std::vector<std::size_t> candidates;
  for (std::size_t i : plan.order) {
    const Entry& e = entries[i];
    if (e.shingles.empty()) continue;
    if (plan.removable[i]) {
      candidates.clear();
      for (std::size_t b = 0; b < params.bands; ++b) {
        auto it = buckets[b].find(e.band_keys[b]);
        if (it != buckets[b].end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
      std::sort(candidates.begin(), candidates.end(), [&](std::size_t x, std::size_t y) {
        return plan.removable[x] != plan.removable[y] ? !plan.removable[x] : x < y;
      });
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      bool duplicate = false;
      for (std::size_t c : candidates) {
        double j = jaccard(e.shingles, entries[c].shingles);
        if (j >= params.threshold) {
          removed[i] = true;
          pairs.push_back({ds[c].id, ds[i].id, j});
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
    }
    for (std::size_t b = 0; b < params.bands; ++b) buckets[b][e.band_keys[b]].push_back(i);
  }
  return assemble(ds, removed, std::move(pairs));
}

DedupResult simhash_dedup(const Dataset& ds, const SimHashParams& params) {
  if (params.max_hamming < 0 || params.max_hamming > 64) throw ParamError("max_hamming must lie in [0, 64]");
  auto hashes = compute_parallel<std::uint64_t>(ds, params.workers, [&](const Sample& s) {
    return simhash(field_text(s, params.field));
  });
  const int blocks = std::min(64, std::max(4, params.max_hamming + 1));
  std::vector<std::pair<int, std::uint64_t>> block_spans;  // (shift, mask)
  for (int b = 0, shift = 0; b < blocks; ++b) {
    int width = 64 / blocks + (b < 64 % blocks ? 1 : 0);
    std::uint64_t mask = width == 64 ? ~0ULL : ((1ULL << width) - 1);
    block_spans.emplace_back(shift, mask);
    shift += width;
  }
  Plan plan = consideration_order(ds, params);
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::size_t>>> index(blocks);
  std::vector<bool> removed(ds.size(), false);
  std::vector<DuplicatePair> pairs;
  std::vector<std::size_t> candidates;
  for (std::size_t i : plan.order) {
    std::uint64_t h = hashes[i];
    if (plan.removable[i]) {
      candidates.clear();
      for (int b = 0; b < blocks; ++b) {
        auto [shift, mask] = block_spans[b];
        auto it = index[b].find((h >> shift) & mask);
        if (it != index[b].end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
      }
      std::sort(candidates.begin(), candidates.end(), [&](std::size_t x, std::size_t y) {
        return plan.removable[x] != plan.removable[y] ? !plan.removable[x] : x < y;
      });
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      bool duplicate = false;
      for (std::size_t c : candidates) {
        int d = hamming(h, hashes[c]);
        if (d <= params.max_hamming) {
          removed[i] = true;
          pairs.push_back({ds[c].id, ds[i].id, 1.0 - d / 64.0});
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
    }
    for (int b = 0; b < blocks; ++b) {
      auto [shift, mask] = block_spans[b];
      index[b][(h >> shift) & mask].push_back(i);
    }
  }
  return assemble(ds, removed, std::move(pairs));
}

}  // namespace forge::dedup

// ---------------------------------------------------------------------------
// Catalog entries

namespace forge {

namespace {

void read_common(const Json& p, dedup::CommonParams& c) {
  c.field = FieldPath::parse(p["field"].get<std::string>());
  std::string src = p["remove_from_source"].get<std::string>();
  if (!src.empty()) c.remove_from_source = src;
}

class ExactHashDedup final : public Deduplicator {
 public:
  using Deduplicator::Deduplicator;
  DedupResult run(const Dataset& ds, std::size_t workers) const override {
    dedup::ExactParams p;
    read_common(params(), p);
    p.workers = workers;
    p.normalize_whitespace = param_bool("normalize");
    p.lowercase = param_bool("lowercase");
    return dedup::exact_dedup(ds, p);
  }
};

class MinHashLshDedup final : public Deduplicator {
 public:
  MinHashLshDedup(OpDescriptor d, Json params) : Deduplicator(std::move(d), std::move(params)) {
    read_common(this->params(), p_);
    auto positive = [&](const char* name) {
      auto v = param_int(name);
      if (v <= 0) throw ParamError(std::string("minhash_lsh: ") + name + " must be positive");
      return static_cast<std::size_t>(v);
    };
    p_.k = positive("k");
    p_.num_perm = positive("num_perm");
    p_.bands = positive("bands");
    p_.rows = positive("rows");
    p_.threshold = param_double("threshold");
    p_.seed = static_cast<std::uint64_t>(param_int("seed"));
    if (p_.bands * p_.rows != p_.num_perm) throw ParamError("minhash_lsh: bands * rows must equal num_perm");
  }
  DedupResult run(const Dataset& ds, std::size_t workers) const override {
    auto p = p_;
    p.workers = workers;
    return dedup::lsh_dedup(ds, p);
  }

 private:
  dedup::LshParams p_;
};

class SimHashDedup final : public Deduplicator {
 public:
  using Deduplicator::Deduplicator;
  DedupResult run(const Dataset& ds, std::size_t workers) const override {
    dedup::SimHashParams p;
    read_common(params(), p);
    p.workers = workers;
    p.max_hamming = static_cast<int>(param_int("max_hamming"));
    return dedup::simhash_dedup(ds, p);
  }
};

OpDescriptor deduplicator(std::string name, std::string description, CostClass cost) {
  OpDescriptor d;
  d.name = std::move(name);
  d.category = Category::Deduplicator;
  d.level = OpLevel::Dataset;
  d.cost = cost;
  d.tags = {"general"};
  d.description = std::move(description);
  d.params.push_back({"field", ParamType::String, "text", "target field path"});
  d.params.push_back({"remove_from_source", ParamType::String, "",
                      "paired mode: only samples with this meta.source are removable"});
  return d;
}

template <typename T>
OpFactory make_factory() {
  return [](const OpDescriptor& d, Json params) -> std::unique_ptr<Op> {
    return std::make_unique<T>(d, std::move(params));
  };
}

}  // namespace

void register_deduplicators(OpRegistry& registry) {
  {
    auto d = deduplicator("exact_hash", "remove samples whose normalized text digest was seen before", CostClass::Moderate);
    d.params.push_back({"normalize", ParamType::Bool, true, "collapse whitespace before hashing"});
    d.params.push_back({"lowercase", ParamType::Bool, false, "lowercase before hashing"});
    registry.register_op(std::move(d), make_factory<ExactHashDedup>());
  }
  {
    auto d = deduplicator("minhash_lsh", "near-duplicate removal: MinHash LSH + exact Jaccard verification",
                          CostClass::Expensive);
    d.params.push_back({"k", ParamType::Int, 5, "word shingle size"});
    d.params.push_back({"num_perm", ParamType::Int, 128, "permutations"});
    d.params.push_back({"bands", ParamType::Int, 16, "LSH bands"});
    d.params.push_back({"rows", ParamType::Int, 8, "rows per band"});
    d.params.push_back({"threshold", ParamType::Double, 0.8, "Jaccard threshold"});
    d.params.push_back({"seed", ParamType::Int, 42, "permutation seed"});
    registry.register_op(std::move(d), make_factory<MinHashLshDedup>());
  }
  {
    auto d = deduplicator("simhash", "near-duplicate removal by SimHash Hamming radius", CostClass::Moderate);
    d.params.push_back({"max_hamming", ParamType::Int, 4, "maximum Hamming distance"});
    registry.register_op(std::move(d), make_factory<SimHashDedup>());
  }
}

}  // namespace forge
