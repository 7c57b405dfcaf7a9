#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/core.hpp"
#include "forge/text.hpp"

namespace forge {

enum class Category { Formatter, Mapper, Filter, Deduplicator };
enum class OpLevel { Sample, Dataset };
enum class CostClass { Cheap = 0, Moderate = 1, Expensive = 2 };
enum class ContextKey { Words = 0, Lines = 1, Sentences = 2, CharClasses = 3 };
enum class ParamType { Int, Double, Bool, String, StringList };

std::string_view to_string(Category c);
std::string_view to_string(OpLevel l);
std::string_view to_string(CostClass c);
std::string_view to_string(ContextKey k);
std::string_view to_string(ParamType t);
ContextKey context_key_from_string(std::string_view s);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::Double;
  Json default_value;
  std::string help;
};

/// Static description of an operator: what it is, what it reads, what it
/// costs. Instances are created from a descriptor plus a parameter map.
struct OpDescriptor {
  std::string name;
  Category category = Category::Mapper;
  std::vector<ParamSpec> params;
  /// Target field when the recipe does not set `field`.
  std::string field = "text";
  std::set<ContextKey> contexts;
  OpLevel level = OpLevel::Sample;
  CostClass cost = CostClass::Cheap;
  std::set<std::string> tags;
  /// Filters: stat keys written by compute_stats.
  std::vector<std::string> stat_keys;
  /// Filters: identity of the formula behind `stat_keys`. Two filters may
  /// share a stat key only if they share this.
  std::string formula;
  /// Human-readable keep predicate.
  std::string predicate;
  std::uint32_t version = 1;
  std::string description;

  const ParamSpec* find_param(std::string_view name) const;
};

// ---------------------------------------------------------------------------
// Contexts

struct DerivationCounters {
  std::array<std::uint64_t, 4> by_key{};

  std::uint64_t& operator[](ContextKey k) { return by_key[static_cast<std::size_t>(k)]; }
  std::uint64_t operator[](ContextKey k) const { return by_key[static_cast<std::size_t>(k)]; }
  std::uint64_t total() const { return by_key[0] + by_key[1] + by_key[2] + by_key[3]; }
  DerivationCounters& operator+=(const DerivationCounters& o) {
    for (std::size_t i = 0; i < by_key.size(); ++i) by_key[i] += o.by_key[i];
    return *this;
  }
};

/// Per-sample cache of derived intermediates, keyed by (context, field).
/// Lives for one fused stage. Line and sentence views point into the text
/// last passed in and follow it when the sample is moved.
class ContextStore {
 public:
  const std::vector<std::string>& words(const FieldPath& field, std::string_view text);
  const std::vector<std::string_view>& lines(const FieldPath& field, std::string_view text);
  const std::vector<std::string_view>& sentences(const FieldPath& field, std::string_view text);
  const text::CharClasses& char_classes(const FieldPath& field, std::string_view text);

  std::size_t entries() const noexcept;
  std::size_t peak_entries() const noexcept { return peak_; }
  const DerivationCounters& derivations() const noexcept { return derivations_; }
  void clear() noexcept;

 private:
  struct Entry {
    std::string field;
    const char* base = nullptr;
    std::optional<std::vector<std::string>> words;
    std::optional<std::vector<std::string_view>> lines;
    std::optional<std::vector<std::string_view>> sentences;
    std::optional<text::CharClasses> char_classes;
  };
  Entry& entry(const FieldPath& field, std::string_view text);
  void touched();

  std::vector<Entry> entries_;
  std::size_t peak_ = 0;
  DerivationCounters derivations_;
};

// ---------------------------------------------------------------------------
// Operator contracts

/// Digest of an external resource (wordlist, model) read by an instance.
struct ResourceDigest {
  std::string name;
  Fingerprint digest;
};

class Op {
 public:
  virtual ~Op() = default;
  Op(const Op&) = delete;
  Op& operator=(const Op&) = delete;

  const OpDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::string& name() const noexcept { return descriptor_.name; }
  Category category() const noexcept { return descriptor_.category; }
  /// Fully resolved parameters (defaults filled, types checked).
  const Json& params() const noexcept { return params_; }
  const FieldPath& field() const noexcept { return field_; }
  const std::vector<ResourceDigest>& resources() const noexcept { return resources_; }

  Op(OpDescriptor descriptor, Json params);

 protected:
  void add_resource(std::string name, Fingerprint digest) {
    resources_.push_back({std::move(name), digest});
  }
  double param_double(std::string_view name) const;
  std::int64_t param_int(std::string_view name) const;
  bool param_bool(std::string_view name) const;
  std::string param_string(std::string_view name) const;
  std::vector<std::string> param_strings(std::string_view name) const;

 private:
  OpDescriptor descriptor_;
  Json params_;
  FieldPath field_;
  std::vector<ResourceDigest> resources_;
};

class Formatter : public Op {
 public:
  using Op::Op;
  virtual Dataset load(const std::vector<std::filesystem::path>& paths) const = 0;
};

/// Edits one text field in place. `id` and sample count are never changed.
class Mapper : public Op {
 public:
  using Op::Op;
  Sample process(Sample sample, ContextStore& ctx) const;

 protected:
  virtual std::string transform(std::string_view text) const = 0;
};

struct FilterOutcome {
  Stats stats_written;
  bool keep = true;
};

/// Stats computation is decoupled from the keep decision: `compute_stats`
/// only adds stat keys, `keep` is a pure function of stats (or meta) and
/// params.
class Filter : public Op {
 public:
  using Op::Op;

  /// Adds this filter's stat keys. Keys already present are not recomputed.
  Sample compute_stats(Sample sample, ContextStore& ctx) const;
  /// In-place form; returns false when every key was already present.
  bool add_stats(Sample& sample, ContextStore& ctx) const;
  /// Throws MissingStat when compute_stats has not run.
  virtual bool keep(const Sample& sample) const;
  FilterOutcome evaluate(const Sample& sample, ContextStore& ctx) const;

  bool has_stats(const Sample& sample) const;

 protected:
  virtual void compute(const Sample& sample, ContextStore& ctx, Stats& out) const = 0;
};

struct DuplicatePair {
  std::uint64_t kept_id = 0;
  std::uint64_t removed_id = 0;
  double score = 1.0;

  friend bool operator==(const DuplicatePair&, const DuplicatePair&) = default;
};

struct DedupResult {
  Dataset dataset;
  std::vector<DuplicatePair> pairs;
};

class Deduplicator : public Op {
 public:
  using Op::Op;
  virtual DedupResult run(const Dataset& dataset, std::size_t workers) const = 0;
};

// ---------------------------------------------------------------------------
// Registry

using OpFactory = std::function<std::unique_ptr<Op>(const OpDescriptor&, Json params)>;

struct RegistryEntry {
  OpDescriptor descriptor;
  OpFactory factory;
};

class OpRegistry {
 public:
  /// Throws DuplicateName or ConflictingStatKey. A `field` param is added to
  /// Mapper/Filter descriptors that do not declare one.
  void register_op(OpDescriptor descriptor, OpFactory factory);

  const RegistryEntry* find(std::string_view name) const;
  /// Throws UnknownOp.
  const RegistryEntry& at(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  /// Entries sorted by name, optionally restricted to a tag.
  std::vector<const RegistryEntry*> list(std::optional<std::string> tag = std::nullopt) const;

  /// Fills defaults and type-checks. Unknown keys raise ParseError, type
  /// errors raise TypeMismatch.
  Json resolve_params(std::string_view name, const Json& given) const;
  std::unique_ptr<Op> create(std::string_view name, const Json& params = Json::object()) const;

  /// Registry holding the built-in catalog.
  static OpRegistry builtin();

 private:
  std::map<std::string, RegistryEntry, std::less<>> entries_;
};

/// Type-checks a single value against a param type. Integers are accepted
/// where doubles are expected.
bool param_type_accepts(ParamType type, const Json& value);

Json descriptor_to_json(const OpDescriptor& d);

/// Register the built-in catalog into `registry`.
void register_formatters(OpRegistry& registry);
void register_mappers(OpRegistry& registry);
void register_filters(OpRegistry& registry);
void register_deduplicators(OpRegistry& registry);

}  // namespace forge
