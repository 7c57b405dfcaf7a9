#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "forge/hash.hpp"

namespace forge {

using Json = nlohmann::ordered_json;

/// Flat stat dimension -> value. Nested stats are flattened to dot paths on
/// load, so `{"a":{"b":1}}` is stored as `a.b`.
using Stats = std::map<std::string, double, std::less<>>;

/// One document. Values are treated as immutable once placed in a Dataset;
/// operators produce replacement samples.
struct Sample {
  std::uint64_t id = 0;
  std::string text;
  Json meta = Json::object();
  Stats stats;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// Ids are stable under sharded loading: shard index in the high bits.
constexpr std::uint64_t make_sample_id(std::uint64_t shard, std::uint64_t row) {
  return (shard << 40) | (row & ((std::uint64_t{1} << 40) - 1));
}

/// Dot-separated address of a value inside a Sample. The first segment picks
/// the part (`text`, `meta`, `stats`). `text` takes no further segments,
/// `meta.a.b` walks nested objects, and `stats.x.y` names the flat stat `x.y`.
class FieldPath {
 public:
  enum class Root { Text, Meta, Stats };

  FieldPath() : path_("text") {}
  static FieldPath parse(std::string_view path);

  Root root() const noexcept { return root_; }
  const std::vector<std::string>& segments() const noexcept { return segments_; }
  const std::string& str() const noexcept { return path_; }
  /// Flat stat key for `stats.*` paths.
  std::string stat_key() const;

  friend bool operator==(const FieldPath& a, const FieldPath& b) { return a.path_ == b.path_; }
  friend bool operator<(const FieldPath& a, const FieldPath& b) { return a.path_ < b.path_; }

 private:
  Root root_ = Root::Text;
  std::vector<std::string> segments_;
  std::string path_;
};

/// Read-only view of a resolved field.
using FieldValue = std::variant<std::string_view, const Json*, double>;

/// Throws UnknownField when the path is absent.
FieldValue resolve_field(const Sample& sample, const FieldPath& path);
/// Returns nullptr when absent. Only valid for meta paths.
const Json* find_meta(const Sample& sample, const FieldPath& path);
/// Text of a string-valued field (text or a meta string). Throws
/// UnknownField when absent and FieldTypeError when not a string.
std::string_view field_text(const Sample& sample, const FieldPath& path);
/// Returns `sample` with the string field at `path` replaced.
Sample with_field_text(Sample sample, const FieldPath& path, std::string value);

using Schema = std::set<std::string>;

/// Ordered sequence of samples plus declared field paths. Filters delete,
/// never reorder.
class Dataset {
 public:
  Dataset() : schema_{"text"} {}
  explicit Dataset(std::vector<Sample> samples, Schema schema = {"text"})
      : samples_(std::move(samples)), schema_(std::move(schema)) {}

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::vector<Sample>& mutable_samples() noexcept { return samples_; }
  std::vector<Sample> release() && { return std::move(samples_); }

  const Schema& schema() const noexcept { return schema_; }
  void declare(const std::string& path) { schema_.insert(path); }

  /// Deterministic digest of (schema, samples in order).
  Fingerprint fingerprint() const;
  /// Rough in-memory payload size, used for space planning.
  std::size_t approx_bytes() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Sample> samples_;
  Schema schema_;
};

// ---------------------------------------------------------------------------
// JSONL interchange

/// Builds a Sample from one parsed JSONL object. Throws SchemaError on a
/// missing/non-string `text`, a non-object `meta`, or a non-finite stat.
Sample sample_from_json(const Json& object, std::uint64_t id);
Json sample_to_json(const Sample& sample);
/// Canonical line (no trailing newline). `stats` is omitted when empty.
std::string sample_to_jsonl(const Sample& sample);

struct LoadOptions {
  std::uint64_t shard_index = 0;
  /// Extra paths every sample must resolve as strings; failing samples are
  /// rejected (skipped or raised, per `strict`).
  std::vector<FieldPath> text_keys;
  bool strict = false;
};

struct LoadReport {
  std::size_t lines = 0;
  std::size_t rejected = 0;
};

Dataset parse_jsonl(std::string_view content, const LoadOptions& options = {},
                    LoadReport* report = nullptr);
Dataset read_jsonl(const std::filesystem::path& path, const LoadOptions& options = {},
                   LoadReport* report = nullptr);
std::string to_jsonl(const Dataset& dataset);
/// Write-to-temp then rename.
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);

/// Concatenates shards in order. Ids are kept as-is.
Dataset concat(std::vector<Dataset> parts);

bool is_valid_utf8(std::string_view s);

std::string read_file(const std::filesystem::path& path);
/// Atomic replace: write to `<path>.tmp.<pid>` and rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace forge
