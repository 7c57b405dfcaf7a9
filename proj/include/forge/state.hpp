#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/core.hpp"
#include "forge/ops.hpp"

// Cache and checkpoint persistence, compression and space planning.
namespace forge::state {

namespace fs = std::filesystem;

enum class Codec : std::uint8_t { None = 0, Zstd = 1, Lz4 = 2 };

std::string_view to_string(Codec c);
/// "none" | "zstd" | "lz4"; ParamError otherwise.
Codec codec_from_string(std::string_view s);

/// Output = tag byte + u64 raw size (LE) + codec payload.
std::string compress_blob(std::string_view bytes, Codec codec, int level = 3);
/// Throws UnknownCodecTag for an unrecognised tag, CorruptCache when the
/// payload does not decode to the recorded size.
std::string decompress_blob(std::string_view blob);

// ---------------------------------------------------------------------------
// Columnar container

/// Samples per column batch inside a container.
inline constexpr std::size_t kBatchRows = 1024;

/// Layout: "FDJC" | u8 version | u8 codec | 16-byte fingerprint |
/// u64 payload digest | compressed columnar payload. Round-trips the JSONL
/// model bit-exactly.
std::string encode_container(const Dataset& dataset, const Fingerprint& fingerprint, Codec codec);

struct Container {
  Fingerprint fingerprint;
  Codec codec = Codec::None;
  Dataset dataset;
};

/// Throws CorruptCache on any structural or digest mismatch.
Container decode_container(std::string_view bytes);
/// Reads just the header fingerprint.
Fingerprint container_fingerprint(std::string_view bytes);

// ---------------------------------------------------------------------------
// Fingerprints

/// Params with object keys sorted at every level and integral doubles
/// written as integers.
std::string canonical_params(const Json& params);
/// Digest over (input, name, canonical params, version, resource digests).
Fingerprint op_fingerprint(const Fingerprint& input, const Op& op);
Fingerprint op_fingerprint(const Fingerprint& input, std::string_view name, const Json& params,
                           std::uint32_t version, const std::vector<ResourceDigest>& resources);

// ---------------------------------------------------------------------------
// Space planning

struct SpacePlan {
  std::size_t mappers = 0;
  std::size_t filters = 0;
  std::size_t dedups = 0;
  std::uint64_t input_bytes = 0;
  std::uint64_t cache_bytes = 0;
  std::uint64_t checkpoint_peak_bytes = 0;
  /// Estimate from a prior run's per-stage output/input ratios, when one
  /// exists: S + sum of estimated stage outputs.
  std::optional<std::uint64_t> measured_cache_bytes;
};

/// cache = (1 + M + F + [F > 0] + D) * S, checkpoint peak = 3 * S.
SpacePlan plan_space(std::size_t mappers, std::size_t filters, std::size_t dedups, std::uint64_t input_bytes);
/// Applies prior per-stage size ratios (output bytes / input bytes of the
/// whole run so far) to refine the estimate.
void apply_measured_ratios(SpacePlan& plan, const std::vector<double>& stage_ratios);
std::string describe(const SpacePlan& plan);
Json to_json(const SpacePlan& plan);

/// "12GB", "100 MB", "512KiB", "1024". Decimal units for KB/MB/GB/TB,
/// binary for KiB/MiB/GiB/TiB.
std::uint64_t parse_size(std::string_view s);
std::string format_size(std::uint64_t bytes);

// ---------------------------------------------------------------------------
// Policy

enum class CheckpointMode { Off, On, Auto };

struct StatePolicy {
  bool cache = false;
  CheckpointMode checkpoint = CheckpointMode::Off;
  Codec compression = Codec::Zstd;
  /// nullopt keeps every stage.
  std::optional<std::size_t> keep_last_k = 2;
  std::optional<std::uint64_t> disk_budget;
  fs::path cache_dir;
  fs::path checkpoint_dir;
};

struct ResolvedPolicy {
  bool cache = false;
  bool checkpoint = false;
  std::vector<std::string> warnings;
};

/// Auto rules: free < cache_bytes degrades to checkpoint-only; free < 3S
/// disables persistence. Free space is the disk budget when set, otherwise
/// the available bytes on the cache (or checkpoint) volume.
ResolvedPolicy resolve_policy(const StatePolicy& policy, const SpacePlan& plan,
                              std::optional<std::uint64_t> free_bytes = std::nullopt);
/// Available bytes on the volume holding `dir` (or its nearest existing
/// ancestor).
std::uint64_t free_space(const fs::path& dir);

// ---------------------------------------------------------------------------
// Cache

/// One run's cache namespace: `<dir>/<root fp>/<stage>_<stage fp>.djc`.
/// A stage slot holds one version; storing a new version replaces it.
class CacheStore {
 public:
  CacheStore(fs::path dir, const Fingerprint& root, Codec codec, std::optional<std::size_t> keep_last_k);

  const fs::path& namespace_dir() const noexcept { return ns_; }
  fs::path entry_path(std::size_t stage, const Fingerprint& fp) const;

  /// Hit returns the stored dataset; corrupt entries are removed, logged
  /// and reported as misses.
  std::optional<Dataset> lookup(std::size_t stage, const Fingerprint& fp) const;
  bool contains(std::size_t stage, const Fingerprint& fp) const;
  void store(std::size_t stage, const Fingerprint& fp, const Dataset& dataset);
  /// Keeps the `keep_last_k` highest stage slots at or below `current`.
  void evict(std::size_t current);
  /// Total bytes of entry files in this namespace.
  std::uint64_t disk_bytes() const;

 private:
  fs::path ns_;
  Codec codec_;
  std::optional<std::size_t> keep_;
};

// ---------------------------------------------------------------------------
// Checkpoints

struct CheckpointState {
  std::size_t stage = 0;  // number of completed stages
  Fingerprint plan_fp;
  Dataset dataset;
};

/// `<dir>/<run id>/ckpt_<stage>.djk` plus `manifest.json`. At most one
/// committed checkpoint is kept; the previous one is removed only after the
/// new one and its manifest are in place.
class CheckpointStore {
 public:
  CheckpointStore(fs::path dir, std::string run_id, Codec codec);

  const fs::path& run_dir() const noexcept { return dir_; }
  void write(std::size_t completed_stages, const Dataset& dataset, const Fingerprint& plan_fp);
  /// The committed checkpoint when its plan fingerprint equals `plan_fp`.
  /// A mismatch logs a warning, clears the run directory and returns
  /// nullopt.
  std::optional<CheckpointState> resume(const Fingerprint& plan_fp);
  void clear();
  /// Bytes currently held by checkpoint files.
  std::uint64_t disk_bytes() const;
  std::vector<fs::path> files() const;

 private:
  fs::path dir_;
  Codec codec_;
};

}  // namespace forge::state
