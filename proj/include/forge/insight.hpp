#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/core.hpp"
#include "forge/ops.hpp"

// Analyzer (per-dimension statistics) and tracer (per-operator sample
// changes).
namespace forge::insight {

/// The 13 built-in dimensions, in report order.
const std::vector<std::string>& dimensions();
/// Filter whose compute_stats produces `dimension`, and the stat key it
/// writes. Throws UnknownDimension.
struct DimensionSource {
  std::string filter;
  std::string stat_key;
};
DimensionSource dimension_source(std::string_view dimension);

struct Histogram {
  double lo = 0;
  double hi = 0;
  std::vector<std::uint64_t> counts;
  /// Bin i covers [lo + i*w, lo + (i+1)*w); the last bin is closed.
  double width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
};

struct DimensionStats {
  std::string name;
  std::uint64_t count = 0;
  // Aggregates are absent when count == 0.
  std::optional<double> mean, std, min, max;
  std::optional<double> p5, p25, p50, p75, p95;
  /// Shannon entropy (bits) of the histogram's bin distribution.
  std::optional<double> entropy;
  /// Tukey fences: q1 - 1.5 IQR, q3 + 1.5 IQR.
  std::optional<double> lower_fence, upper_fence;
  Histogram histogram;
};

struct StatsReport {
  std::uint64_t samples = 0;
  std::uint64_t bytes = 0;
  std::uint64_t tokens = 0;
  std::vector<DimensionStats> dims;

  const DimensionStats* find(std::string_view name) const;
};

inline constexpr std::size_t kHistogramBins = 50;

/// Nearest-rank quantile of sorted values: the ceil(q * n)-th smallest
/// (1-based), clamped to [1, n].
double nearest_rank(const std::vector<double>& sorted, double q);
/// Exact aggregates over `values` (any order).
DimensionStats summarize(std::string name, std::vector<double> values, std::size_t bins = kHistogramBins);

struct AnalyzeOptions {
  /// Empty means all 13.
  std::vector<std::string> dims;
  std::size_t workers = 1;
  /// Params for the filters used to compute missing stats, keyed by filter
  /// name (e.g. a perplexity model path).
  std::map<std::string, Json> filter_params;
};

/// Computes missing stats through the matching Filter's compute_stats (never
/// filtering) and aggregates them. Returns the report; `with_stats`, when
/// given, receives the dataset with stats filled in.
StatsReport analyze(const Dataset& dataset, const AnalyzeOptions& options = {}, Dataset* with_stats = nullptr,
                    const OpRegistry* registry = nullptr);

Json to_json(const StatsReport& report);
StatsReport report_from_json(const Json& j);

struct FunnelStep {
  std::string stage;
  std::uint64_t in = 0;
  std::uint64_t out = 0;
};

/// Per-dimension aggregate deltas (after - before), both histograms, and
/// the stage funnel.
Json diff_report(const StatsReport& before, const StatsReport& after, const std::vector<FunnelStep>& funnel = {});

/// Self-contained HTML page with inline SVG histograms and box plots.
std::string render_html(const StatsReport& report, const Json* diff = nullptr, std::string_view title = "forge report");

// ---------------------------------------------------------------------------
// Tracer

enum class TraceKind { Discarded, Edited, DuplicatePair };
std::string_view to_string(TraceKind k);

struct TraceRecord {
  std::string op;
  std::size_t stage = 0;
  TraceKind kind = TraceKind::Discarded;
  std::uint64_t sample_id = 0;
  /// Discarded: the sample's text. Edited: text before.
  std::string text;
  /// Edited: text after.
  std::string after;
  /// Edited: changed span as [start, end_before) -> [start, end_after).
  std::size_t span_start = 0, span_end_before = 0, span_end_after = 0;
  /// Discarded: stats at discard time.
  Stats stats;
  /// Duplicate pair.
  std::uint64_t kept_id = 0;
  double score = 0;

  Json to_json() const;
};

struct TraceCounters {
  std::uint64_t discarded = 0;
  std::uint64_t edited = 0;
  std::uint64_t duplicates = 0;
};

/// Per-worker buffer: exact counters plus a bounded, deterministic sample of
/// records per op. Records are ranked by a seeded hash of (op, sample id)
/// and the `budget` lowest ranks kept, which is a uniform sample that merges
/// identically however the input was sharded.
class TraceBuffer {
 public:
  TraceBuffer(std::size_t budget, std::uint64_t seed) : budget_(budget), seed_(seed) {}

  void discarded(std::size_t stage, const std::string& op, const Sample& sample);
  void edited(std::size_t stage, const std::string& op, std::uint64_t id, std::string_view before, std::string_view after);
  void duplicate(std::size_t stage, const std::string& op, const DuplicatePair& pair, std::string_view removed_text);
  void merge(TraceBuffer&& other);

  const std::map<std::string, TraceCounters>& counters() const noexcept { return counters_; }
  const std::map<std::size_t, std::uint64_t>& stage_removals() const noexcept { return removals_; }
  /// Stored exemplars for `op` in ascending sample-id order.
  std::vector<TraceRecord> records(const std::string& op) const;
  std::size_t budget() const noexcept { return budget_; }

 private:
  void offer(TraceRecord record);

  std::size_t budget_;
  std::uint64_t seed_;
  std::map<std::string, TraceCounters> counters_;
  std::map<std::size_t, std::uint64_t> removals_;
  // op -> rank -> record
  std::map<std::string, std::map<std::pair<std::uint64_t, std::uint64_t>, TraceRecord>> kept_;
};

/// Run-level sink. Stage results are merged under a lock in shard order.
class Tracer {
 public:
  explicit Tracer(std::size_t budget = 10, std::uint64_t seed = 42) : all_(budget, seed), seed_(seed) {}

  TraceBuffer local() const { return TraceBuffer(all_.budget(), seed_); }
  void merge(TraceBuffer&& buffer);
  /// Records a stage's sample-count transition for the funnel.
  void stage(std::size_t index, std::string label, std::uint64_t in, std::uint64_t out);

  const std::map<std::string, TraceCounters>& counters() const noexcept { return all_.counters(); }
  std::vector<TraceRecord> records(const std::string& op) const { return all_.records(op); }
  const std::vector<FunnelStep>& funnel() const noexcept { return funnel_; }
  /// Removals (discarded + duplicates) attributed to the ops of stage
  /// `index`.
  std::uint64_t stage_removals(std::size_t index) const;

  /// Writes `<dir>/<op>.jsonl` for every op with records, plus
  /// `<dir>/counters.json`.
  void write(const std::filesystem::path& dir) const;

 private:
  mutable std::mutex mu_;
  TraceBuffer all_;
  std::uint64_t seed_;
  std::vector<FunnelStep> funnel_;
};

}  // namespace forge::insight
