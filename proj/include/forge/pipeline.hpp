#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "forge/core.hpp"
#include "forge/insight.hpp"
#include "forge/ops.hpp"
#include "forge/state.hpp"

namespace forge::pipeline {

namespace fs = std::filesystem;

struct OpSpec {
  std::string name;
  /// Fully resolved (defaults filled, type-checked).
  Json params;
  /// Position in the recipe file, 0 when unknown.
  std::size_t line = 0;
  std::size_t column = 0;
};

struct Recipe {
  std::string project = "forge";
  std::vector<std::string> dataset_paths;
  std::string export_path;
  std::size_t workers = 1;
  std::vector<FieldPath> text_keys;
  /// Formatter used to load `dataset_paths`; chosen by file extension
  /// unless the first `process` entry is a Formatter.
  std::optional<OpSpec> formatter;
  std::vector<OpSpec> ops;
  bool trace = false;
  std::size_t trace_budget = 10;
  std::string trace_dir;
  state::StatePolicy state;
  std::size_t batch_size = 1024;
  bool op_fusion = true;
  bool fused_short_circuit = false;
  std::uint64_t seed = 42;

  Json to_json() const;
};

struct Override {
  std::string path;
  std::string value;
};
/// "dotted.path=value"; ParseError without '='.
Override parse_override(std::string_view text);

/// Config grammar: a YAML mapping. Precedence is overrides > file values >
/// registered defaults. Override paths address top-level keys
/// (`np=4`), op params (`word_count_filter.min=3`,
/// `process.2.min=3`, `process.word_count_filter.min=3`).
/// Errors: ParseError (with line/column when known), UnknownOp,
/// TypeMismatch.
Recipe parse_recipe(std::string_view source, const std::vector<Override>& overrides = {},
                    const OpRegistry& registry = OpRegistry::builtin());
Recipe load_recipe(const fs::path& path, const std::vector<Override>& overrides = {},
                   const OpRegistry& registry = OpRegistry::builtin());

/// Any YAML document as JSON under the recipe's scalar rules; used by the
/// sample, analyze and hpo configs.
Json parse_config(std::string_view source);
Json load_config(const fs::path& path);

// ---------------------------------------------------------------------------
// Planning

struct Stage {
  /// Indices into Recipe::ops, in evaluation order.
  std::vector<std::size_t> ops;
  std::set<ContextKey> contexts;
  OpLevel level = OpLevel::Sample;
  CostClass cost = CostClass::Cheap;
  Category category = Category::Mapper;

  bool fused() const noexcept { return ops.size() > 1; }
};

struct PlanOptions {
  bool fuse = true;
  bool reorder = true;
};

class ExecutionPlan {
 public:
  std::vector<Stage> stages;
  /// One instance per recipe op, index-aligned with Recipe::ops.
  std::vector<std::unique_ptr<Op>> ops;

  const Op& op(std::size_t recipe_index) const { return *ops.at(recipe_index); }
  std::string stage_label(std::size_t stage) const;
  /// Recipe indices flattened in stage order.
  std::vector<std::size_t> flattened() const;
  /// Peak number of distinct contexts required by any stage.
  std::size_t max_stage_contexts() const;

  Json to_json() const;
  std::string describe() const;
};

/// (a) maximal runs of sample-level Filters; (b) union of run members that
/// share a ContextKey on the same field into fused groups; (c) stable sort of
/// each run's groups by cost, fused groups counting as expensive; (d) Mappers
/// and dataset-level ops stay in recipe order as barriers.
ExecutionPlan build_plan(const Recipe& recipe, const OpRegistry& registry = OpRegistry::builtin(),
                         PlanOptions options = {});
/// Plan with every op in its own stage, in recipe order.
ExecutionPlan identity_plan(const Recipe& recipe, const OpRegistry& registry = OpRegistry::builtin());

// ---------------------------------------------------------------------------
// Execution

struct StageReport {
  std::string label;
  std::uint64_t in = 0;
  std::uint64_t out = 0;
  /// Per-sample op invocations (mapper process, filter stats/keep, dedup
  /// input rows) summed over the stage's ops.
  std::uint64_t computations = 0;
  DerivationCounters derivations;
  std::size_t peak_context_entries = 0;
  bool cache_hit = false;
  bool restored = false;
  double seconds = 0;
  std::uint64_t out_bytes = 0;
};

struct ExecOptions {
  std::size_t workers = 1;
  std::size_t batch_size = 1024;
  bool fused_short_circuit = false;
};

/// Executes stages [first, plan.stages.size()) over `dataset`. `on_stage`
/// runs after each stage with (stage index, output); throwing from it aborts
/// the run.
using StageHook = std::function<void(std::size_t, const Dataset&, StageReport&)>;

Dataset execute(const ExecutionPlan& plan, Dataset dataset, const ExecOptions& options,
                std::vector<StageReport>* reports = nullptr, insight::Tracer* tracer = nullptr,
                std::size_t first_stage = 0, const StageHook& on_stage = {});

/// One stage over contiguous shards. Sample-level only.
Dataset run_sample_stage(const ExecutionPlan& plan, std::size_t stage, Dataset dataset, const ExecOptions& options,
                         StageReport& report, insight::Tracer* tracer);

// ---------------------------------------------------------------------------
// Full runs

struct RunOptions {
  PlanOptions plan;
  /// Overrides the recipe worker count when set.
  std::optional<std::size_t> workers;
  /// Called after stage `k` (1-based count of completed stages) has been
  /// persisted; used by resume tests to kill the process.
  std::function<void(std::size_t)> after_stage_committed;
  bool write_export = true;
  insight::Tracer* tracer = nullptr;
};

struct RunResult {
  Dataset dataset;
  std::vector<StageReport> stages;
  Fingerprint input_fp;
  Fingerprint output_fp;
  Fingerprint plan_fp;
  state::SpacePlan space;
  state::ResolvedPolicy policy;
  std::size_t resumed_stages = 0;
  std::size_t cache_hit_stages = 0;
  double seconds = 0;

  std::uint64_t total_computations() const;
};

/// Loads the recipe input through its formatter.
Dataset load_input(const Recipe& recipe, const OpRegistry& registry = OpRegistry::builtin());
/// Bytes of the recipe's input files (S in the space plan).
std::uint64_t input_bytes(const Recipe& recipe);
/// Space plan from the recipe's op categories; refined with the ratios in
/// a prior manifest at `<export_path>.manifest.json` when present.
state::SpacePlan plan_space(const Recipe& recipe, std::uint64_t input_bytes);

/// Load, plan, restore from checkpoint/cache, execute, persist, export and
/// write the run manifest.
RunResult run(const Recipe& recipe, const RunOptions& options = {}, const OpRegistry& registry = OpRegistry::builtin());

fs::path manifest_path(const Recipe& recipe);
Json manifest_json(const Recipe& recipe, const RunResult& result);

}  // namespace forge::pipeline
