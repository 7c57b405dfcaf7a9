#include <chrono>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/parallel.hpp"
#include "forge/pipeline.hpp"

namespace forge::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ShardResult {
  std::vector<Sample> samples;
  std::uint64_t computations = 0;
  DerivationCounters derivations;
  std::size_t peak_entries = 0;
  std::optional<insight::TraceBuffer> trace;
};

void run_mapper(const ExecutionPlan& plan, const Stage& stage, std::size_t stage_index, std::vector<Sample>& in,
                std::size_t begin, std::size_t end, ShardResult& out) {
  const auto& mapper = static_cast<const Mapper&>(plan.op(stage.ops.front()));
  ContextStore ctx;
  out.samples.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    Sample s = std::move(in[i]);
    std::string before;
    if (out.trace) before = std::string(field_text(s, mapper.field()));
    s = mapper.process(std::move(s), ctx);
    ++out.computations;
    if (out.trace) {
      std::string_view after = field_text(s, mapper.field());
      if (after != before) out.trace->edited(stage_index, mapper.name(), s.id, before, after);
    }
    ctx.clear();
    out.samples.push_back(std::move(s));
  }
  out.derivations += ctx.derivations();
  out.peak_entries = std::max(out.peak_entries, ctx.peak_entries());
}

void run_filters(const ExecutionPlan& plan, const Stage& stage, std::size_t stage_index, bool short_circuit,
                 std::vector<Sample>& in, std::size_t begin, std::size_t end, ShardResult& out) {
  std::vector<const Filter*> filters;
  for (std::size_t idx : stage.ops) filters.push_back(static_cast<const Filter*>(&plan.op(idx)));
  ContextStore ctx;
  out.samples.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    Sample& s = in[i];
    const Filter* rejected_by = nullptr;
    if (short_circuit) {
      for (const Filter* f : filters) {
        f->add_stats(s, ctx);
        ++out.computations;
        if (!f->keep(s)) {
          rejected_by = f;
          break;
        }
      }
    } else {
      for (const Filter* f : filters) {
        f->add_stats(s, ctx);
        ++out.computations;
      }
      for (const Filter* f : filters) {
        if (!f->keep(s)) {
          rejected_by = f;
          break;
        }
      }
    }
    ctx.clear();
    if (rejected_by) {
      if (out.trace) out.trace->discarded(stage_index, rejected_by->name(), s);
    } else {
      out.samples.push_back(std::move(s));
    }
  }
  out.derivations += ctx.derivations();
  out.peak_entries = std::max(out.peak_entries, ctx.peak_entries());
}

Dataset run_dedup(const ExecutionPlan& plan, std::size_t stage_index, Dataset dataset, const ExecOptions& options,
                  StageReport& report, insight::Tracer* tracer) {
  const Stage& stage = plan.stages.at(stage_index);
  const auto& dedup = static_cast<const Deduplicator&>(plan.op(stage.ops.front()));
  report.computations += dataset.size();
  DedupResult result = dedup.run(dataset, options.workers);
  if (tracer && !result.pairs.empty()) {
    std::unordered_map<std::uint64_t, std::size_t> pos;
    for (std::size_t i = 0; i < dataset.size(); ++i) pos.emplace(dataset[i].id, i);
    auto buffer = tracer->local();
    for (const auto& pair : result.pairs) {
      auto it = pos.find(pair.removed_id);
      std::string_view text = it == pos.end() ? std::string_view() : std::string_view(dataset[it->second].text);
      buffer.duplicate(stage_index, dedup.name(), pair, text);
    }
    tracer->merge(std::move(buffer));
  }
  return std::move(result.dataset);
}

}  // namespace

Dataset run_sample_stage(const ExecutionPlan& plan, std::size_t stage_index, Dataset dataset, const ExecOptions& options,
                         StageReport& report, insight::Tracer* tracer) {
  const Stage& stage = plan.stages.at(stage_index);
  Schema schema = dataset.schema();
  std::vector<Sample> in = std::move(dataset).release();
  auto sizes = shard_sizes(in.size(), std::max<std::size_t>(1, options.workers));
  std::vector<ShardResult> shards(sizes.size());
  for (auto& s : shards) {
    if (tracer) s.trace.emplace(tracer->local());
  }
  std::string where = "stage " + std::to_string(stage_index) + " (" + plan.stage_label(stage_index) + ")";
  try {
    parallel_shards(in.size(), options.workers, [&](std::size_t shard, std::size_t begin, std::size_t end) {
      // Batches bound the live working set of each worker.
      for (std::size_t b = begin; b < end; b += std::max<std::size_t>(1, options.batch_size)) {
        std::size_t e = std::min(end, b + std::max<std::size_t>(1, options.batch_size));
        if (stage.category == Category::Mapper) {
          run_mapper(plan, stage, stage_index, in, b, e, shards[shard]);
        } else if (stage.category == Category::Filter) {
          run_filters(plan, stage, stage_index, options.fused_short_circuit, in, b, e, shards[shard]);
        } else {
          throw ParamError("stage category " + std::string(to_string(stage.category)) + " is not sample-level");
        }
      }
    });
  } catch (const WorkerPanic& e) {
    throw WorkerPanic(where + ": " + e.what());
  } catch (const Error& e) {
    log::error("{}: {}: {}", where, e.kind(), e.what());
    throw;
  }
  std::vector<Sample> out;
  std::size_t total = 0;
  for (const auto& s : shards) total += s.samples.size();
  out.reserve(total);
  for (auto& s : shards) {
    report.computations += s.computations;
    report.derivations += s.derivations;
    report.peak_context_entries = std::max(report.peak_context_entries, s.peak_entries);
    std::move(s.samples.begin(), s.samples.end(), std::back_inserter(out));
    if (tracer) tracer->merge(std::move(*s.trace));
  }
  return Dataset(std::move(out), std::move(schema));
}

Dataset execute(const ExecutionPlan& plan, Dataset dataset, const ExecOptions& options, std::vector<StageReport>* reports,
                insight::Tracer* tracer, std::size_t first_stage, const StageHook& on_stage) {
  for (std::size_t i = first_stage; i < plan.stages.size(); ++i) {
    const Stage& stage = plan.stages[i];
    StageReport report;
    report.label = plan.stage_label(i);
    report.in = dataset.size();
    auto t0 = Clock::now();
    if (stage.category == Category::Deduplicator) {
      try {
        dataset = run_dedup(plan, i, std::move(dataset), options, report, tracer);
      } catch (const WorkerPanic& e) {
        throw WorkerPanic("stage " + std::to_string(i) + " (" + report.label + "): " + e.what());
      }
    } else if (stage.level == OpLevel::Dataset) {
      ExecOptions serial = options;
      serial.workers = 1;
      dataset = run_sample_stage(plan, i, std::move(dataset), serial, report, tracer);
    } else {
      dataset = run_sample_stage(plan, i, std::move(dataset), options, report, tracer);
    }
    report.out = dataset.size();
    report.seconds = seconds_since(t0);
    if (tracer) tracer->stage(i, report.label, report.in, report.out);
    if (on_stage) on_stage(i, dataset, report);
    if (reports) reports->push_back(std::move(report));
  }
  return dataset;
}

}  // namespace forge::pipeline
