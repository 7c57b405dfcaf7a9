#include <chrono>
#include <ctime>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/pipeline.hpp"

namespace forge::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

std::string auto_formatter(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    fs::path path(p);
    std::string ext = path.extension().string();
    if (fs::is_directory(path)) {
      for (const auto& entry : fs::recursive_directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        ext = entry.path().extension().string();
        if (ext == ".jsonl" || ext == ".json" || ext == ".txt" || ext == ".md" || ext == ".csv" || ext == ".tsv") break;
      }
    }
    if (ext == ".jsonl" || ext == ".json") return "jsonl_formatter";
    if (ext == ".txt" || ext == ".md") return "plaintext_formatter";
    if (ext == ".csv" || ext == ".tsv") return "csv_formatter";
  }
  return "jsonl_formatter";
}

std::string run_id(const std::string& project) {
  std::string id;
  for (char c : project) id += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return id.empty() ? "run" : id;
}

std::vector<Fingerprint> stage_fingerprints(const ExecutionPlan& plan, const Fingerprint& input) {
  std::vector<Fingerprint> fps{input};
  for (const auto& stage : plan.stages) {
    Fingerprint f = fps.back();
    for (std::size_t idx : stage.ops) f = state::op_fingerprint(f, plan.op(idx));
    fps.push_back(f);
  }
  return fps;
}

Fingerprint plan_fingerprint(const ExecutionPlan& plan, const std::vector<Fingerprint>& fps) {
  Hasher h;
  h.update_bytes("forge.plan.v1").update(fps.back()).update_u64(plan.stages.size());
  for (const auto& s : plan.stages) {
    h.update_u64(s.ops.size());
    for (std::size_t idx : s.ops) h.update_u64(idx);
  }
  return h.digest();
}

std::string disk_full_message(const std::string& what, const state::SpacePlan& space, const state::ResolvedPolicy& policy) {
  std::string msg = what + "; " + state::describe(space) + ". ";
  if (policy.cache) {
    msg += "Free at least the cache requirement, lower keep_last_k_caches, enable compression, or set cache: false.";
  } else {
    msg += "Free at least the checkpoint peak or disable checkpoints.";
  }
  return msg;
}

}  // namespace

Dataset load_input(const Recipe& recipe, const OpRegistry& registry) {
  if (recipe.dataset_paths.empty()) throw ParseError("recipe has no dataset_path");
  std::string name = recipe.formatter ? recipe.formatter->name : auto_formatter(recipe.dataset_paths);
  Json params = recipe.formatter ? recipe.formatter->params : registry.resolve_params(name, Json::object());
  auto op = registry.create(name, params);
  const auto* formatter = dynamic_cast<const Formatter*>(op.get());
  if (!formatter) throw ParseError("'" + name + "' is not a Formatter");
  std::vector<fs::path> paths(recipe.dataset_paths.begin(), recipe.dataset_paths.end());
  Dataset ds = formatter->load(paths);
  if (recipe.text_keys.empty()) return ds;
  Schema schema = ds.schema();
  std::vector<Sample> kept;
  std::size_t rejected = 0;
  for (auto& s : std::move(ds).release()) {
    bool ok = true;
    for (const auto& key : recipe.text_keys) {
      try {
        field_text(s, key);
      } catch (const Error&) {
        ok = false;
        break;
      }
    }
    if (ok) {
      kept.push_back(std::move(s));
    } else {
      ++rejected;
    }
  }
  if (rejected) log::warn("rejected {} samples lacking a declared text key", rejected);
  for (const auto& key : recipe.text_keys) schema.insert(key.str());
  return Dataset(std::move(kept), std::move(schema));
}

std::uint64_t input_bytes(const Recipe& recipe) {
  std::uint64_t total = 0;
  std::error_code ec;
  for (const auto& p : recipe.dataset_paths) {
    if (fs::is_directory(p, ec)) {
      for (const auto& entry : fs::recursive_directory_iterator(p, ec)) {
        if (entry.is_regular_file(ec)) total += entry.file_size(ec);
      }
    } else if (fs::exists(p, ec)) {
      total += fs::file_size(p, ec);
    }
  }
  return total;
}

fs::path manifest_path(const Recipe& recipe) {
  if (recipe.export_path.empty()) return fs::path(run_id(recipe.project) + ".manifest.json");
  return fs::path(recipe.export_path + ".manifest.json");
}

state::SpacePlan plan_space(const Recipe& recipe, std::uint64_t bytes) {
  std::size_t m = 0, f = 0, d = 0;
  const auto& registry = OpRegistry::builtin();
  for (const auto& op : recipe.ops) {
    const RegistryEntry* e = registry.find(op.name);
    Category c = e ? e->descriptor.category : Category::Mapper;
    if (c == Category::Mapper) ++m;
    if (c == Category::Filter) ++f;
    if (c == Category::Deduplicator) ++d;
  }
  auto plan = state::plan_space(m, f, d, bytes);
  std::error_code ec;
  fs::path prior = manifest_path(recipe);
  if (fs::exists(prior, ec)) {
    try {
      Json j = Json::parse(read_file(prior));
      double base = j.at("input_memory_bytes").get<double>();
      std::vector<double> ratios;
      for (const auto& s : j.at("stages")) {
        if (base > 0) ratios.push_back(s.at("out_bytes").get<double>() / base);
      }
      state::apply_measured_ratios(plan, ratios);
    } catch (const std::exception& e) {
      log::warn("ignoring unreadable prior manifest {}: {}", prior.string(), e.what());
    }
  }
  return plan;
}

std::uint64_t RunResult::total_computations() const {
  std::uint64_t n = 0;
  for (const auto& s : stages) n += s.computations;
  return n;
}

RunResult run(const Recipe& recipe, const RunOptions& options, const OpRegistry& registry) {
  auto t0 = Clock::now();
  RunResult result;
  Dataset input = load_input(recipe, registry);
  result.input_fp = input.fingerprint();

  PlanOptions popts = options.plan;
  popts.fuse = popts.fuse && recipe.op_fusion;
  popts.reorder = popts.reorder && recipe.op_fusion;
  ExecutionPlan plan = build_plan(recipe, registry, popts);
  auto fps = stage_fingerprints(plan, result.input_fp);
  result.plan_fp = plan_fingerprint(plan, fps);

  std::uint64_t s_bytes = input_bytes(recipe);
  if (s_bytes == 0) s_bytes = input.approx_bytes();
  result.space = plan_space(recipe, s_bytes);
  result.policy = state::resolve_policy(recipe.state, result.space);
  for (const auto& w : result.policy.warnings) log::warn("{}", w);

  std::optional<state::CacheStore> cache;
  std::optional<state::CheckpointStore> ckpt;
  if (result.policy.cache) {
    cache.emplace(recipe.state.cache_dir, result.input_fp, recipe.state.compression, recipe.state.keep_last_k);
  }
  if (result.policy.checkpoint) {
    ckpt.emplace(recipe.state.checkpoint_dir, run_id(recipe.project), recipe.state.compression);
  }

  std::uint64_t input_memory = input.approx_bytes();
  std::size_t start = 0;
  Dataset current = std::move(input);
  if (ckpt) {
    if (auto st = ckpt->resume(result.plan_fp); st && st->stage <= plan.stages.size()) {
      start = st->stage;
      current = std::move(st->dataset);
      result.resumed_stages = start;
      log::info("resuming {} from checkpoint after stage {}", recipe.project, start);
    }
  }
  if (cache) {
    for (std::size_t i = plan.stages.size(); i > start; --i) {
      if (!cache->contains(i, fps[i])) continue;
      if (auto hit = cache->lookup(i, fps[i])) {
        current = std::move(*hit);
        result.cache_hit_stages = i;
        start = i;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < start; ++i) {
    StageReport r;
    r.label = plan.stage_label(i);
    r.cache_hit = i < result.cache_hit_stages;
    r.restored = !r.cache_hit;
    result.stages.push_back(std::move(r));
  }
  if (start == plan.stages.size()) {
    result.stages.back().out = current.size();
    result.stages.back().out_bytes = current.approx_bytes();
  }

  std::unique_ptr<insight::Tracer> own_tracer;
  insight::Tracer* tracer = options.tracer;
  if (!tracer && recipe.trace) {
    own_tracer = std::make_unique<insight::Tracer>(recipe.trace_budget, recipe.seed);
    tracer = own_tracer.get();
  }

  ExecOptions exec;
  exec.workers = options.workers.value_or(recipe.workers);
  exec.batch_size = recipe.batch_size;
  exec.fused_short_circuit = recipe.fused_short_circuit;
  auto hook = [&](std::size_t i, const Dataset& ds, StageReport& report) {
    report.out_bytes = ds.approx_bytes();
    std::size_t completed = i + 1;
    try {
      if (cache) {
        cache->store(completed, fps[completed], ds);
        cache->evict(completed);
      }
      if (ckpt) ckpt->write(completed, ds, result.plan_fp);
    } catch (const DiskFull& e) {
      throw DiskFull(disk_full_message(e.what(), result.space, result.policy));
    }
    if (options.after_stage_committed) options.after_stage_committed(completed);
  };
  result.dataset = execute(plan, std::move(current), exec, &result.stages, tracer, start, hook);
  result.output_fp = result.dataset.fingerprint();
  if (ckpt) ckpt->clear();

  if (options.write_export && !recipe.export_path.empty()) {
    fs::path out(recipe.export_path);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_jsonl(result.dataset, out);
  }
  if (tracer && recipe.trace) {
    fs::path dir = recipe.trace_dir.empty()
                       ? (fs::path(recipe.export_path).parent_path() / "trace")
                       : fs::path(recipe.trace_dir);
    tracer->write(dir);
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (options.write_export) {
    Json manifest = manifest_json(recipe, result);
    manifest["input_memory_bytes"] = input_memory;
    write_file_atomic(manifest_path(recipe), manifest.dump(2) + "\n");
  }
  return result;
}

Json manifest_json(const Recipe& recipe, const RunResult& result) {
  Json stages = Json::array();
  std::uint64_t peak = 0;
  for (const auto& s : result.stages) {
    Json deriv = Json::object();
    for (auto k : {ContextKey::Words, ContextKey::Lines, ContextKey::Sentences, ContextKey::CharClasses}) {
      deriv[std::string(to_string(k))] = s.derivations[k];
    }
    stages.push_back({{"label", s.label},
                      {"in", s.in},
                      {"out", s.out},
                      {"computations", s.computations},
                      {"derivations", deriv},
                      {"peak_context_entries", s.peak_context_entries},
                      {"cache_hit", s.cache_hit},
                      {"restored", s.restored},
                      {"seconds", s.seconds},
                      {"out_bytes", s.out_bytes}});
    peak = std::max(peak, s.out_bytes);
  }
  Json j;
  j["run_id"] = run_id(recipe.project);
  j["recipe_hash"] = hash128(recipe.to_json().dump()).hex();
  j["input_fingerprint"] = result.input_fp.hex();
  j["output_fingerprint"] = result.output_fp.hex();
  j["plan_fingerprint"] = result.plan_fp.hex();
  j["output_samples"] = result.dataset.size();
  j["stages"] = stages;
  j["total_computations"] = result.total_computations();
  j["cache_hit_stages"] = result.cache_hit_stages;
  j["resumed_stages"] = result.resumed_stages;
  j["seconds"] = result.seconds;
  // Two live copies of the largest stage output (input + output of a stage).
  j["peak_memory_estimate_bytes"] = 2 * peak;
  j["space_plan"] = state::to_json(result.space);
  j["policy"] = {{"cache", result.policy.cache}, {"checkpoint", result.policy.checkpoint}};
  j["created_at"] = static_cast<std::int64_t>(std::time(nullptr));
  return j;
}

}  // namespace forge::pipeline
