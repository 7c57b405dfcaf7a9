// process, ops list and plan.
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "cli.hpp"
#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/pipeline.hpp"
#include "forge/state.hpp"

namespace forge::cli {

namespace {

struct ProcessArgs {
  Common common;
  std::vector<std::string> overrides;
  bool dry_run = false;
  bool no_fusion = false;
  bool trace = false;
  std::string export_path;
};

pipeline::Recipe recipe_from(const Common& common, const std::vector<std::string>& override_texts) {
  std::vector<pipeline::Override> overrides;
  for (const auto& o : override_texts) overrides.push_back(pipeline::parse_override(o));
  if (common.seed) overrides.push_back({"seed", std::to_string(*common.seed)});
  if (common.workers) overrides.push_back({"np", std::to_string(*common.workers)});
  return pipeline::load_recipe(common.config, overrides);
}

int run_process(const ProcessArgs& args, Context& ctx) {
  std::vector<std::string> overrides = args.overrides;
  if (!args.export_path.empty()) overrides.push_back("export_path=" + args.export_path);
  if (args.trace) overrides.push_back("trace=true");
  pipeline::Recipe recipe = recipe_from(args.common, overrides);
  pipeline::PlanOptions popts;
  popts.fuse = popts.reorder = !args.no_fusion && recipe.op_fusion;
  pipeline::ExecutionPlan plan = pipeline::build_plan(recipe, OpRegistry::builtin(), popts);

  if (args.dry_run) {
    std::uint64_t bytes = pipeline::input_bytes(recipe);
    std::cout << plan.describe();
    std::cout << state::describe(pipeline::plan_space(recipe, bytes)) << "\n";
    return kOk;
  }
  if (recipe.export_path.empty()) throw ParseError("recipe has no export_path");

  ctx.phase = Phase::Runtime;
  pipeline::RunOptions ropts;
  ropts.plan = popts;
  auto result = pipeline::run(recipe, ropts);
  log::info("{} -> {} samples in {:.2f}s; manifest {}", result.stages.empty() ? 0 : result.stages.front().in,
            result.dataset.size(), result.seconds, pipeline::manifest_path(recipe).string());
  return kOk;
}

struct OpsArgs {
  Common common;
  std::optional<std::string> tag;
  bool json = false;
};

int run_ops_list(const OpsArgs& args, Context&) {
  OpRegistry registry = OpRegistry::builtin();
  auto entries = registry.list(args.tag);
  if (args.json) {
    Json out = Json::array();
    for (const auto* e : entries) out.push_back(descriptor_to_json(e->descriptor));
    std::cout << out.dump(2) << "\n";
    return kOk;
  }
  for (const auto* e : entries) {
    const auto& d = e->descriptor;
    std::string tags, contexts, params;
    for (const auto& t : d.tags) tags += (tags.empty() ? "" : ",") + t;
    for (auto k : d.contexts) contexts += (contexts.empty() ? "" : ",") + std::string(to_string(k));
    for (const auto& p : d.params) {
      params += fmt::format("{}{}={}", params.empty() ? "" : " ", p.name, p.default_value.dump());
    }
    std::cout << fmt::format("{:<28} {:<12} {:<9} tags=[{}] contexts=[{}]\n    {}\n", d.name, to_string(d.category),
                             to_string(d.cost), tags, contexts, params.empty() ? "(no params)" : params);
  }
  return kOk;
}

struct PlanArgs {
  Common common;
  std::optional<std::string> input_size;
  std::optional<std::size_t> mappers, filters, dedups;
  bool json = false;
};

int run_plan(const PlanArgs& args, Context&) {
  std::size_t m = 0, f = 0, d = 0;
  std::optional<std::uint64_t> bytes;
  std::optional<pipeline::Recipe> recipe;
  if (!args.common.config.empty()) {
    recipe = recipe_from(args.common, {});
    OpRegistry registry = OpRegistry::builtin();
    for (const auto& op : recipe->ops) {
      switch (registry.at(op.name).descriptor.category) {
        case Category::Mapper: ++m; break;
        case Category::Filter: ++f; break;
        case Category::Deduplicator: ++d; break;
        default: break;
      }
    }
    bytes = pipeline::input_bytes(*recipe);
  }
  if (args.mappers) m = *args.mappers;
  if (args.filters) f = *args.filters;
  if (args.dedups) d = *args.dedups;
  if (args.input_size) bytes = state::parse_size(*args.input_size);
  if (!bytes) throw ParamError("plan needs --input-size or a --config whose inputs exist");

  state::SpacePlan plan = recipe && !args.mappers && !args.filters && !args.dedups
                              ? pipeline::plan_space(*recipe, *bytes)
                              : state::plan_space(m, f, d, *bytes);
  if (args.json) {
    std::cout << state::to_json(plan).dump(2) << "\n";
  } else {
    std::cout << state::describe(plan) << "\n";
  }
  return kOk;
}

}  // namespace

void register_process(CLI::App& app, Action& selected) {
  auto args = std::make_shared<ProcessArgs>();
  auto* sub = app.add_subcommand("process", "Run a recipe and export the result");
  add_common(sub, args->common, true);
  sub->add_option("-o,--override", args->overrides, "dotted.path=value (repeatable)");
  sub->add_flag("--dry-run", args->dry_run, "Print the plan and space estimate; write nothing");
  sub->add_flag("--no-fusion", args->no_fusion, "Disable op fusion and reordering");
  sub->add_flag("--trace", args->trace, "Record per-op samples");
  sub->add_option("--export", args->export_path, "Override export_path");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_process(*args, c); }; });
}

void register_ops(CLI::App& app, Action& selected) {
  auto args = std::make_shared<OpsArgs>();
  auto* ops = app.add_subcommand("ops", "Operator catalog");
  ops->require_subcommand(1);
  auto* list = ops->add_subcommand("list", "List registered operators");
  add_common(list, args->common);
  list->add_option("--tag", args->tag, "Only ops with this tag");
  list->add_flag("--json", args->json, "Machine-readable descriptors");
  list->callback([args, &selected] { selected = [args](Context& c) { return run_ops_list(*args, c); }; });
}

void register_plan(CLI::App& app, Action& selected) {
  auto args = std::make_shared<PlanArgs>();
  auto* sub = app.add_subcommand("plan", "Estimate disk usage of cache and checkpoint modes");
  add_common(sub, args->common);
  sub->add_option("--input-size", args->input_size, "Input size, e.g. 12GB or 500MiB");
  sub->add_option("-M,--mappers", args->mappers, "Mapper count");
  sub->add_option("-F,--filters", args->filters, "Filter count");
  sub->add_option("-D,--dedups", args->dedups, "Deduplicator count");
  sub->add_flag("--json", args->json, "Emit JSON");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_plan(*args, c); }; });
}

}  // namespace forge::cli
