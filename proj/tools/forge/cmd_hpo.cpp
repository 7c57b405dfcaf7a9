// hpo: recipe-parameter or mixture-weight search.
#include <iostream>
#include <memory>
#include <mutex>

#include "cli.hpp"
#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/hpo.hpp"
#include "forge/log.hpp"
#include "forge/pipeline.hpp"
#include "forge/quality.hpp"
#include "forge/sampler.hpp"

namespace forge::cli {

namespace {

struct HpoArgs {
  Common common;
  std::string history;
  std::string importance;
  std::optional<std::size_t> budget;
  std::optional<std::string> scheduler;
};

std::string override_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Everything the objective needs, loaded once and shared by trials.
struct HpoSetup {
  std::string mode;  // recipe | mixture
  std::string objective = "mix_quality";
  std::string recipe_source;
  Dataset input;
  std::vector<Dataset> sources;
  std::vector<std::string> names;
  std::vector<double> base_weights;
  std::size_t target = 0;
  std::optional<quality::QualityModel> model;
  std::unique_ptr<quality::Tokenizer> tokenizer;
  std::uint64_t seed = 42;
  OpRegistry registry = OpRegistry::builtin();
};

double score_mean(const HpoSetup& setup, const Dataset& ds) {
  if (ds.empty()) return 0.0;
  if (!setup.model) throw ParamError("objective mix_quality needs a quality model");
  auto tok = quality::make_tokenizer(setup.model->tokenizer);
  double sum = 0;
  for (const auto& s : ds) sum += quality::score(*setup.model, s.text, *tok);
  return sum / static_cast<double>(ds.size());
}

double evaluate_recipe(const HpoSetup& setup, const hpo::SearchSpace& space, const Json& assignment, double fraction,
                       Json& artifacts) {
  std::vector<pipeline::Override> overrides;
  for (const auto& p : space.params) overrides.push_back({p.binding, override_text(assignment.at(p.name))});
  pipeline::Recipe recipe = pipeline::parse_recipe(setup.recipe_source, overrides, setup.registry);
  Dataset input = sampler::proportional_subsample(setup.input, fraction, setup.seed);
  auto plan = pipeline::build_plan(recipe, setup.registry);
  pipeline::ExecOptions exec;
  exec.workers = recipe.workers;
  exec.batch_size = recipe.batch_size;
  Dataset out = pipeline::execute(plan, input, exec);
  artifacts["in"] = input.size();
  artifacts["out"] = out.size();
  if (setup.objective == "keep_ratio") return input.empty() ? 0.0 : double(out.size()) / double(input.size());
  std::uint64_t total = hpo::count_tokens(input, *setup.tokenizer);
  if (total == 0) throw ParamError("subsampled input has no tokens");
  return hpo::objective_mix_quality(hpo::count_tokens(out, *setup.tokenizer), total, score_mean(setup, out));
}

double evaluate_mixture(const HpoSetup& setup, const hpo::SearchSpace& space, const Json& assignment, double fraction,
                        Json& artifacts) {
  sampler::MixtureSpec spec;
  spec.weights = setup.base_weights;
  spec.names = setup.names;
  for (const auto& p : space.params) spec.weights.at(std::stoul(p.binding.substr(7))) = assignment.at(p.name).get<double>();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < setup.sources.size(); ++i) {
    spec.sources.push_back(sampler::proportional_subsample(setup.sources[i], fraction, setup.seed + i));
    total += hpo::count_tokens(spec.sources.back(), *setup.tokenizer);
  }
  spec.target = static_cast<std::size_t>(std::llround(static_cast<double>(setup.target) * fraction));
  auto mixed = sampler::mix(spec, setup.seed);
  artifacts["samples"] = mixed.dataset.size();
  if (setup.objective == "keep_ratio") throw ParamError("keep_ratio applies to recipe mode only");
  return hpo::objective_mix_quality(hpo::count_tokens(mixed.dataset, *setup.tokenizer), total,
                                    score_mean(setup, mixed.dataset));
}

int run_hpo(const HpoArgs& args, Context& ctx) {
  Json config = pipeline::load_config(args.common.config);
  if (!config.is_object()) throw ParseError("hpo config must be a mapping");
  for (const auto& [key, v] : config.items()) {
    static const std::set<std::string> allowed = {"mode",  "recipe",  "objective", "model",   "sources",
                                                  "target", "space",  "scheduler", "budget",  "eta",
                                                  "seed",  "maximize", "parallel_trials", "history",
                                                  "importance", "tokenizer", "fractions"};
    if (!allowed.contains(key)) throw ParseError("hpo config: unknown key '" + key + "'");
  }
  auto setup = std::make_shared<HpoSetup>();
  setup->mode = config_value<std::string>(config, "mode", config.contains("sources") ? "mixture" : "recipe");
  setup->objective = config_value<std::string>(config, "objective", "mix_quality");
  if (setup->objective != "mix_quality" && setup->objective != "keep_ratio") {
    throw ParamError("unknown objective '" + setup->objective + "' (expected mix_quality or keep_ratio)");
  }
  setup->seed = args.common.seed.value_or(config_value<std::uint64_t>(config, "seed", 42));
  setup->tokenizer = quality::make_tokenizer(config_value<std::string>(config, "tokenizer", "whitespace"));
  if (!config.contains("space")) throw ParseError("hpo config needs a space");
  hpo::SearchSpace space = hpo::SearchSpace::from_json(config["space"]);

  hpo::SearchOptions opts;
  opts.scheduler = hpo::scheduler_from_string(args.scheduler.value_or(config_value<std::string>(config, "scheduler", "random")));
  opts.budget = args.budget.value_or(config_value<std::size_t>(config, "budget", 20));
  opts.seed = setup->seed;
  opts.eta = config_value<double>(config, "eta", 3.0);
  if (config.contains("fractions")) opts.fractions = config["fractions"].get<std::vector<double>>();
  opts.maximize = config_value<bool>(config, "maximize", true);
  opts.parallel_trials = args.common.workers.value_or(config_value<std::size_t>(config, "parallel_trials", 1));
  std::string history = args.history.empty() ? config_value<std::string>(config, "history", "") : args.history;
  if (!history.empty()) opts.history_path = history;
  std::string importance = args.importance.empty() ? config_value<std::string>(config, "importance", "") : args.importance;

  std::string model_path = config_value<std::string>(config, "model", "");
  hpo::Objective objective;
  if (setup->mode == "recipe") {
    std::string recipe_path = config_value<std::string>(config, "recipe", "");
    if (recipe_path.empty()) throw ParseError("recipe mode needs 'recipe'");
    setup->recipe_source = read_file(recipe_path);
    // Every binding must land on a recipe field.
    for (const auto& p : space.params) {
      Json probe = p.kind == hpo::Param::Kind::Categorical ? p.choices.front()
                   : p.kind == hpo::Param::Kind::Integer   ? Json(static_cast<std::int64_t>(p.lo))
                                                           : Json(p.lo);
      pipeline::parse_recipe(setup->recipe_source, {{p.binding, override_text(probe)}}, setup->registry);
    }
    pipeline::Recipe base = pipeline::parse_recipe(setup->recipe_source, {}, setup->registry);
    ctx.phase = Phase::Runtime;
    setup->input = pipeline::load_input(base, setup->registry);
    if (!model_path.empty()) setup->model = quality::load_model(model_path);
    objective = [setup, space](const Json& a, double f, Json& art) { return evaluate_recipe(*setup, space, a, f, art); };
  } else if (setup->mode == "mixture") {
    if (!config.contains("sources") || !config["sources"].is_array() || config["sources"].empty()) {
      throw ParseError("mixture mode needs a sources list");
    }
    std::vector<std::string> paths;
    for (const auto& src : config["sources"]) {
      paths.push_back(src.at("path").get<std::string>());
      setup->names.push_back(config_value<std::string>(src, "name", "source" + std::to_string(setup->names.size())));
      setup->base_weights.push_back(config_value<double>(src, "weight", 1.0));
    }
    setup->target = config_value<std::size_t>(config, "target", 0);
    if (setup->target == 0) throw ParseError("mixture mode needs a positive target");
    for (const auto& p : space.params) {
      if (!p.binding.starts_with("weight.")) {
        throw ParamError("mixture parameter '" + p.name + "' must bind to weight.<i>, got '" + p.binding + "'");
      }
      std::size_t i = 0;
      try {
        i = std::stoul(p.binding.substr(7));
      } catch (const std::exception&) {
        throw ParamError("bad mixture binding '" + p.binding + "'");
      }
      if (i >= paths.size()) throw ParamError("binding '" + p.binding + "' names a missing source");
      if (p.kind == hpo::Param::Kind::Categorical) throw ParamError("mixture weights must be numeric");
    }
    if (model_path.empty() && setup->objective == "mix_quality") throw ParseError("mix_quality needs 'model'");
    ctx.phase = Phase::Runtime;
    for (const auto& p : paths) setup->sources.push_back(load_dataset(p));
    if (!model_path.empty()) setup->model = quality::load_model(model_path);
    objective = [setup, space](const Json& a, double f, Json& art) { return evaluate_mixture(*setup, space, a, f, art); };
  } else {
    throw ParseError("unknown hpo mode '" + setup->mode + "' (expected recipe or mixture)");
  }

  ctx.phase = Phase::Runtime;
  auto result = hpo::search(space, objective, opts);
  Json report = hpo::importance_report(space, result.history);
  if (!importance.empty()) emit_json(importance, report);
  Json summary{{"best", result.best ? result.best->to_json() : Json(nullptr)},
               {"trials", result.history.size()},
               {"evaluation_units", result.evaluation_units},
               {"importance", report}};
  emit_json("-", summary);
  return result.best ? kOk : kRuntimeError;
}

}  // namespace

void register_hpo(CLI::App& app, Action& selected) {
  auto args = std::make_shared<HpoArgs>();
  auto* sub = app.add_subcommand("hpo", "Search recipe params or mixture weights");
  add_common(sub, args->common, true);
  sub->add_option("--history", args->history, "History JSONL path");
  sub->add_option("--importance", args->importance, "Importance report JSON path");
  sub->add_option("--budget", args->budget, "Number of configurations");
  sub->add_option("--scheduler", args->scheduler, "random | halving");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_hpo(*args, c); }; });
}

}  // namespace forge::cli
