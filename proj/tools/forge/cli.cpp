#include "cli.hpp"

#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/pipeline.hpp"

namespace forge::cli {

void add_common(CLI::App* sub, Common& common, bool config_required) {
  auto* opt = sub->add_option("-c,--config", common.config, "YAML config file");
  if (config_required) opt->required();
  sub->add_option("--seed", common.seed, "Random seed (overrides the config)");
  sub->add_option("-w,--workers", common.workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

Dataset load_dataset(const std::string& path) {
  pipeline::Recipe recipe;
  recipe.dataset_paths = {path};
  return pipeline::load_input(recipe);
}

void emit_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  write_file_atomic(path, text);
}

void emit_json(const std::string& path, const Json& j) { emit_text(path, j.dump(2) + "\n"); }

int main(const std::vector<std::string>& args) {
  CLI::App app{"forge: recipe-driven text corpus processing"};
  app.require_subcommand(1);
  std::string level = "warn";
  app.add_option("--log-level", level, "debug | info | warn | error | off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

  Action selected;
  register_process(app, selected);
  register_ops(app, selected);
  register_plan(app, selected);
  register_analyze(app, selected);
  register_dedup(app, selected);
  register_sample(app, selected);
  register_quality(app, selected);
  register_hpo(app, selected);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return kConfigError;
  }

  static const std::map<std::string, log::Level> levels = {{"debug", log::Level::Debug},
                                                            {"info", log::Level::Info},
                                                            {"warn", log::Level::Warn},
                                                            {"error", log::Level::Error},
                                                            {"off", log::Level::Off}};
  log::set_level(levels.at(level));

  if (!selected) {
    std::cerr << app.help();
    return kConfigError;
  }
  Context ctx;
  try {
    return selected(ctx);
  } catch (const Error& e) {
    std::cerr << "forge: " << e.kind() << ": " << e.what() << "\n";
    return ctx.phase == Phase::Config ? kConfigError : kRuntimeError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "forge: invalid value: " << e.what() << "\n";
    return ctx.phase == Phase::Config ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return main(args);
}

}  // namespace forge::cli
