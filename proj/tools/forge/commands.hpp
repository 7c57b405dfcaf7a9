#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "forge/core.hpp"

namespace forge::cli {

// Errors thrown while reading configuration map to exit 2, later ones to 3.
enum class Phase { Config, Runtime };

struct Context {
  Phase phase = Phase::Config;
};

using Action = std::function<int(Context&)>;

/// Flags every subcommand accepts.
struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string config;
};

void add_common(CLI::App* sub, Common& common, bool config_required = false);

void register_process(CLI::App& app, Action& selected);
void register_ops(CLI::App& app, Action& selected);
void register_plan(CLI::App& app, Action& selected);
void register_analyze(CLI::App& app, Action& selected);
void register_dedup(CLI::App& app, Action& selected);
void register_sample(CLI::App& app, Action& selected);
void register_quality(CLI::App& app, Action& selected);
void register_hpo(CLI::App& app, Action& selected);

/// Loads a data file with the formatter its extension selects.
Dataset load_dataset(const std::string& path);
/// `-` or empty writes to stdout.
void emit_json(const std::string& path, const Json& j);
void emit_text(const std::string& path, const std::string& text);

/// Config value or fallback; CLI flags win over both.
template <typename T>
T config_value(const Json& config, const char* key, T fallback) {
  if (!config.is_object() || !config.contains(key) || config[key].is_null()) return fallback;
  return config[key].get<T>();
}

}  // namespace forge::cli
