// analyze, dedup, sample and quality.
#include <iostream>
#include <memory>

#include "cli.hpp"
#include "commands.hpp"
#include "forge/error.hpp"
#include "forge/insight.hpp"
#include "forge/log.hpp"
#include "forge/pipeline.hpp"
#include "forge/quality.hpp"
#include "forge/sampler.hpp"

namespace forge::cli {

namespace {

Json load_config_or_empty(const std::string& path) {
  if (path.empty()) return Json::object();
  Json j = pipeline::load_config(path);
  if (!j.is_object()) throw ParseError(path + ": config must be a mapping");
  return j;
}

void check_keys(const Json& config, std::initializer_list<const char*> allowed, const std::string& what) {
  for (const auto& [key, v] : config.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(what + ": unknown key '" + key + "'");
  }
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  Common common;
  std::string input;
  std::string out;
  std::string html;
  std::string with_stats;
  std::string before;
  std::vector<std::string> dims;
};

int run_analyze(const AnalyzeArgs& args, Context& ctx) {
  Json config = load_config_or_empty(args.common.config);
  check_keys(config, {"dataset_path", "dims", "np", "filter_params", "out", "html", "export_path", "before", "seed"},
             "analyze config");
  std::string input = args.input.empty() ? config_value<std::string>(config, "dataset_path", "") : args.input;
  if (input.empty()) throw ParamError("analyze needs --input or dataset_path in the config");
  insight::AnalyzeOptions opts;
  opts.dims = args.dims.empty() ? config_value<std::vector<std::string>>(config, "dims", {}) : args.dims;
  for (const auto& d : opts.dims) insight::dimension_source(d);
  opts.workers = args.common.workers.value_or(config_value<std::size_t>(config, "np", 1));
  if (config.contains("filter_params")) {
    for (const auto& [k, v] : config["filter_params"].items()) opts.filter_params[k] = v;
  }
  std::string out = args.out.empty() ? config_value<std::string>(config, "out", "-") : args.out;
  std::string html = args.html.empty() ? config_value<std::string>(config, "html", "") : args.html;
  std::string with_stats = args.with_stats.empty() ? config_value<std::string>(config, "export_path", "") : args.with_stats;
  std::string before_path = args.before.empty() ? config_value<std::string>(config, "before", "") : args.before;
  std::optional<insight::StatsReport> before;
  if (!before_path.empty()) before = insight::report_from_json(Json::parse(read_file(before_path)));

  ctx.phase = Phase::Runtime;
  Dataset ds = load_dataset(input);
  Dataset computed;
  auto report = insight::analyze(ds, opts, with_stats.empty() ? nullptr : &computed);
  if (!with_stats.empty()) write_jsonl(computed, with_stats);
  Json j = insight::to_json(report);
  std::optional<Json> diff;
  if (before) {
    diff = insight::diff_report(*before, report);
    j = Json{{"report", j}, {"diff", *diff}};
  }
  emit_json(out, j);
  if (!html.empty()) {
    write_file_atomic(html, insight::render_html(report, diff ? &*diff : nullptr, "forge analyze: " + input));
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct DedupArgs {
  Common common;
  std::string input;
  std::string output;
  std::optional<std::string> method;
  std::string pairs;
  std::vector<std::string> params;
};

std::string dedup_op_name(const std::string& method) {
  if (method == "exact" || method == "exact_hash") return "exact_hash";
  if (method == "minhash" || method == "minhash_lsh") return "minhash_lsh";
  if (method == "simhash") return "simhash";
  throw ParamError("unknown dedup method '" + method + "' (expected exact, minhash or simhash)");
}

int run_dedup(const DedupArgs& args, Context& ctx) {
  Json config = load_config_or_empty(args.common.config);
  std::string name = dedup_op_name(args.method.value_or(config_value<std::string>(config, "method", "minhash")));
  std::string input = args.input.empty() ? config_value<std::string>(config, "dataset_path", "") : args.input;
  std::string output = args.output.empty() ? config_value<std::string>(config, "export_path", "") : args.output;
  std::string pairs = args.pairs.empty() ? config_value<std::string>(config, "pairs", "") : args.pairs;
  std::size_t workers = args.common.workers.value_or(config_value<std::size_t>(config, "np", 1));
  if (input.empty() || output.empty()) throw ParamError("dedup needs --input and --output (or dataset_path/export_path)");

  Json params = config.contains("params") ? config["params"] : Json::object();
  for (const auto& p : args.params) {
    auto o = pipeline::parse_override(p);
    params[o.path] = pipeline::parse_config(o.value);
  }
  if (args.common.seed && name == "minhash_lsh") params["seed"] = *args.common.seed;
  OpRegistry registry = OpRegistry::builtin();
  auto op = registry.create(name, registry.resolve_params(name, params));
  const auto& dedup = dynamic_cast<const Deduplicator&>(*op);

  ctx.phase = Phase::Runtime;
  Dataset ds = load_dataset(input);
  DedupResult result = dedup.run(ds, workers);
  write_jsonl(result.dataset, output);
  if (!pairs.empty()) {
    std::string lines;
    for (const auto& pr : result.pairs) {
      lines += Json{{"kept", pr.kept_id}, {"removed", pr.removed_id}, {"score", pr.score}}.dump() + "\n";
    }
    write_file_atomic(pairs, lines);
  }
  log::info("{}: {} -> {} samples, {} duplicate pairs", name, ds.size(), result.dataset.size(), result.pairs.size());
  emit_json("-", Json{{"method", name}, {"in", ds.size()}, {"out", result.dataset.size()}, {"pairs", result.pairs.size()}});
  return kOk;
}

// ---------------------------------------------------------------------------

struct SampleArgs {
  Common common;
  std::string output;
  std::string report;
};

int run_sample(const SampleArgs& args, Context& ctx) {
  Json config = load_config_or_empty(args.common.config);
  check_keys(config, {"dataset_path", "export_path", "report", "strata", "mixture", "seed", "np"}, "sample config");
  std::uint64_t seed = args.common.seed.value_or(config_value<std::uint64_t>(config, "seed", 42));
  std::string output = args.output.empty() ? config_value<std::string>(config, "export_path", "") : args.output;
  std::string report = args.report.empty() ? config_value<std::string>(config, "report", "-") : args.report;
  if (output.empty()) throw ParamError("sample needs export_path or --output");
  if (config.contains("strata") == config.contains("mixture")) {
    throw ParseError("sample config needs exactly one of 'strata' or 'mixture'");
  }

  if (config.contains("strata")) {
    auto spec = sampler::StrataSpec::from_json(config["strata"]);
    spec.seed = seed;
    spec.workers = args.common.workers.value_or(config_value<std::size_t>(config, "np", 1));
    std::string input = config_value<std::string>(config, "dataset_path", "");
    if (input.empty()) throw ParamError("strata sampling needs dataset_path");
    ctx.phase = Phase::Runtime;
    auto result = sampler::stratified_sample(load_dataset(input), spec);
    write_jsonl(result.dataset, output);
    emit_json(report, result.report_json());
    return kOk;
  }

  const Json& m = config["mixture"];
  if (!m.is_object() || !m.contains("sources") || !m["sources"].is_array()) {
    throw ParseError("mixture needs a sources list");
  }
  sampler::MixtureSpec spec;
  spec.target = config_value<std::size_t>(m, "target", 0);
  std::vector<std::string> paths;
  for (const auto& src : m["sources"]) {
    paths.push_back(src.at("path").get<std::string>());
    spec.weights.push_back(config_value<double>(src, "weight", 1.0));
    spec.names.push_back(config_value<std::string>(src, "name", "source" + std::to_string(spec.names.size())));
  }
  ctx.phase = Phase::Runtime;
  for (const auto& p : paths) spec.sources.push_back(load_dataset(p));
  auto result = sampler::mix(spec, seed);
  write_jsonl(result.dataset, output);
  emit_json(report, result.report_json(spec));
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string positive, negative, model, metrics, tokenizer, field;
  std::optional<int> h;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr, l2;
};

int run_train(const TrainArgs& args, Context& ctx) {
  Json config = load_config_or_empty(args.common.config);
  check_keys(config, {"positive", "negative", "model", "metrics", "h", "epochs", "lr", "l2", "batch_size", "seed",
                      "tokenizer", "field", "eval_fraction"},
             "quality train config");
  quality::TrainOptions opts;
  opts.h = args.h.value_or(config_value<int>(config, "h", opts.h));
  opts.epochs = args.epochs.value_or(config_value<std::size_t>(config, "epochs", opts.epochs));
  opts.batch_size = args.batch_size.value_or(config_value<std::size_t>(config, "batch_size", opts.batch_size));
  opts.lr = args.lr.value_or(config_value<double>(config, "lr", opts.lr));
  opts.l2 = args.l2.value_or(config_value<double>(config, "l2", opts.l2));
  opts.seed = args.common.seed.value_or(config_value<std::uint64_t>(config, "seed", opts.seed));
  opts.eval_fraction = config_value<double>(config, "eval_fraction", opts.eval_fraction);
  std::string field = args.field.empty() ? config_value<std::string>(config, "field", "text") : args.field;
  opts.field = FieldPath::parse(field);
  auto tokenizer = quality::make_tokenizer(
      args.tokenizer.empty() ? config_value<std::string>(config, "tokenizer", "whitespace") : args.tokenizer);
  std::string pos = args.positive.empty() ? config_value<std::string>(config, "positive", "") : args.positive;
  std::string neg = args.negative.empty() ? config_value<std::string>(config, "negative", "") : args.negative;
  std::string model_path = args.model.empty() ? config_value<std::string>(config, "model", "") : args.model;
  std::string metrics = args.metrics.empty() ? config_value<std::string>(config, "metrics", "-") : args.metrics;
  if (pos.empty() || neg.empty() || model_path.empty()) throw ParamError("quality train needs positive, negative and model");

  ctx.phase = Phase::Runtime;
  auto model = quality::train(load_dataset(pos), load_dataset(neg), opts, *tokenizer);
  quality::save_model(model, model_path);
  emit_json(metrics, model.metadata);
  return kOk;
}

struct ScoreArgs {
  Common common;
  std::string model, input, output;
  std::optional<std::string> keep, field;
  std::optional<double> alpha;
};

int run_score(const ScoreArgs& args, Context& ctx) {
  Json config = load_config_or_empty(args.common.config);
  std::string model_path = args.model.empty() ? config_value<std::string>(config, "model", "") : args.model;
  std::string input = args.input.empty() ? config_value<std::string>(config, "dataset_path", "") : args.input;
  std::string output = args.output.empty() ? config_value<std::string>(config, "export_path", "") : args.output;
  std::string keep = args.keep.value_or(config_value<std::string>(config, "keep", "none"));
  if (model_path.empty() || input.empty() || output.empty()) throw ParamError("quality score needs model, input and output");
  std::optional<quality::KeepRule> rule;
  if (keep != "none") {
    rule = quality::KeepRule{quality::keep_kind_from_string(keep), args.alpha.value_or(config_value<double>(config, "alpha", 9.0)),
                             args.common.seed.value_or(config_value<std::uint64_t>(config, "seed", 42))};
  }
  FieldPath field = FieldPath::parse(args.field.value_or(config_value<std::string>(config, "field", "text")));

  ctx.phase = Phase::Runtime;
  auto model = quality::load_model(model_path);
  Dataset scored = quality::score_dataset(model, load_dataset(input), args.common.workers.value_or(1), field);
  std::size_t n = scored.size();
  if (rule) scored = quality::apply_keep_rule(scored, *rule);
  write_jsonl(scored, output);
  emit_json("-", Json{{"in", n}, {"out", scored.size()}, {"keep", keep}});
  return kOk;
}

}  // namespace

void register_analyze(CLI::App& app, Action& selected) {
  auto args = std::make_shared<AnalyzeArgs>();
  auto* sub = app.add_subcommand("analyze", "Per-dimension statistics of a dataset");
  add_common(sub, args->common);
  sub->add_option("-i,--input", args->input, "Dataset file");
  sub->add_option("--out", args->out, "Report JSON (default stdout)");
  sub->add_option("--html", args->html, "Self-contained HTML report");
  sub->add_option("--with-stats", args->with_stats, "Also write the dataset with stats filled in");
  sub->add_option("--before", args->before, "Prior report JSON to diff against");
  sub->add_option("--dims", args->dims, "Dimensions (default all)");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_analyze(*args, c); }; });
}

void register_dedup(CLI::App& app, Action& selected) {
  auto args = std::make_shared<DedupArgs>();
  auto* sub = app.add_subcommand("dedup", "Remove exact or near duplicates");
  add_common(sub, args->common);
  sub->add_option("-i,--input", args->input, "Dataset file");
  sub->add_option("-o,--output", args->output, "Output JSONL");
  sub->add_option("--method", args->method, "exact | minhash | simhash (default minhash)");
  sub->add_option("--pairs", args->pairs, "Write duplicate pairs as JSONL");
  sub->add_option("-p,--param", args->params, "Method param key=value (repeatable)");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_dedup(*args, c); }; });
}

void register_sample(CLI::App& app, Action& selected) {
  auto args = std::make_shared<SampleArgs>();
  auto* sub = app.add_subcommand("sample", "Stratified sampling or weighted mixing");
  add_common(sub, args->common, true);
  sub->add_option("-o,--output", args->output, "Output JSONL (overrides export_path)");
  sub->add_option("--report", args->report, "Shortfall / mixture report JSON (default stdout)");
  sub->callback([args, &selected] { selected = [args](Context& c) { return run_sample(*args, c); }; });
}

void register_quality(CLI::App& app, Action& selected) {
  auto* q = app.add_subcommand("quality", "Quality classifier");
  q->require_subcommand(1);

  auto targs = std::make_shared<TrainArgs>();
  auto* train = q->add_subcommand("train", "Train on positive and negative JSONL");
  add_common(train, targs->common);
  train->add_option("--positive", targs->positive, "Positive examples");
  train->add_option("--negative", targs->negative, "Negative examples");
  train->add_option("-m,--model", targs->model, "Model output path");
  train->add_option("--metrics", targs->metrics, "Metrics JSON (default stdout)");
  train->add_option("--feature-bits", targs->h, "Feature bits h, 10..26");
  train->add_option("--epochs", targs->epochs, "Epochs");
  train->add_option("--lr", targs->lr, "Learning rate");
  train->add_option("--l2", targs->l2, "L2 penalty");
  train->add_option("--batch-size", targs->batch_size, "Mini-batch size");
  train->add_option("--tokenizer", targs->tokenizer, "whitespace | vocab:<path>");
  train->add_option("--field", targs->field, "Text field");
  train->callback([targs, &selected] { selected = [targs](Context& c) { return run_train(*targs, c); }; });

  auto sargs = std::make_shared<ScoreArgs>();
  auto* score = q->add_subcommand("score", "Write stats.quality_score and apply a keep rule");
  add_common(score, sargs->common);
  score->add_option("-m,--model", sargs->model, "Model file");
  score->add_option("-i,--input", sargs->input, "Dataset file");
  score->add_option("-o,--output", sargs->output, "Output JSONL");
  score->add_option("--keep", sargs->keep, "none | label | pareto (default none)");
  score->add_option("--alpha", sargs->alpha, "Pareto shape (default 9)");
  score->add_option("--field", sargs->field, "Text field (default text)");
  score->callback([sargs, &selected] { selected = [sargs](Context& c) { return run_score(*sargs, c); }; });
}

}  // namespace forge::cli
