#include "forge/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "forge/error.hpp"
#include "forge/log.hpp"
#include "forge/random.hpp"

namespace forge::hpo {

namespace {

const char* kind_name(Param::Kind k) {
  switch (k) {
    case Param::Kind::Continuous: return "float";
    case Param::Kind::Integer: return "int";
    case Param::Kind::Categorical: return "choice";
  }
  return "?";
}

bool better(double a, double b, bool maximize) { return maximize ? a > b : a < b; }

class HistoryWriter {
 public:
  explicit HistoryWriter(const std::optional<std::filesystem::path>& path) {
    if (!path) return;
    if (path->has_parent_path()) std::filesystem::create_directories(path->parent_path());
    out_.open(*path, std::ios::trunc);
    if (!out_) throw IoError("cannot write history " + path->string());
  }
  void write(const Trial& t) {
    if (!out_.is_open()) return;
    out_ << t.to_json().dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

// Evaluates `batch` in place, up to `parallel` at a time. Results do not
// depend on the degree of parallelism.
void evaluate(std::vector<Trial>& batch, const Objective& objective, std::size_t parallel) {
  auto run_one = [&](Trial& t) {
    try {
      double v = objective(t.assignment, t.fraction, t.artifacts);
      if (std::isfinite(v)) t.value = v;
      else t.error = "objective returned a non-finite value";
    } catch (const Error& e) {
      t.error = e.kind() + ": " + e.what();
    } catch (const std::exception& e) {
      t.error = e.what();
    }
    if (t.failed()) log::warn("trial {} failed: {}", t.index, t.error);
  };
  if (parallel <= 1) {
    for (auto& t : batch) run_one(t);
    return;
  }
  for (std::size_t start = 0; start < batch.size(); start += parallel) {
    std::vector<std::thread> threads;
    for (std::size_t i = start; i < std::min(batch.size(), start + parallel); ++i) {
      threads.emplace_back([&, i] { run_one(batch[i]); });
    }
    for (auto& th : threads) th.join();
  }
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

Json Param::draw(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::Continuous: return lo + uniform_unit(rng) * (hi - lo);
    case Kind::Integer: {
      auto a = static_cast<std::int64_t>(lo), b = static_cast<std::int64_t>(hi);
      return a + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(b - a + 1)));
    }
    case Kind::Categorical: return choices.at(uniform_below(rng, choices.size()));
  }
  return nullptr;
}

double Param::numeric(const Json& value) const {
  if (kind != Kind::Categorical) return value.get<double>();
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i] == value) return static_cast<double>(i);
  }
  return -1;
}

SearchSpace SearchSpace::from_json(const Json& j) {
  if (!j.is_object() || j.empty()) throw ParamError("search space must be a non-empty mapping of name -> parameter");
  SearchSpace space;
  for (const auto& [name, spec] : j.items()) {
    Param p;
    p.name = name;
    p.binding = name;
    if (!spec.is_object()) throw ParamError("parameter '" + name + "' must be a mapping");
    std::string type = spec.value("type", std::string("float"));
    if (type == "float" || type == "continuous") p.kind = Param::Kind::Continuous;
    else if (type == "int" || type == "integer") p.kind = Param::Kind::Integer;
    else if (type == "choice" || type == "categorical") p.kind = Param::Kind::Categorical;
    else throw ParamError("parameter '" + name + "': unknown type '" + type + "'");
    if (spec.contains("binding")) p.binding = spec["binding"].get<std::string>();
    if (p.kind == Param::Kind::Categorical) {
      if (!spec.contains("choices") || !spec["choices"].is_array() || spec["choices"].empty()) {
        throw ParamError("parameter '" + name + "' needs a non-empty choices list");
      }
      for (const auto& c : spec["choices"]) p.choices.push_back(c);
    } else {
      if (!spec.contains("low") || !spec.contains("high")) throw ParamError("parameter '" + name + "' needs low and high");
      p.lo = spec["low"].get<double>();
      p.hi = spec["high"].get<double>();
      if (!(p.lo <= p.hi)) throw ParamError("parameter '" + name + "': low > high");
      if (p.kind == Param::Kind::Integer && (p.lo != std::floor(p.lo) || p.hi != std::floor(p.hi))) {
        throw ParamError("parameter '" + name + "': integer bounds must be integral");
      }
    }
    for (const auto& [key, v] : spec.items()) {
      if (key != "type" && key != "low" && key != "high" && key != "choices" && key != "binding") {
        throw ParamError("parameter '" + name + "': unknown key '" + key + "'");
      }
    }
    space.params.push_back(std::move(p));
  }
  return space;
}

const Param* SearchSpace::find(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Json Trial::to_json() const {
  Json j{{"index", index},
         {"config", config},
         {"rung", rung},
         {"fraction", fraction},
         {"assignment", assignment},
         {"value", value ? Json(*value) : Json(nullptr)},
         {"failed", failed()}};
  if (!error.empty()) j["error"] = error;
  if (!artifacts.empty()) j["artifacts"] = artifacts;
  return j;
}

Scheduler scheduler_from_string(std::string_view s) {
  if (s == "random") return Scheduler::Random;
  if (s == "halving") return Scheduler::Halving;
  throw ParamError("unknown scheduler '" + std::string(s) + "' (expected random or halving)");
}

SearchResult search(const SearchSpace& space, const Objective& objective, const SearchOptions& options) {
  if (options.budget == 0) throw ParamError("search budget must be >= 1");
  if (space.params.empty()) throw ParamError("search space is empty");
  if (options.scheduler == Scheduler::Halving) {
    if (!(options.eta > 1)) throw ParamError("eta must be > 1");
    if (options.fractions.empty() || std::abs(options.fractions.back() - 1.0) > 1e-12) {
      throw ParamError("halving fractions must end at 1");
    }
  }
  std::mt19937_64 rng(options.seed);
  std::vector<Json> configs;
  for (std::size_t c = 0; c < options.budget; ++c) {
    Json a = Json::object();
    for (const auto& p : space.params) a[p.name] = p.draw(rng);
    configs.push_back(std::move(a));
  }

  SearchResult result;
  HistoryWriter history(options.history_path);
  auto commit = [&](std::vector<Trial>& batch) {
    for (auto& t : batch) {
      result.evaluation_units += t.fraction;
      history.write(t);
      result.history.push_back(t);
    }
  };
  auto pick_best = [&](const std::vector<Trial>& trials) {
    for (const auto& t : trials) {
      if (t.failed()) continue;
      if (!result.best || better(*t.value, *result.best->value, options.maximize)) result.best = t;
    }
  };

  if (options.scheduler == Scheduler::Random) {
    std::vector<Trial> batch;
    for (std::size_t c = 0; c < configs.size(); ++c) {
      Trial t;
      t.index = c;
      t.config = c;
      t.assignment = configs[c];
      batch.push_back(std::move(t));
    }
    evaluate(batch, objective, options.parallel_trials);
    commit(batch);
    pick_best(batch);
    return result;
  }

  // Small budgets skip the earliest rungs: n configs support at most
  // 1 + floor(log_eta n) rungs, which keeps total work <= n full runs.
  std::size_t rungs = 1;
  while (rungs < options.fractions.size() &&
         std::pow(options.eta, static_cast<double>(rungs)) <= static_cast<double>(configs.size()) + 1e-9) {
    ++rungs;
  }
  std::vector<double> schedule(options.fractions.end() - static_cast<std::ptrdiff_t>(rungs), options.fractions.end());
  std::vector<std::size_t> alive(configs.size());
  std::iota(alive.begin(), alive.end(), 0);
  std::size_t next_index = 0;
  for (std::size_t r = 0; r < schedule.size(); ++r) {
    std::vector<Trial> batch;
    for (std::size_t c : alive) {
      Trial t;
      t.index = next_index++;
      t.config = c;
      t.rung = r;
      t.fraction = schedule[r];
      t.assignment = configs[c];
      batch.push_back(std::move(t));
    }
    evaluate(batch, objective, options.parallel_trials);
    commit(batch);
    if (r + 1 == schedule.size()) {
      pick_best(batch);
      break;
    }
    std::vector<const Trial*> ok;
    for (const auto& t : batch) {
      if (!t.failed()) ok.push_back(&t);
    }
    std::stable_sort(ok.begin(), ok.end(),
                     [&](const Trial* a, const Trial* b) { return better(*a->value, *b->value, options.maximize); });
    auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(alive.size()) / options.eta));
    keep = std::min(std::max<std::size_t>(keep, 1), ok.size());
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) alive.push_back(ok[i]->config);
    std::sort(alive.begin(), alive.end());
    if (alive.empty()) {
      log::warn("halving: every trial in rung {} failed", r);
      break;
    }
  }
  return result;
}

Json SearchResult::to_json() const {
  Json h = Json::array();
  for (const auto& t : history) h.push_back(t.to_json());
  return Json{{"best", best ? best->to_json() : Json(nullptr)}, {"evaluation_units", evaluation_units}, {"trials", h}};
}

std::uint64_t count_tokens(const Dataset& dataset, const quality::Tokenizer& tokenizer) {
  std::uint64_t n = 0;
  for (const auto& s : dataset) n += tokenizer.tokenize(s.text).size();
  return n;
}

double objective_mix_quality(std::uint64_t n, std::uint64_t total_tokens, double mean_score) {
  if (total_tokens == 0) throw ParamError("total source tokens N must be > 0");
  return static_cast<double>(n) / static_cast<double>(total_tokens) + mean_score;
}

double objective_mix_quality(const Dataset& mixed, std::uint64_t total_tokens, const quality::QualityModel* model,
                             const quality::Tokenizer& tokenizer) {
  if (total_tokens == 0) throw ParamError("total source tokens N must be > 0");
  if (mixed.empty()) return 0.0;
  double sum = 0;
  std::unique_ptr<quality::Tokenizer> model_tok;
  for (const auto& s : mixed) {
    auto it = s.stats.find("quality_score");
    if (it != s.stats.end()) {
      sum += it->second;
    } else if (model) {
      if (!model_tok) model_tok = quality::make_tokenizer(model->tokenizer);
      sum += quality::score(*model, s.text, *model_tok);
    } else {
      throw MissingStat("sample " + std::to_string(s.id) + " has no stats.quality_score and no model was given");
    }
  }
  return objective_mix_quality(count_tokens(mixed, tokenizer), total_tokens, sum / static_cast<double>(mixed.size()));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ParamError("pearson: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

Json importance_report(const SearchSpace& space, const std::vector<Trial>& history) {
  std::vector<const Trial*> done;
  for (const auto& t : history) {
    if (!t.failed()) done.push_back(&t);
  }
  Json params = Json::array();
  if (done.size() < 2) {
    for (const auto& p : space.params) {
      params.push_back({{"name", p.name}, {"pearson", nullptr}, {"spearman", nullptr}, {"importance", nullptr}});
    }
    return Json{{"trials", done.size()}, {"params", params}};
  }
  std::vector<double> y;
  for (const auto* t : done) y.push_back(*t->value);
  std::vector<double> p_corr, s_corr;
  double total = 0;
  for (const auto& p : space.params) {
    std::vector<double> x;
    for (const auto* t : done) x.push_back(p.numeric(t->assignment.at(p.name)));
    p_corr.push_back(pearson(x, y));
    s_corr.push_back(spearman(x, y));
    total += std::abs(s_corr.back());
  }
  for (std::size_t i = 0; i < space.params.size(); ++i) {
    params.push_back({{"name", space.params[i].name},
                      {"kind", kind_name(space.params[i].kind)},
                      {"pearson", p_corr[i]},
                      {"spearman", s_corr[i]},
                      {"importance", total > 0 ? std::abs(s_corr[i]) / total : 0.0}});
  }
  return Json{{"trials", done.size()}, {"params", params}};
}

std::vector<Trial> read_history(const std::filesystem::path& path) {
  std::vector<Trial> out;
  std::ifstream in(path);
  if (!in) throw IoError("cannot read history " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line);
    Trial t;
    t.index = j.at("index").get<std::size_t>();
    t.config = j.value("config", t.index);
    t.rung = j.value("rung", std::size_t{0});
    t.fraction = j.value("fraction", 1.0);
    t.assignment = j.at("assignment");
    if (!j.at("value").is_null()) t.value = j["value"].get<double>();
    t.error = j.value("error", std::string());
    if (j.contains("artifacts")) t.artifacts = j["artifacts"];
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace forge::hpo
