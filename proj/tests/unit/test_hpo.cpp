#include <doctest.h>

#include <atomic>
#include <cmath>

#include "forge/error.hpp"
#include "forge/hpo.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::hpo;

namespace {

SearchSpace unit_box(std::size_t dims) {
  Json j = Json::object();
  for (std::size_t i = 1; i <= dims; ++i) j["w" + std::to_string(i)] = {{"type", "float"}, {"low", 0}, {"high", 1}};
  return SearchSpace::from_json(j);
}

double quadratic(const Json& a) {
  double x = a.at("w1").get<double>();
  return -(x - 0.3) * (x - 0.3);
}

Json param_of(const Json& report, const std::string& name) {
  for (const auto& p : report.at("params")) {
    if (p.at("name") == name) return p;
  }
  FAIL("no param " << name);
  return {};
}

}  // namespace

TEST_SUITE("hpo") {
  TEST_CASE("mix quality objective examples") {
    CHECK(objective_mix_quality(900, 1000, 0.9) == doctest::Approx(1.8));
    CHECK(objective_mix_quality(0, 1000, 0.0) == 0.0);
    CHECK(objective_mix_quality(500, 1000, 0.8) == doctest::Approx(1.3));
    CHECK(objective_mix_quality(Dataset(), 10, nullptr) == 0.0);
    CHECK_THROWS_AS(objective_mix_quality(1, 0, 0.5), ParamError);
    Dataset ds = parse_jsonl("{\"text\":\"a b\",\"stats\":{\"quality_score\":0.5}}\n");
    CHECK(objective_mix_quality(ds, 4, nullptr) == doctest::Approx(1.0));
  }

  TEST_CASE("random search finds the quadratic optimum") {
    SearchOptions o;
    o.budget = 200;
    auto r = search(unit_box(1), [](const Json& a, double, Json&) { return quadratic(a); }, o);
    REQUIRE(r.best);
    CHECK(std::abs(r.best->assignment["w1"].get<double>() - 0.3) <= 0.02);
    CHECK(r.history.size() == 200);
    CHECK(r.evaluation_units == doctest::Approx(200.0));
  }

  TEST_CASE("budget one evaluates once at full size") {
    for (auto sched : {Scheduler::Random, Scheduler::Halving}) {
      SearchOptions o;
      o.budget = 1;
      o.scheduler = sched;
      auto r = search(unit_box(1), [](const Json& a, double, Json&) { return quadratic(a); }, o);
      REQUIRE(r.history.size() == 1);
      CHECK(r.history[0].fraction == 1.0);
      CHECK(r.best);
    }
    SearchOptions zero;
    zero.budget = 0;
    CHECK_THROWS_AS(search(unit_box(1), [](const Json&, double, Json&) { return 0.0; }, zero), ParamError);
    CHECK_THROWS_AS(search(SearchSpace{}, [](const Json&, double, Json&) { return 0.0; }, {}), ParamError);
  }

  TEST_CASE("halving picks its winner from full-size evaluations and spends less") {
    SearchOptions o;
    o.budget = 27;
    o.scheduler = Scheduler::Halving;
    auto r = search(unit_box(1), [](const Json& a, double, Json&) { return quadratic(a); }, o);
    REQUIRE(r.best);
    CHECK(r.best->fraction == 1.0);
    CHECK(r.evaluation_units < 27.0);
    std::size_t full = 0;
    double units = 0;
    for (const auto& t : r.history) {
      full += t.fraction == 1.0;
      units += t.fraction;
    }
    CHECK(full == 3);
    CHECK(r.evaluation_units == doctest::Approx(units));
  }

  TEST_CASE("failed trials are recorded, not fatal") {
    SearchOptions o;
    o.budget = 10;
    auto r = search(unit_box(1),
                    [](const Json& a, double, Json&) {
                      double x = a.at("w1").get<double>();
                      if (x < 0.5) throw std::runtime_error("bad region");
                      return x > 0.9 ? std::nan("") : x;
                    },
                    o);
    std::size_t failed = 0;
    for (const auto& t : r.history) failed += t.failed();
    CHECK(failed > 0);
    CHECK(r.history.size() == 10);
    if (r.best) CHECK_FALSE(r.best->failed());
  }

  TEST_CASE("importance singles out the parameter that matters") {
    SearchOptions o;
    o.budget = 200;
    SearchSpace space = unit_box(3);
    auto r = search(space, [](const Json& a, double, Json&) { return 3 * a.at("w1").get<double>(); }, o);
    Json rep = importance_report(space, r.history);
    CHECK(param_of(rep, "w1")["importance"].get<double>() > 0.8);
    CHECK(param_of(rep, "w1")["spearman"].get<double>() == doctest::Approx(1.0));
  }

  TEST_CASE("constant objective gives zero importance; one trial gives nulls") {
    SearchOptions o;
    o.budget = 10;
    SearchSpace space = unit_box(2);
    auto r = search(space, [](const Json&, double, Json&) { return 1.0; }, o);
    Json rep = importance_report(space, r.history);
    CHECK(param_of(rep, "w1")["importance"].get<double>() == 0.0);
    CHECK(param_of(rep, "w2")["pearson"].get<double>() == 0.0);
    o.budget = 1;
    auto one = search(space, [](const Json&, double, Json&) { return 1.0; }, o);
    Json nulls = importance_report(space, one.history);
    CHECK(param_of(nulls, "w1")["importance"].is_null());
    CHECK(param_of(nulls, "w1")["spearman"].is_null());
  }

  TEST_CASE("same seed reproduces the history; parallel trials agree") {
    testing::TempDir dir("forge-hpo");
    SearchOptions o;
    o.budget = 20;
    o.scheduler = Scheduler::Halving;
    o.history_path = dir / "h.jsonl";
    auto f = [](const Json& a, double frac, Json&) { return quadratic(a) * frac; };
    auto a = search(unit_box(2), f, o);
    auto b = search(unit_box(2), f, o);
    CHECK(a.to_json() == b.to_json());
    o.parallel_trials = 4;
    o.history_path.reset();
    CHECK(search(unit_box(2), f, o).to_json() == a.to_json());
    auto back = read_history(dir / "h.jsonl");
    // Each run truncates the history file.
    REQUIRE(back.size() == a.history.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i].to_json() == a.history[i].to_json());
  }

  TEST_CASE("space parsing and draws") {
    auto space = SearchSpace::from_json(Json::parse(
        R"({"n":{"type":"int","low":2,"high":4},"c":{"type":"choice","choices":["x","y"],"binding":"op.p"}})"));
    std::mt19937_64 rng(1);
    std::set<std::int64_t> ints;
    for (int i = 0; i < 200; ++i) ints.insert(space.find("n")->draw(rng).get<std::int64_t>());
    CHECK(ints == std::set<std::int64_t>{2, 3, 4});
    CHECK(space.find("c")->binding == "op.p");
    CHECK(space.find("n")->binding == "n");
    CHECK(space.find("c")->numeric("y") == 1.0);
    CHECK_THROWS(SearchSpace::from_json(Json::parse(R"({"a":{"type":"float","low":2,"high":1}})")));
  }

  TEST_CASE("rank correlation") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 1000}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {1, 1, 1}) == 0.0);
    CHECK(pearson({1}, {2}) == 0.0);
    CHECK(spearman({1, 1, 2}, {3, 3, 1}) == doctest::Approx(-1.0));
  }
}
