#include <doctest.h>

#include <map>
#include <set>

#include "forge/error.hpp"
#include "forge/sampler.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::sampler;

namespace {

Dataset tagged(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Sample s{i, rows[i].second, Json::object(), {}};
    if (!rows[i].first.empty()) s.meta["kind"] = rows[i].first;
    out.push_back(std::move(s));
  }
  return Dataset(std::move(out));
}

StrataSpec by_kind(std::map<std::string, Quota> quotas) {
  StrataSpec spec;
  spec.dimension = "meta.kind";
  spec.binning = Binning::Categorical;
  spec.quotas = std::move(quotas);
  return spec;
}

Dataset numbered(std::size_t n, const std::string& prefix) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Sample{i, prefix + std::to_string(i), Json::object(), {}});
  return Dataset(std::move(out));
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("categorical quotas") {
    Dataset ds = tagged({{"short", "a"}, {"long", "b b b"}, {"short", "c"}, {"long", "d d d"}, {"short", "e"},
                         {"long", "f f f"}, {"", "g"}});
    auto r = stratified_sample(ds, by_kind({{"short", {Quota::Kind::Count, 2}}, {"long", {Quota::Kind::Count, 2}}}));
    CHECK(r.dataset.size() == 4);
    std::map<std::string, int> counts;
    for (const auto& s : r.dataset) counts[s.meta["kind"].get<std::string>()]++;
    CHECK(counts["short"] == 2);
    CHECK(counts["long"] == 2);
    // Output keeps dataset order.
    for (std::size_t i = 1; i < r.dataset.size(); ++i) CHECK(r.dataset[i - 1].id < r.dataset[i].id);
    bool saw_missing = false;
    for (const auto& st : r.strata) saw_missing |= st.label == "missing" && st.size == 1 && st.taken == 0;
    CHECK(saw_missing);
  }

  TEST_CASE("quota above stratum size reports a shortfall") {
    Dataset ds = tagged({{"a", "1"}, {"a", "2"}, {"a", "3"}});
    auto r = stratified_sample(ds, by_kind({{"a", {Quota::Kind::Count, 5}}}));
    REQUIRE(r.strata.size() == 1);
    CHECK(r.strata[0].taken == 3);
    CHECK(r.strata[0].shortfall() == 2);
    CHECK(r.report_json().dump().find("shortfall") != std::string::npos);
  }

  TEST_CASE("same seed, same sample; different seed, usually different") {
    Dataset ds = testing::synthetic_corpus(500, 3);
    StrataSpec spec;
    spec.dimension = "word_count";
    spec.binning = Binning::Quantile;
    spec.default_quota = Quota{Quota::Kind::Count, 20};
    auto a = stratified_sample(ds, spec), b = stratified_sample(ds, spec);
    CHECK(a.dataset == b.dataset);
    spec.seed = 7;
    CHECK_FALSE(stratified_sample(ds, spec).dataset == a.dataset);
  }

  TEST_CASE("proportion quotas are within one sample") {
    Dataset ds = testing::synthetic_corpus(1000, 4);
    StrataSpec spec;
    spec.dimension = "meta.source";
    spec.binning = Binning::Categorical;
    spec.default_quota = Quota{Quota::Kind::Proportion, 0.05};
    auto r = stratified_sample(ds, spec);
    for (const auto& st : r.strata) {
      CAPTURE(st.label);
      CHECK(std::abs(double(st.quota) - 0.05 * ds.size()) <= 1.0);
    }
  }

  TEST_CASE("samples are copied byte for byte") {
    Dataset ds = testing::synthetic_corpus(300, 5);
    StrataSpec spec;
    spec.dimension = "meta.lang";
    spec.default_quota = Quota{Quota::Kind::Count, 30};
    auto r = stratified_sample(ds, spec);
    std::map<std::uint64_t, const Sample*> by_id;
    for (const auto& s : ds) by_id[s.id] = &s;
    for (const auto& s : r.dataset) {
      REQUIRE(by_id.contains(s.id));
      CHECK(sample_to_jsonl(s) == sample_to_jsonl(*by_id[s.id]));
    }
  }

  TEST_CASE("unknown dimension") {
    StrataSpec spec;
    spec.dimension = "not_a_stat";
    spec.binning = Binning::Quantile;
    CHECK_THROWS_AS(stratified_sample(testing::synthetic_corpus(10, 1), spec), UnknownDimension);
  }

  TEST_CASE("equal width and labels") {
    std::vector<Sample> v;
    for (std::uint64_t i = 0; i < 10; ++i) {
      Sample s{i, "x", Json::object(), {}};
      s.stats["v"] = static_cast<double>(i);
      v.push_back(s);
    }
    StrataSpec spec;
    spec.dimension = "stats.v";
    spec.binning = Binning::EqualWidth;
    spec.bins = 2;
    spec.labels = {"low", "high"};
    auto labels = assign_strata(Dataset(v), spec);
    CHECK(labels.front() == "low");
    CHECK(labels.back() == "high");
    CHECK(std::count(labels.begin(), labels.end(), "low") == 5);
  }

  TEST_CASE("leading verbs") {
    CHECK(leading_verb("Write a poem about cats") == "write");
    CHECK(leading_verb("Explain, briefly, why") == "explain");
    CHECK(leading_verb("The cat sat") == "other");
    CHECK(leading_verb("") == "other");
  }

  TEST_CASE("spec from json") {
    auto spec = StrataSpec::from_json(Json::parse(
        R"({"dimension":"meta.kind","binning":"categorical","quotas":{"a":3,"b":0.25,"c":{"proportion":1}}})"));
    CHECK(spec.quotas["a"].kind == Quota::Kind::Count);
    CHECK(spec.quotas["b"].kind == Quota::Kind::Proportion);
    CHECK(spec.quotas["c"].kind == Quota::Kind::Proportion);
    CHECK_THROWS(StrataSpec::from_json(Json::parse(R"({"dimension":"x","binning":"nope"})")));
  }

  TEST_CASE("mix by weight") {
    MixtureSpec spec;
    spec.sources = {numbered(200, "a"), numbered(200, "b")};
    spec.weights = {0.5, 0.5};
    spec.target = 100;
    auto r = mix(spec, 1);
    CHECK(r.counts == std::vector<std::size_t>{50, 50});
    CHECK(r.dataset.size() == 100);
    std::set<std::uint64_t> ids;
    for (const auto& s : r.dataset) ids.insert(s.id);
    CHECK(ids.size() == 100);

    spec.weights = {1, 0};
    r = mix(spec, 1);
    CHECK(r.counts == std::vector<std::size_t>{100, 0});
    for (const auto& s : r.dataset) CHECK(s.meta["source"] == "source0");

    spec.sources = {numbered(2000, "a"), numbered(2000, "b")};
    spec.weights = {0.7, 0.3};
    spec.target = 1000;
    spec.names = {"web", "books"};
    r = mix(spec, 3);
    CHECK(r.counts == std::vector<std::size_t>{700, 300});
    CHECK(r.dataset[0].meta["source"] == "web");
    CHECK(mix(spec, 3).dataset == r.dataset);
  }

  TEST_CASE("oversubscribed sources draw with replacement") {
    MixtureSpec spec;
    spec.sources = {numbered(10, "a")};
    spec.weights = {1};
    spec.target = 25;
    auto r = mix(spec, 1);
    CHECK(r.counts[0] == 25);
    CHECK(r.with_replacement[0]);
    spec.weights = {0};
    CHECK_THROWS_AS(mix(spec, 1), ParamError);
    spec.weights = {1.5};
    CHECK_THROWS_AS(mix(spec, 1), ParamError);
  }

  TEST_CASE("proportional subsample keeps every stratum") {
    Dataset ds = testing::synthetic_corpus(800, 2);
    Dataset sub = proportional_subsample(ds, 0.25, 9);
    CHECK(std::abs(double(sub.size()) - 200.0) <= 4.0);
    CHECK(proportional_subsample(ds, 1.0, 9).size() == ds.size());
  }
}
