#include <doctest.h>

#include <cmath>
#include <random>

#include "forge/error.hpp"
#include "forge/insight.hpp"
#include "forge/pipeline.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::insight;

namespace {

Dataset run_traced(const std::string& recipe_yaml, const Dataset& input, Tracer& tracer, std::size_t workers = 1) {
  auto recipe = pipeline::parse_recipe(recipe_yaml);
  auto plan = pipeline::build_plan(recipe);
  pipeline::ExecOptions opts;
  opts.workers = workers;
  return pipeline::execute(plan, input, opts, nullptr, &tracer);
}

}  // namespace

TEST_SUITE("insight") {
  TEST_CASE("summary of {1, 2, 3}") {
    auto d = summarize("x", {3, 1, 2});
    CHECK(d.count == 3);
    CHECK(*d.mean == doctest::Approx(2.0));
    CHECK(*d.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
    CHECK(*d.min == 1);
    CHECK(*d.max == 3);
    CHECK(*d.p50 == 2);
    CHECK(*d.p5 == 1);
    CHECK(*d.p95 == 3);
    std::uint64_t sum = 0;
    for (auto c : d.histogram.counts) sum += c;
    CHECK(sum == 3);
    CHECK(d.histogram.counts.size() == kHistogramBins);
  }

  TEST_CASE("empty input has no aggregates") {
    auto d = summarize("x", {});
    CHECK(d.count == 0);
    CHECK_FALSE(d.mean);
    CHECK_FALSE(d.p50);
    auto r = analyze(Dataset());
    CHECK(r.samples == 0);
    CHECK(r.dims.size() == dimensions().size());
  }

  TEST_CASE("uniform values spread over every bin") {
    std::vector<double> v;
    for (int i = 0; i < 50000; ++i) v.push_back(i / 50000.0);
    auto d = summarize("u", v);
    CHECK(std::abs(*d.entropy - std::log2(50.0)) <= 0.1);
    CHECK(*d.lower_fence < *d.p25);
    CHECK(*d.upper_fence > *d.p75);
  }

  TEST_CASE("quantiles match the sorting oracle") {
    std::mt19937_64 rng(4);
    std::lognormal_distribution<double> dist(2.0, 1.0);
    for (std::size_t n : {1u, 2u, 7u, 100u, 1001u}) {
      std::vector<double> v;
      for (std::size_t i = 0; i < n; ++i) v.push_back(std::floor(dist(rng)));
      auto d = summarize("q", v);
      CAPTURE(n);
      CHECK(*d.p5 == testing::oracle_quantile(v, 0.05));
      CHECK(*d.p25 == testing::oracle_quantile(v, 0.25));
      CHECK(*d.p50 == testing::oracle_quantile(v, 0.5));
      CHECK(*d.p75 == testing::oracle_quantile(v, 0.75));
      CHECK(*d.p95 == testing::oracle_quantile(v, 0.95));
    }
  }

  TEST_CASE("analyze computes every dimension and is idempotent") {
    Dataset ds = testing::synthetic_corpus(300, 6);
    Dataset with;
    auto r1 = analyze(ds, {}, &with);
    CHECK(r1.samples == ds.size());
    CHECK(r1.dims.size() == 13);
    for (const auto& d : r1.dims) CHECK(d.count == ds.size());
    CHECK(with.size() == ds.size());
    CHECK(to_json(analyze(with)) == to_json(r1));
    CHECK(to_json(report_from_json(to_json(r1))) == to_json(r1));
    AnalyzeOptions bad;
    bad.dims = {"not_a_dimension"};
    CHECK_THROWS_AS(analyze(ds, bad), UnknownDimension);
  }

  TEST_CASE("diff report shows deltas and funnel") {
    Dataset ds = testing::synthetic_corpus(200, 6);
    AnalyzeOptions o;
    o.dims = {"word_count"};
    auto before = analyze(ds, o);
    Dataset half(std::vector<Sample>(ds.begin(), ds.begin() + 100));
    auto after = analyze(half, o);
    Json d = diff_report(before, after, {{"f", 200, 100}});
    CHECK(d.dump().find("word_count") != std::string::npos);
    CHECK(render_html(after, &d).find("<svg") != std::string::npos);
  }

  TEST_CASE("tracer keeps exact counts and a bounded exemplar set") {
    std::vector<Sample> v;
    for (std::uint64_t i = 0; i < 30; ++i) v.push_back(Sample{i, i < 10 ? "short" : "long enough text here", {}, {}});
    Tracer tracer(5);
    Dataset out = run_traced("dataset_path: d\nprocess:\n  - text_length_filter: {min: 6}\n", Dataset(v), tracer);
    CHECK(out.size() == 20);
    CHECK(tracer.counters().at("text_length_filter").discarded == 10);
    auto recs = tracer.records("text_length_filter");
    CHECK(recs.size() == 5);
    for (const auto& r : recs) CHECK(r.stats.contains("char_count"));
  }

  TEST_CASE("unchanged mapper records no edits; duplicates record a pair") {
    Tracer tracer;
    Dataset ds = parse_jsonl("{\"text\":\"x\"}\n{\"text\":\"x\"}\n");
    run_traced("dataset_path: d\nprocess:\n  - clean_links\n  - exact_hash\n", ds, tracer);
    CHECK(tracer.records("clean_links").empty());
    auto pairs = tracer.records("exact_hash");
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].kind == TraceKind::DuplicatePair);
    CHECK(pairs[0].kept_id == 0);
    CHECK(pairs[0].sample_id == 1);
  }

  TEST_CASE("funnel conserves samples and exemplars ignore sharding") {
    Dataset ds = testing::synthetic_corpus(500, 13);
    std::string y =
        "dataset_path: d\nprocess:\n  - clean_links\n  - word_count_filter: {min: 8}\n"
        "  - special_char_ratio_filter\n  - minhash_lsh\n";
    Tracer t1(10), t4(10);
    Dataset out = run_traced(y, ds, t1, 1);
    run_traced(y, ds, t4, 4);
    std::uint64_t removed = 0;
    for (std::size_t i = 0; i < t1.funnel().size(); ++i) {
      const auto& st = t1.funnel()[i];
      CHECK(st.in - st.out == t1.stage_removals(i));
      removed += st.in - st.out;
    }
    CHECK(ds.size() - out.size() == removed);
    for (const char* op : {"clean_links", "word_count_filter", "minhash_lsh"}) {
      auto a = t1.records(op), b = t4.records(op);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_json() == b[i].to_json());
    }
  }
}
