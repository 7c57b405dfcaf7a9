#include <doctest.h>

#include <fmt/format.h>

#include <random>

#include "forge/error.hpp"
#include "forge/pipeline.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::pipeline;

namespace {

std::vector<std::string> stage_names(const ExecutionPlan& plan, const Recipe& recipe) {
  std::vector<std::string> out;
  for (const auto& st : plan.stages) {
    std::string label;
    for (std::size_t i : st.ops) label += (label.empty() ? "" : "+") + recipe.ops[i].name;
    out.push_back(label);
  }
  return out;
}

std::vector<Sample> plain(const Dataset& ds) { return ds.samples(); }

Dataset run_plan(const Recipe& recipe, const Dataset& input, std::size_t workers = 1, bool fuse = true,
                 std::vector<StageReport>* reports = nullptr) {
  auto plan = build_plan(recipe, OpRegistry::builtin(), {fuse, fuse});
  ExecOptions opts;
  opts.workers = workers;
  opts.batch_size = 64;
  return execute(plan, input, opts, reports);
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("override precedence: override > file > default") {
    std::string y = "dataset_path: d.jsonl\nnp: 2\nprocess:\n  - word_count_filter: {min: 3}\n  - stopwords_filter\n";
    Recipe r = parse_recipe(y);
    CHECK(r.workers == 2);
    CHECK(r.ops[0].params["min"] == 3);
    CHECK(r.ops[1].params["min"] == 0.3);
    Recipe o = parse_recipe(y, {parse_override("np=4"), parse_override("word_count_filter.min=7"),
                                parse_override("process.1.min=0.1")});
    CHECK(o.workers == 4);
    CHECK(o.ops[0].params["min"] == 7);
    CHECK(o.ops[1].params["min"] == 0.1);
    CHECK_THROWS_AS(parse_override("novalue"), ParseError);
  }

  TEST_CASE("recipe errors") {
    CHECK_THROWS_AS(parse_recipe("dataset_path: d\nprocess:\n  - not_an_op\n"), UnknownOp);
    CHECK_THROWS_AS(parse_recipe("dataset_path: d\nprocess: []\n"), ParseError);
    CHECK_THROWS_AS(parse_recipe("dataset_path: d\nprocess:\n  - word_count_filter: {min: abc}\n"), TypeMismatch);
    CHECK_THROWS_AS(parse_recipe("dataset_path: d\nbogus_key: 1\nprocess:\n  - clean_links\n"), ParseError);
    try {
      parse_recipe("dataset_path: d\nprocess:\n  - clean_links\n   - bad: [\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() > 0);
      CHECK(e.column() > 0);
    }
  }

  TEST_CASE("recipe json round trip") {
    Recipe r = parse_recipe("dataset_path: d.jsonl\nprocess:\n  - clean_links\n  - word_count_filter: {min: 4}\n");
    Recipe back = parse_recipe(r.to_json().dump());
    CHECK(back.to_json() == r.to_json());
  }

  TEST_CASE("plan: cheap filter moves ahead of a fused words group") {
    Recipe r = parse_recipe(
        "dataset_path: d\nprocess:\n  - flagged_words_filter\n  - stopwords_filter\n  - text_length_filter\n");
    auto plan = build_plan(r);
    CHECK(stage_names(plan, r) ==
          std::vector<std::string>{"text_length_filter", "flagged_words_filter+stopwords_filter"});
    CHECK(plan.stages[1].fused());
    CHECK(plan.stages[1].contexts == std::set<ContextKey>{ContextKey::Words});
  }

  TEST_CASE("plan: mappers and dedups are barriers") {
    Recipe r = parse_recipe(
        "dataset_path: d\nprocess:\n  - word_count_filter\n  - clean_links\n  - stopwords_filter\n"
        "  - exact_hash\n  - word_repetition_filter\n");
    auto plan = build_plan(r);
    CHECK(stage_names(plan, r) == std::vector<std::string>{"word_count_filter", "clean_links", "stopwords_filter",
                                                           "exact_hash", "word_repetition_filter"});
  }

  TEST_CASE("plan: different fields do not fuse") {
    Recipe r = parse_recipe(
        "dataset_path: d\nprocess:\n  - word_count_filter: {field: meta.q}\n  - stopwords_filter\n");
    CHECK(build_plan(r).stages.size() == 2);
  }

  TEST_CASE("identity plan keeps recipe order") {
    Recipe r = parse_recipe("dataset_path: d\nprocess:\n  - stopwords_filter\n  - text_length_filter\n");
    CHECK(stage_names(identity_plan(r), r) == std::vector<std::string>{"stopwords_filter", "text_length_filter"});
    auto off = build_plan(r, OpRegistry::builtin(), {false, false});
    CHECK(off.stages.size() == 2);
  }

  TEST_CASE("planned execution equals the naive executor on random recipes") {
    std::mt19937_64 rng(2024);
    Dataset input = testing::synthetic_corpus(300, 9);
    for (int i = 0; i < 40; ++i) {
      std::string y = testing::random_recipe(rng);
      CAPTURE(y);
      Recipe r = parse_recipe(y);
      REQUIRE(plain(run_plan(r, input, 1 + static_cast<std::size_t>(i % 3))) ==
              plain(testing::naive_execute(r, input)));
    }
  }

  TEST_CASE("exact dedup keeps first of [x, x, y]") {
    Recipe r = parse_recipe("dataset_path: d\nprocess:\n  - exact_hash\n");
    Dataset ds = parse_jsonl("{\"text\":\"x\"}\n{\"text\":\"x\"}\n{\"text\":\"y\"}\n");
    Dataset out = run_plan(r, ds);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == 0);
    CHECK(out[1].text == "y");
  }

  TEST_CASE("worker count does not change output") {
    Recipe r = parse_recipe(
        "dataset_path: d\nprocess:\n  - clean_links\n  - word_count_filter: {min: 5}\n  - stopwords_filter: {min: 0.1}\n"
        "  - minhash_lsh\n");
    Dataset input = testing::synthetic_corpus(800, 12);
    CHECK(to_jsonl(run_plan(r, input, 1)) == to_jsonl(run_plan(r, input, 8)));
  }

  TEST_CASE("fusion derives words once per sample") {
    Recipe r = parse_recipe(
        "dataset_path: d\nprocess:\n  - word_count_filter: {min: 0}\n  - word_repetition_filter: {max: 1}\n"
        "  - stopwords_filter: {min: 0}\n");
    Dataset input = testing::synthetic_corpus(200, 2);
    std::vector<StageReport> fused, unfused;
    Dataset a = run_plan(r, input, 1, true, &fused);
    Dataset b = run_plan(r, input, 1, false, &unfused);
    CHECK(plain(a) == plain(b));
    REQUIRE(fused.size() == 1);
    CHECK(fused[0].derivations[ContextKey::Words] == input.size());
    std::uint64_t total = 0;
    for (const auto& s : unfused) total += s.derivations[ContextKey::Words];
    CHECK(total == 3 * input.size());
    // Context entries never outlive a sample.
    CHECK(fused[0].peak_context_entries <= 1);
  }

  TEST_CASE("full run writes export and manifest; cache rerun computes nothing") {
    testing::TempDir dir("forge-pipeline");
    write_jsonl(testing::synthetic_corpus(300, 21), dir / "in.jsonl");
    std::string y = fmt::format(
        "dataset_path: {}\nexport_path: {}\ncache: true\ncache_dir: {}\nprocess:\n  - clean_links\n"
        "  - word_count_filter: {{min: 5}}\n  - exact_hash\n",
        (dir / "in.jsonl").string(), (dir / "out.jsonl").string(), (dir / "cache").string());
    Recipe r = parse_recipe(y);
    RunResult first = run(r);
    CHECK(first.total_computations() > 0);
    CHECK(fs::exists(dir / "out.jsonl"));
    CHECK(fs::exists(manifest_path(r)));
    std::string exported = read_file(dir / "out.jsonl");
    RunResult second = run(r);
    CHECK(second.total_computations() == 0);
    CHECK(second.cache_hit_stages == r.ops.size());
    CHECK(read_file(dir / "out.jsonl") == exported);
    CHECK(second.output_fp == first.output_fp);
  }
}
