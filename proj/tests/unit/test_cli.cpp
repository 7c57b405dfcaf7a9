#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "forge/pipeline.hpp"
#include "support.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

// Runs the built binary so exit codes and streams are the real ones.
Outcome forge_cli(const std::vector<std::string>& args, const testing::TempDir& dir) {
  const char* bin = std::getenv("FORGE_BIN");
  REQUIRE_MESSAGE(bin, "FORGE_BIN is not set");
  std::string cmd = quote(bin);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote((dir / "stdout").string()) + " 2>" + quote((dir / "stderr").string());
  int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = read_file(dir / "stdout");
  o.err = read_file(dir / "stderr");
  return o;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string recipe(const testing::TempDir& dir) {
  return "dataset_path: " + (dir / "in.jsonl").string() + "\nexport_path: " + (dir / "out" / "out.jsonl").string() +
         "\nprocess:\n  - clean_links\n  - word_count_filter: {min: 5}\n  - exact_hash\n";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("process writes export and manifest") {
    testing::TempDir dir("forge-cli");
    write_jsonl(testing::synthetic_corpus(100, 1), dir / "in.jsonl");
    write(dir / "r.yaml", recipe(dir));
    auto o = forge_cli({"process", "--config", (dir / "r.yaml").string()}, dir);
    CHECK(o.code == 0);
    CHECK(fs::exists(dir / "out" / "out.jsonl"));
    CHECK(fs::exists(dir / "out" / "out.jsonl.manifest.json"));
  }

  TEST_CASE("dry run plans without writing") {
    testing::TempDir dir("forge-cli");
    write_jsonl(testing::synthetic_corpus(50, 1), dir / "in.jsonl");
    write(dir / "r.yaml", recipe(dir));
    auto o = forge_cli({"process", "--config", (dir / "r.yaml").string(), "--dry-run"}, dir);
    CHECK(o.code == 0);
    CHECK(o.out.find("stage 0") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));
  }

  TEST_CASE("malformed recipe exits 2 with a position") {
    testing::TempDir dir("forge-cli");
    write(dir / "bad.yaml", "dataset_path: x\nprocess:\n  - clean_links\n   - oops: [\n");
    auto o = forge_cli({"process", "--config", (dir / "bad.yaml").string()}, dir);
    CHECK(o.code == 2);
    CHECK(o.err.find("line") != std::string::npos);
    write(dir / "unknown.yaml", "dataset_path: x\nprocess:\n  - not_an_op\n");
    CHECK(forge_cli({"process", "--config", (dir / "unknown.yaml").string()}, dir).code == 2);
    CHECK(forge_cli({"no-such-command"}, dir).code == 2);
  }

  TEST_CASE("missing input is a runtime error") {
    testing::TempDir dir("forge-cli");
    write(dir / "r.yaml", recipe(dir));
    CHECK(forge_cli({"process", "--config", (dir / "r.yaml").string()}, dir).code == 3);
  }

  TEST_CASE("ops list") {
    testing::TempDir dir("forge-cli");
    auto o = forge_cli({"ops", "list", "--json"}, dir);
    REQUIRE(o.code == 0);
    Json ops = Json::parse(o.out);
    CHECK(ops.size() >= 18);
    // The listing is enough to write a valid recipe.
    std::string y = "dataset_path: x\nprocess:\n";
    for (const auto& d : ops) {
      if (d["category"] == "Formatter") continue;
      y += "  - " + d["name"].get<std::string>() + ": " + d["params"].dump() + "\n";
    }
    CHECK_NOTHROW(pipeline::parse_recipe(y));
    auto code = forge_cli({"ops", "list", "--tag", "code"}, dir);
    CHECK(code.code == 0);
    CHECK(code.out.find("remove_code_comments") != std::string::npos);
    CHECK(code.out.find("word_count_filter") == std::string::npos);
  }

  TEST_CASE("every subcommand takes --seed, --workers and --config") {
    testing::TempDir dir("forge-cli");
    for (std::vector<std::string> cmd : std::vector<std::vector<std::string>>{
             {"process"}, {"analyze"}, {"dedup"}, {"sample"}, {"quality", "train"}, {"quality", "score"}, {"hpo"},
             {"plan"}, {"ops", "list"}}) {
      cmd.insert(cmd.end(), {"--help"});
      auto o = forge_cli(cmd, dir);
      CAPTURE(cmd[0]);
      CHECK(o.code == 0);
      CHECK(o.out.find("--seed") != std::string::npos);
      CHECK(o.out.find("--workers") != std::string::npos);
      CHECK(o.out.find("--config") != std::string::npos);
    }
  }

  TEST_CASE("analyze, dedup and sample end to end") {
    testing::TempDir dir("forge-cli");
    write_jsonl(testing::synthetic_corpus(200, 2), dir / "in.jsonl");
    auto in = (dir / "in.jsonl").string();
    auto a = forge_cli({"analyze", "--input", in, "--out", (dir / "rep.json").string(), "--html",
                        (dir / "rep.html").string()},
                       dir);
    CHECK(a.code == 0);
    CHECK(Json::parse(read_file(dir / "rep.json")).contains("dims"));
    auto d = forge_cli({"dedup", "--input", in, "--output", (dir / "dd.jsonl").string(), "--method", "exact"}, dir);
    CHECK(d.code == 0);
    CHECK(read_jsonl(dir / "dd.jsonl").size() < 200);
    write(dir / "s.yaml", "dataset_path: " + in + "\nexport_path: " + (dir / "s.jsonl").string() +
                              "\nstrata:\n  dimension: meta.lang\n  default_quota: 5\n");
    auto s = forge_cli({"sample", "--config", (dir / "s.yaml").string()}, dir);
    CHECK(s.code == 0);
    CHECK(fs::exists(dir / "s.jsonl"));
  }

  TEST_CASE("plan prints the space formula") {
    testing::TempDir dir("forge-cli");
    auto o = forge_cli({"plan", "--input-size", "1GB", "-M", "5", "-F", "8", "-D", "1", "--json"}, dir);
    REQUIRE(o.code == 0);
    CHECK(Json::parse(o.out)["cache_bytes"] == 16'000'000'000ULL);
  }
}
