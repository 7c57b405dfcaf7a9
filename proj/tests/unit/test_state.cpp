#include <doctest.h>

#include <fstream>

#include "forge/error.hpp"
#include "forge/state.hpp"
#include "support.hpp"

using namespace forge;
using namespace forge::state;

namespace {

constexpr std::uint64_t GB = 1'000'000'000;

Fingerprint fp_of(std::string_view s) { return Fingerprint{hash64(s, 1), hash64(s, 2)}; }

}  // namespace

TEST_SUITE("state") {
  TEST_CASE("op fingerprint ignores key order and integral formatting") {
    auto reg = OpRegistry::builtin();
    Fingerprint in = fp_of("input");
    auto a = op_fingerprint(in, "word_count_filter", Json::parse(R"({"min":3,"max":10.0})"), 1, {});
    auto b = op_fingerprint(in, "word_count_filter", Json::parse(R"({"max":10,"min":3.0})"), 1, {});
    CHECK(a == b);
    CHECK(a != op_fingerprint(in, "word_count_filter", Json::parse(R"({"min":4,"max":10})"), 1, {}));
    CHECK(a != op_fingerprint(in, "word_count_filter", Json::parse(R"({"min":3,"max":10})"), 2, {}));
    CHECK(a != op_fingerprint(fp_of("other"), "word_count_filter", Json::parse(R"({"min":3,"max":10})"), 1, {}));
    CHECK(a != op_fingerprint(in, "word_count_filter", Json::parse(R"({"min":3,"max":10})"), 1,
                              {{"words_file", fp_of("list v2")}}));
    CHECK(canonical_params(Json::parse(R"({"b":{"y":1,"x":2.0},"a":[1.0,2.5]})")) ==
          R"({"a":[1,2.5],"b":{"x":2,"y":1}})");
  }

  TEST_CASE("changing a word list file changes the op fingerprint") {
    testing::TempDir dir("forge-state");
    std::ofstream(dir / "w.txt") << "bad\n";
    auto reg = OpRegistry::builtin();
    Json params = {{"words_file", (dir / "w.txt").string()}};
    Fingerprint in = fp_of("x");
    auto before = op_fingerprint(in, *reg.create("flagged_words_filter", params));
    std::ofstream(dir / "w.txt") << "bad\nworse\n";
    auto after = op_fingerprint(in, *reg.create("flagged_words_filter", params));
    CHECK(before != after);
  }

  TEST_CASE("container round trip for every codec") {
    Dataset ds = testing::synthetic_corpus(500, 8);
    for (auto& s : ds.mutable_samples()) s.stats["w"] = static_cast<double>(s.text.size()) / 7.0;
    ds.declare("stats.w");
    for (Codec c : {Codec::None, Codec::Zstd, Codec::Lz4}) {
      std::string bytes = encode_container(ds, ds.fingerprint(), c);
      Container back = decode_container(bytes);
      CHECK(back.dataset == ds);
      CHECK(back.fingerprint == ds.fingerprint());
      CHECK(container_fingerprint(bytes) == ds.fingerprint());
      CHECK(to_jsonl(back.dataset) == to_jsonl(ds));
    }
  }

  TEST_CASE("corrupt containers are rejected") {
    Dataset ds = testing::synthetic_corpus(50, 8);
    std::string bytes = encode_container(ds, ds.fingerprint(), Codec::Zstd);
    CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() / 2)), CorruptCache);
    std::string flipped = bytes;
    flipped[flipped.size() - 3] ^= 0x5a;
    CHECK_THROWS_AS(decode_container(flipped), CorruptCache);
    CHECK_THROWS_AS(decompress_blob(std::string("\x09\0\0\0\0\0\0\0\0", 9)), UnknownCodecTag);
  }

  TEST_CASE("compression of repetitive text") {
    std::string text;
    for (int i = 0; i < 20000; ++i) text += "the same line again and again\n";
    for (Codec c : {Codec::Zstd, Codec::Lz4}) {
      std::string blob = compress_blob(text, c);
      CHECK(blob.size() < text.size() / 10);
      CHECK(decompress_blob(blob) == text);
    }
    CHECK(decompress_blob(compress_blob("", Codec::Zstd)).empty());
    CHECK(codec_from_string("lz4") == Codec::Lz4);
    CHECK_THROWS_AS(codec_from_string("gzip"), ParamError);
  }

  TEST_CASE("cache store hit, miss and truncated entry") {
    testing::TempDir dir("forge-cache");
    Dataset ds = testing::synthetic_corpus(100, 1);
    CacheStore cache(dir.path(), fp_of("root"), Codec::Zstd, 2);
    Fingerprint f1 = fp_of("s1");
    CHECK_FALSE(cache.lookup(0, f1));
    cache.store(0, f1, ds);
    auto hit = cache.lookup(0, f1);
    REQUIRE(hit);
    CHECK(*hit == ds);
    CHECK_FALSE(cache.lookup(0, fp_of("s1b")));
    // Truncate the entry: a miss, and the file is dropped.
    auto path = cache.entry_path(0, f1);
    std::string bytes = read_file(path);
    write_file_atomic(path, std::string_view(bytes).substr(0, bytes.size() - 10));
    CHECK_FALSE(cache.lookup(0, f1));
    CHECK_FALSE(fs::exists(path));
  }

  TEST_CASE("cache eviction keeps the last k stages") {
    testing::TempDir dir("forge-cache");
    Dataset ds = testing::synthetic_corpus(20, 1);
    CacheStore cache(dir.path(), fp_of("root"), Codec::None, 2);
    for (std::size_t i = 0; i < 5; ++i) {
      cache.store(i, fp_of(std::to_string(i)), ds);
      cache.evict(i);
    }
    CHECK_FALSE(cache.contains(2, fp_of("2")));
    CHECK(cache.contains(3, fp_of("3")));
    CHECK(cache.contains(4, fp_of("4")));
  }

  TEST_CASE("checkpoint resume, mismatch restart and single retained checkpoint") {
    testing::TempDir dir("forge-ckpt");
    Dataset a = testing::synthetic_corpus(40, 1), b = testing::synthetic_corpus(30, 2);
    Fingerprint plan = fp_of("plan");
    CheckpointStore store(dir.path(), "run", Codec::Zstd);
    store.write(1, a, plan);
    store.write(2, b, plan);
    std::size_t ckpts = 0;
    for (const auto& f : store.files()) ckpts += f.extension() == ".djk";
    CHECK(ckpts == 1);
    auto st = store.resume(plan);
    REQUIRE(st);
    CHECK(st->stage == 2);
    CHECK(st->dataset == b);
    CHECK_FALSE(store.resume(fp_of("other plan")));
    CHECK_FALSE(store.resume(plan));
  }

  TEST_CASE("space plan examples") {
    SpacePlan p = plan_space(5, 8, 1, GB);
    CHECK(p.cache_bytes == 16 * GB);
    CHECK(p.checkpoint_peak_bytes == 3 * GB);
    CHECK(plan_space(2, 0, 0, GB).cache_bytes == 3 * GB);
    CHECK(plan_space(0, 0, 0, GB).cache_bytes == 1 * GB);
    CHECK(plan_space(0, 3, 0, 10).cache_bytes == 50);
  }

  TEST_CASE("auto policy degrades with free space") {
    StatePolicy pol;
    pol.cache = true;
    pol.checkpoint = CheckpointMode::Auto;
    SpacePlan p = plan_space(1, 1, 0, GB);  // cache 4 GB, checkpoint 3 GB
    auto full = resolve_policy(pol, p, 10 * GB);
    CHECK(full.cache);
    auto tight = resolve_policy(pol, p, 3 * GB + 1);
    CHECK_FALSE(tight.cache);
    CHECK(tight.checkpoint);
    CHECK_FALSE(tight.warnings.empty());
    auto none = resolve_policy(pol, p, GB);
    CHECK_FALSE(none.cache);
    CHECK_FALSE(none.checkpoint);
  }

  TEST_CASE("size strings") {
    CHECK(parse_size("12GB") == 12 * GB);
    CHECK(parse_size("100 MB") == 100'000'000);
    CHECK(parse_size("512KiB") == 512 * 1024);
    CHECK(parse_size("1024") == 1024);
    CHECK_THROWS(parse_size("lots"));
  }
}
