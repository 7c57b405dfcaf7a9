#include <doctest.h>

#include <random>
#include <regex>

#include "forge/error.hpp"
#include "forge/ops.hpp"
#include "support.hpp"

using namespace forge;

namespace {

const OpRegistry& registry() {
  static const OpRegistry r = OpRegistry::builtin();
  return r;
}

std::string apply_mapper(std::string_view name, std::string text, const Json& params = Json::object()) {
  auto op = registry().create(name, params);
  ContextStore ctx;
  Sample s;
  s.text = std::move(text);
  return dynamic_cast<const Mapper&>(*op).process(std::move(s), ctx).text;
}

double stat_of(std::string_view name, std::string text, const Json& params = Json::object()) {
  auto op = registry().create(name, params);
  const auto& f = dynamic_cast<const Filter&>(*op);
  ContextStore ctx;
  Sample s;
  s.text = std::move(text);
  s = f.compute_stats(std::move(s), ctx);
  return s.stats.at(f.descriptor().stat_keys.front());
}

const std::regex& link_regex() {
  static const std::regex re(R"((https?|ftp)://\S+|www\.\S+)", std::regex::ECMAScript | std::regex::icase);
  return re;
}

const std::regex& email_regex() {
  static const std::regex re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,})");
  return re;
}

std::vector<std::string> filter_names() {
  std::vector<std::string> out;
  for (const auto* e : registry().list()) {
    if (e->descriptor.category == Category::Filter) out.push_back(e->descriptor.name);
  }
  return out;
}

// Params that make every filter reject a share of the synthetic corpus.
Json filter_params(const std::string& name) {
  if (name == "meta_field_filter") return {{"key", "meta.lang"}, {"value", "en"}};
  if (name == "word_count_filter") return {{"min", 20}};
  if (name == "stopwords_filter") return {{"min", 0.2}};
  return Json::object();
}

}  // namespace

TEST_SUITE("ops") {
  TEST_CASE("whitespace normalizer example") {
    CHECK(apply_mapper("whitespace_normalizer", "a\t b\u00A0c") == "a b c");
    CHECK(apply_mapper("whitespace_normalizer", "  x \n  y  ") == "x\ny");
  }

  TEST_CASE("clean_links example") {
    CHECK(apply_mapper("clean_links", "see http://x.y now") == "see  now");
  }

  TEST_CASE("clean_links and clean_email agree with std::regex on a fixed table") {
    const std::vector<std::string> cases = {
        "",
        "plain text",
        "see http://x.y now",
        "HTTPS://EXAMPLE.com/path?q=1 tail",
        "ftp://files.org/a.tar.gz",
        "www.site.com and more",
        "http:// nothing",
        "www. spaced",
        "prefixhttp://glued.com",
        "two http://a.b http://c.d links",
        "trailing http://a",
        "mail me: a.b@example.com thanks",
        "x@y.z",
        "x@y.zz",
        "first@one.org,second@two.net",
        "weird@@double.com",
        "a@b.c.de",
        "user+tag@sub.domain.co.uk.",
        "no at sign here.",
        "@lead.com and trail@",
    };
    for (const auto& c : cases) {
      CAPTURE(c);
      CHECK(apply_mapper("clean_links", c) == std::regex_replace(c, link_regex(), ""));
      CHECK(apply_mapper("clean_email", c) == std::regex_replace(c, email_regex(), ""));
    }
  }

  TEST_CASE("clean_links and clean_email match std::regex on random strings") {
    std::mt19937_64 rng(11);
    const std::vector<std::string> atoms = {"http://", "https://", "ftp://", "www.", "HTTP://", "@", ".", "a", "b",
                                            "Z", "9", " ", "\n", "-", "_", "%", "+", ".com", "x.y", ":", "/"};
    std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1), len(0, 25);
    for (int i = 0; i < 3000; ++i) {
      std::string s;
      for (std::size_t n = len(rng); n > 0; --n) s += atoms[pick(rng)];
      CAPTURE(s);
      REQUIRE(apply_mapper("clean_links", s) == std::regex_replace(s, link_regex(), ""));
      REQUIRE(apply_mapper("clean_email", s) == std::regex_replace(s, email_regex(), ""));
    }
  }

  TEST_CASE("stat examples") {
    CHECK(stat_of("word_count_filter", "a b c") == 3);
    CHECK(stat_of("alnum_ratio_filter", "ab!!") == doctest::Approx(0.5));
    CHECK(stat_of("flagged_words_filter", "bad bad good", {{"words", {"bad"}}}) == doctest::Approx(2.0 / 3.0));
    CHECK(stat_of("text_length_filter", "数据ab") == 4);
    CHECK(stat_of("line_count_filter", "a\nb\n") == 2);
    CHECK(stat_of("word_count_filter", "") == 0);
  }

  TEST_CASE("keep applies inclusive ranges") {
    auto op = registry().create("word_count_filter", {{"min", 3}, {"max", 4}});
    const auto& f = dynamic_cast<const Filter&>(*op);
    ContextStore ctx;
    for (auto [text, expect] : std::vector<std::pair<std::string, bool>>{
             {"a b", false}, {"a b c", true}, {"a b c d", true}, {"a b c d e", false}}) {
      Sample s;
      s.text = text;
      ctx.clear();
      CHECK(f.evaluate(s, ctx).keep == expect);
    }
    Sample bare;
    CHECK_THROWS_AS(f.keep(bare), MissingStat);
  }

  TEST_CASE("meta_field filter drops samples without the key") {
    auto op = registry().create("meta_field_filter", {{"key", "meta.lang"}, {"value", "en"}});
    const auto& f = dynamic_cast<const Filter&>(*op);
    Sample s;
    CHECK_FALSE(f.keep(s));
    s.meta["lang"] = "en";
    CHECK(f.keep(s));
    s.meta["lang"] = "de";
    CHECK_FALSE(f.keep(s));
  }

  TEST_CASE("registry rejects duplicates and unknown names") {
    OpRegistry r = OpRegistry::builtin();
    OpDescriptor d = r.at("clean_links").descriptor;
    CHECK_THROWS_AS(r.register_op(d, r.at("clean_links").factory), DuplicateName);
    CHECK_THROWS_AS(r.at("nope"), UnknownOp);
    CHECK_THROWS_AS(r.resolve_params("word_count_filter", {{"min", "three"}}), TypeMismatch);
    CHECK_THROWS_AS(r.resolve_params("word_count_filter", {{"minimum", 3}}), ParseError);
    CHECK(r.resolve_params("word_count_filter", {{"min", 3}})["min"] == 3);
  }

  TEST_CASE("a second filter may not redefine an existing stat key") {
    OpRegistry r = OpRegistry::builtin();
    OpDescriptor d = r.at("word_count_filter").descriptor;
    d.name = "my_word_count";
    d.formula = "something else";
    CHECK_THROWS_AS(r.register_op(d, r.at("word_count_filter").factory), ConflictingStatKey);
  }

  TEST_CASE("catalog covers at least eighteen ops with code tags") {
    CHECK(registry().list().size() >= 18);
    CHECK(!registry().list("code").empty());
  }

  TEST_CASE("context reuse never changes stats") {
    Dataset ds = testing::synthetic_corpus(400, 3);
    for (const auto& name : filter_names()) {
      CAPTURE(name);
      auto op = registry().create(name, filter_params(name));
      const auto& f = dynamic_cast<const Filter&>(*op);
      for (const auto& s : ds) {
        ContextStore fresh, warm;
        warm.words(f.field(), s.text);
        warm.lines(f.field(), s.text);
        warm.sentences(f.field(), s.text);
        warm.char_classes(f.field(), s.text);
        REQUIRE(f.compute_stats(s, fresh).stats == f.compute_stats(s, warm).stats);
      }
    }
  }

  TEST_CASE("filters commute") {
    Dataset ds = testing::synthetic_corpus(300, 4);
    auto names = filter_names();
    auto run = [&](const Filter& a, const Filter& b) {
      std::vector<std::uint64_t> kept;
      for (const auto& s : ds) {
        ContextStore ctx;
        if (a.evaluate(s, ctx).keep && b.evaluate(s, ctx).keep) kept.push_back(s.id);
      }
      return kept;
    };
    for (std::size_t i = 0; i < names.size(); ++i) {
      for (std::size_t j = i + 1; j < names.size(); ++j) {
        auto a = registry().create(names[i], filter_params(names[i]));
        auto b = registry().create(names[j], filter_params(names[j]));
        CAPTURE(names[i]);
        CAPTURE(names[j]);
        CHECK(run(dynamic_cast<const Filter&>(*a), dynamic_cast<const Filter&>(*b)) ==
              run(dynamic_cast<const Filter&>(*b), dynamic_cast<const Filter&>(*a)));
      }
    }
  }

  TEST_CASE("mappers keep ids and meta") {
    Dataset ds = testing::synthetic_corpus(300, 5);
    for (const auto* e : registry().list()) {
      if (e->descriptor.category != Category::Mapper) continue;
      auto op = registry().create(e->descriptor.name);
      const auto& m = dynamic_cast<const Mapper&>(*op);
      for (const auto& s : ds) {
        ContextStore ctx;
        Sample out = m.process(s, ctx);
        REQUIRE(out.id == s.id);
        REQUIRE(out.meta == s.meta);
        REQUIRE(is_valid_utf8(out.text));
      }
    }
  }

  TEST_CASE("mapper on a meta field leaves text alone") {
    Sample s;
    s.text = "keep http://a.b";
    s.meta["q"] = "drop http://a.b";
    auto op = registry().create("clean_links", {{"field", "meta.q"}});
    ContextStore ctx;
    Sample out = dynamic_cast<const Mapper&>(*op).process(s, ctx);
    CHECK(out.text == s.text);
    CHECK(out.meta["q"] == "drop ");
  }

  TEST_CASE("remove_code_comments keeps strings") {
    CHECK(apply_mapper("remove_code_comments", "int a; // x\nchar* s = \"//no\"; /* y */") ==
          "int a;\nchar* s = \"//no\"; ");
    CHECK(apply_mapper("remove_code_comments", "x = 1  # note", {{"style", "hash"}}) == "x = 1");
  }

  TEST_CASE("fix_unicode repairs mojibake") {
    CHECK(apply_mapper("fix_unicode", "caf\xc3\x83\xc2\xa9") == "caf\xc3\xa9");
  }
}
