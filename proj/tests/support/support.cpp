#include "support.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <set>
#include <unistd.h>

#include "forge/random.hpp"
#include "forge/resources.hpp"

namespace forge::testing {

namespace {

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> kWords = {
      "the", "of", "and", "to", "in", "is", "that", "for", "it", "as", "was", "with", "be", "by", "on", "not", "he",
      "this", "are", "or", "his", "from", "at", "which", "but", "have", "an", "had", "they", "you", "were", "their",
      "one", "all", "we", "can", "her", "has", "there", "been", "if", "more", "when", "will", "would", "who", "so",
      "no", "data", "model", "system", "river", "mountain", "history", "science", "language", "market", "city",
      "village", "garden", "engine", "signal", "protein", "theory", "museum", "harbor", "festival", "climate",
      "network", "library", "journey", "harvest", "planet", "orbit", "circuit", "painting", "melody", "poem",
      "novel", "author", "teacher", "student", "school", "doctor", "patient", "farmer", "bridge", "tower", "castle",
      "forest", "desert", "island", "ocean", "storm", "winter", "summer", "morning", "evening", "quickly", "slowly",
      "carefully", "rarely", "often", "never", "always", "bright", "dark", "ancient", "modern", "large", "small",
      "green", "golden", "quiet", "loud", "simple", "complex", "early", "late", "build", "write", "measure",
      "explain", "describe", "travel", "discover", "collect", "repair", "observe", "design", "record", "improve",
      "study", "compare", "produce", "protect", "visit", "remember", "follow", "create", "change", "support",
      "report", "develop", "result", "method", "process", "structure", "energy", "water", "light", "sound",
      "number", "value", "table", "figure", "paper", "article", "chapter", "section", "example", "question",
      "answer", "problem", "solution", "evidence", "argument", "season", "festival", "kitchen", "window", "street"};
  return kWords;
}

std::string pick(std::mt19937_64& rng, const std::vector<std::string>& v) { return v[uniform_below(rng, v.size())]; }

double unit(std::mt19937_64& rng) { return uniform_unit(rng); }

std::string sentence(std::mt19937_64& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    std::string w = pick(rng, vocabulary());
    if (i == 0) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    if (!s.empty()) s += ' ';
    s += w;
    if (i + 1 < words && unit(rng) < 0.08) s += ',';
  }
  return s + (unit(rng) < 0.9 ? "." : "?");
}

std::string paragraph(std::mt19937_64& rng) {
  std::string p;
  std::size_t n = 1 + uniform_below(rng, 5);
  for (std::size_t i = 0; i < n; ++i) {
    if (!p.empty()) p += unit(rng) < 0.3 ? "\n" : " ";
    p += sentence(rng, 4 + uniform_below(rng, 16));
  }
  return p;
}

std::string document(std::mt19937_64& rng) {
  double kind = unit(rng);
  if (kind < 0.45) {
    std::string d;
    std::size_t paras = 1 + uniform_below(rng, 4);
    for (std::size_t i = 0; i < paras; ++i) {
      if (!d.empty()) d += "\n\n";
      d += paragraph(rng);
    }
    return d;
  }
  if (kind < 0.55) {
    std::string d = paragraph(rng);
    std::size_t at = uniform_below(rng, d.size() + 1);
    std::string noise = unit(rng) < 0.5 ? fmt::format(" see https://example{}.org/page?id={} ", uniform_below(rng, 99), uniform_below(rng, 999))
                                         : fmt::format(" mail user{}@mail{}.com today ", uniform_below(rng, 99), uniform_below(rng, 9));
    if (unit(rng) < 0.3) noise += " www.site.net/a ";
    d.insert(at, noise);
    return d;
  }
  if (kind < 0.62) {
    // Repetitive spam.
    std::string w = pick(rng, vocabulary()) + " " + pick(rng, vocabulary());
    std::string d;
    std::size_t n = 5 + uniform_below(rng, 40);
    for (std::size_t i = 0; i < n; ++i) d += w + (i + 1 < n ? " " : "");
    if (unit(rng) < 0.5) d += " " + pick(rng, reference::flagged_words()) + " " + pick(rng, reference::flagged_words());
    return d;
  }
  if (kind < 0.67) {
    std::string d;
    std::size_t n = 5 + uniform_below(rng, 60);
    const char* symbols = "#@$%^&*()[]{}<>~|=+-_/\\";
    for (std::size_t i = 0; i < n; ++i) d += symbols[uniform_below(rng, 23)];
    return d + " " + sentence(rng, 3);
  }
  if (kind < 0.72) {
    static const std::vector<std::string> cjk = {"数据", "处理", "模型", "语言", "文本", "质量", "清洗", "系统", "训练", "方法"};
    std::string d;
    std::size_t n = 3 + uniform_below(rng, 30);
    for (std::size_t i = 0; i < n; ++i) d += pick(rng, cjk);
    return d + "。";
  }
  if (kind < 0.78) {
    return fmt::format("int f{}(int x) {{\n  // add one\n  return x + {}; /* done */\n}}\n# note: {}", uniform_below(rng, 50),
                       uniform_below(rng, 9), sentence(rng, 3));
  }
  if (kind < 0.84) return sentence(rng, 1 + uniform_below(rng, 3));
  if (kind < 0.88) {
    return fmt::format("\\documentclass{{article}}\n\\begin{{document}}\n\\section{{Intro}}\n{}", paragraph(rng));
  }
  if (kind < 0.92) return "  " + sentence(rng, 6) + "   \t  " + sentence(rng, 5) + "  \n\n\n  ";
  // Long single-line document.
  std::string d;
  for (int i = 0; i < 12; ++i) d += sentence(rng, 12) + " ";
  return d;
}

}  // namespace

TempDir::TempDir(const std::string& tag) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = fs::temp_directory_path() / fmt::format("{}-{}-{:08x}", tag, ::getpid(), rd());
    if (fs::create_directories(candidate)) {
      path_ = candidate;
      return;
    }
  }
  throw std::runtime_error("cannot create temp dir");
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string prose(std::mt19937_64& rng, std::size_t words) {
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += pick(rng, vocabulary());
  }
  return s;
}

Dataset synthetic_corpus(std::size_t n, std::uint64_t seed, const CorpusOptions& options) {
  std::mt19937_64 rng(seed);
  static const std::vector<std::string> sources = {"web", "books", "wiki", "code", "forum"};
  static const std::vector<std::string> langs = {"en", "en", "en", "zh", "fr"};
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = make_sample_id(0, i);
    if (!out.empty() && unit(rng) < options.duplicate_rate) {
      s.text = out[uniform_below(rng, out.size())].text;
      if (unit(rng) < 0.5 && !s.text.empty()) {
        // Near duplicate: replace one word-ish span.
        std::size_t at = s.text.find(' ', uniform_below(rng, s.text.size()));
        if (at != std::string::npos) s.text.insert(at, " " + pick(rng, vocabulary()));
      }
    } else {
      s.text = document(rng);
    }
    if (options.with_meta) {
      s.meta["source"] = pick(rng, sources);
      s.meta["lang"] = pick(rng, langs);
      s.meta["rating"] = static_cast<std::int64_t>(uniform_below(rng, 5));
    }
    out.push_back(std::move(s));
  }
  return Dataset(std::move(out), options.with_meta ? Schema{"text", "meta.source", "meta.lang", "meta.rating"} : Schema{"text"});
}

Dataset short_docs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = make_sample_id(0, i);
    s.text = "  " + prose(rng, 3 + uniform_below(rng, 8)) + "   " + pick(rng, vocabulary()) + "  ";
    if (i % 7 == 0) s.text += " http://x.io/" + std::to_string(i);
    out.push_back(std::move(s));
  }
  return Dataset(std::move(out));
}

PlantedCorpus planted_duplicates(std::size_t pairs, std::size_t distractors, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PlantedCorpus pc;
  std::vector<Sample> out;
  auto add = [&](std::string text) {
    Sample s;
    s.id = make_sample_id(0, out.size());
    s.text = std::move(text);
    out.push_back(std::move(s));
    return out.back().id;
  };
  for (std::size_t i = 0; i < distractors; ++i) add(prose(rng, 60 + uniform_below(rng, 80)));
  for (std::size_t p = 0; p < pairs; ++p) {
    std::string original = prose(rng, 80 + uniform_below(rng, 60));
    std::string copy;
    do {
      // Replace 1..3 words.
      std::vector<std::string> words;
      std::size_t start = 0;
      while (start <= original.size()) {
        std::size_t sp = original.find(' ', start);
        if (sp == std::string::npos) sp = original.size();
        words.push_back(original.substr(start, sp - start));
        start = sp + 1;
      }
      std::size_t edits = 1 + uniform_below(rng, 3);
      for (std::size_t e = 0; e < edits; ++e) words[uniform_below(rng, words.size())] = pick(rng, vocabulary()) + "x";
      copy.clear();
      for (std::size_t i = 0; i < words.size(); ++i) copy += (i ? " " : "") + words[i];
    } while (oracle_jaccard(original, copy, 5) < 0.8);
    auto a = add(original);
    auto b = add(copy);
    pc.pairs.emplace_back(a, b);
  }
  // Interleave so duplicates are not adjacent.
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  shuffle(order, rng);
  std::vector<Sample> shuffled;
  for (std::size_t i : order) shuffled.push_back(out[i]);
  pc.dataset = Dataset(std::move(shuffled));
  return pc;
}

std::string random_recipe(std::mt19937_64& rng, std::size_t max_ops) {
  auto r = [&](double lo, double hi) { return lo + unit(rng) * (hi - lo); };
  auto ri = [&](std::uint64_t lo, std::uint64_t hi) { return lo + uniform_below(rng, hi - lo + 1); };
  std::vector<std::function<std::string()>> pool = {
      [&] { return std::string("whitespace_normalizer"); },
      [&] { return std::string("clean_links"); },
      [&] { return std::string("clean_email"); },
      [&] { return std::string("fix_unicode"); },
      [&] { return fmt::format("remove_code_comments: {{style: {}}}", unit(rng) < 0.5 ? "c" : "hash"); },
      [&] { return std::string("remove_latex_header"); },
      [&] { return fmt::format("text_length_filter: {{min: {}, max: {}}}", ri(0, 200), ri(400, 5000)); },
      [&] { return fmt::format("word_count_filter: {{min: {}, max: {}}}", ri(0, 30), ri(40, 1000)); },
      [&] { return fmt::format("line_count_filter: {{min: {}, max: {}}}", ri(1, 3), ri(4, 100)); },
      [&] { return fmt::format("avg_line_length_filter: {{min: {}, max: {}}}", ri(0, 40), ri(80, 3000)); },
      [&] { return fmt::format("max_line_length_filter: {{min: {}, max: {}}}", ri(0, 30), ri(150, 5000)); },
      [&] { return fmt::format("paragraph_count_filter: {{min: 1, max: {}}}", ri(2, 50)); },
      [&] { return fmt::format("alnum_ratio_filter: {{min: {:.3f}}}", r(0.2, 0.75)); },
      [&] { return fmt::format("special_char_ratio_filter: {{max: {:.3f}}}", r(0.05, 0.5)); },
      [&] { return fmt::format("flagged_words_filter: {{max: {:.3f}}}", r(0.0, 0.1)); },
      [&] { return fmt::format("stopwords_filter: {{min: {:.3f}}}", r(0.0, 0.4)); },
      [&] { return fmt::format("word_repetition_filter: {{rep_len: {}, max: {:.3f}}}", ri(2, 10), r(0.2, 0.9)); },
      [&] { return fmt::format("language_id_filter: {{lang: en, min: {:.3f}}}", r(0.0, 0.6)); },
      [&] { return fmt::format("perplexity_filter: {{max: {}}}", ri(500, 20000)); },
      [&] { return fmt::format("meta_field_filter: {{key: meta.lang, value: {}}}", unit(rng) < 0.7 ? "en" : "zh"); },
      [&] { return fmt::format("exact_hash: {{lowercase: {}}}", unit(rng) < 0.5 ? "true" : "false"); },
      [&] { return fmt::format("minhash_lsh: {{threshold: {:.2f}, k: {}}}", r(0.6, 0.9), ri(3, 6)); },
      [&] { return fmt::format("simhash: {{max_hamming: {}}}", ri(0, 8)); },
  };
  std::size_t n = 2 + uniform_below(rng, max_ops - 1);
  std::string y = "project: prop\ndataset_path: unused.jsonl\nprocess:\n";
  for (std::size_t i = 0; i < n; ++i) y += "  - " + pool[uniform_below(rng, pool.size())]() + "\n";
  return y;
}

Dataset naive_execute(const pipeline::Recipe& recipe, Dataset dataset) {
  OpRegistry registry = OpRegistry::builtin();
  for (const auto& spec : recipe.ops) {
    auto op = registry.create(spec.name, spec.params);
    if (const auto* m = dynamic_cast<const Mapper*>(op.get())) {
      std::vector<Sample> out;
      for (auto& s : std::move(dataset).release()) {
        ContextStore ctx;
        out.push_back(m->process(std::move(s), ctx));
      }
      dataset = Dataset(std::move(out));
    } else if (const auto* f = dynamic_cast<const Filter*>(op.get())) {
      std::vector<Sample> out;
      for (auto& s : std::move(dataset).release()) {
        ContextStore ctx;
        Sample with = f->compute_stats(std::move(s), ctx);
        if (f->keep(with)) out.push_back(std::move(with));
      }
      dataset = Dataset(std::move(out));
    } else if (const auto* d = dynamic_cast<const Deduplicator*>(op.get())) {
      dataset = d->run(dataset, 1).dataset;
    }
  }
  return dataset;
}

std::vector<std::string> oracle_shingles(const std::string& text, std::size_t k) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) tokens.push_back(cur);
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  std::set<std::string> out;
  if (tokens.empty()) return {};
  if (tokens.size() < k) k = tokens.size();
  for (std::size_t i = 0; i + k <= tokens.size(); ++i) {
    std::string g;
    for (std::size_t j = i; j < i + k; ++j) g += (j > i ? "\x1f" : "") + tokens[j];
    out.insert(g);
  }
  return {out.begin(), out.end()};
}

double oracle_jaccard(const std::string& a, const std::string& b, std::size_t k) {
  auto sa = oracle_shingles(a, k), sb = oracle_shingles(b, k);
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<std::string> inter;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
  double uni = static_cast<double>(sa.size() + sb.size() - inter.size());
  return static_cast<double>(inter.size()) / uni;
}

double oracle_quantile(std::vector<double> values, double q) {
  // Smallest observed v with #{x <= v} >= q n (and at least one value).
  std::sort(values.begin(), values.end());
  const double target = q * static_cast<double>(values.size());
  for (double v : values) {
    auto count = static_cast<double>(std::upper_bound(values.begin(), values.end(), v) - values.begin());
    if (count >= target - 1e-9) return v;
  }
  return values.back();
}

}  // namespace forge::testing
