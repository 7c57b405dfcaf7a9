#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/ops.hpp"
#include "forge/resources.hpp"
#include "forge/text.hpp"

namespace forge {

namespace {

constexpr double kMaxDouble = std::numeric_limits<double>::max();

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

/// Filter whose single stat is computed by a function of (text, contexts).
class StatFilter : public Filter {
 public:
  using Compute = std::function<double(const StatFilter&, std::string_view, ContextStore&)>;
  StatFilter(OpDescriptor d, Json p, Compute fn) : Filter(std::move(d), std::move(p)), fn_(std::move(fn)) {}

 protected:
  void compute(const Sample& sample, ContextStore& ctx, Stats& out) const override {
    out[descriptor().stat_keys.front()] = fn_(*this, field_text(sample, field()), ctx);
  }

 private:
  Compute fn_;
};

class WordListFilter final : public Filter {
 public:
  WordListFilter(OpDescriptor d, Json p, const std::vector<std::string>& fallback) : Filter(std::move(d), std::move(p)) {
    std::string file = param_string("words_file");
    auto inline_words = param_strings("words");
    if (!file.empty()) {
      list_ = WordList::load(file);
      add_resource("words_file", list_.digest());
    } else if (!inline_words.empty()) {
      list_ = WordList::from_terms(inline_words);
    } else {
      list_ = WordList::from_terms(fallback);
    }
  }

 protected:
  void compute(const Sample& sample, ContextStore& ctx, Stats& out) const override {
    const auto& words = ctx.words(field(), field_text(sample, field()));
    std::size_t hits = std::count_if(words.begin(), words.end(), [&](const std::string& w) { return list_.contains(w); });
    out[descriptor().stat_keys.front()] = ratio(hits, words.size());
  }

 private:
  WordList list_;
};

class LanguageIdFilter final : public Filter {
 public:
  LanguageIdFilter(OpDescriptor d, Json p) : Filter(std::move(d), std::move(p)) {
    lang_ = param_string("lang");
    for (const auto& spec : param_strings("profiles")) {
      auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw ParamError("language_id_filter: profiles entries are 'lang=path'");
      std::string code = spec.substr(0, eq);
      auto profile = TrigramProfile::load(spec.substr(eq + 1));
      add_resource("profile:" + code, profile.digest());
      owned_.emplace(code, std::move(profile));
    }
    if (owned_.empty()) {
      for (const char* code : {"en", "zh"}) shipped_.emplace(code, &reference::profile(code));
    } else {
      for (const auto& [code, prof] : owned_) shipped_.emplace(code, &prof);
    }
    if (!lang_.empty() && !shipped_.contains(lang_)) {
      throw ParamError("language_id_filter: no profile for language '" + lang_ + "'");
    }
  }

 protected:
  void compute(const Sample& sample, ContextStore&, Stats& out) const override {
    TrigramProfile doc = TrigramProfile::from_text(field_text(sample, field()));
    double score = 0.0;
    if (!lang_.empty()) {
      score = doc.cosine(*shipped_.at(lang_));
    } else {
      for (const auto& [code, prof] : shipped_) score = std::max(score, doc.cosine(*prof));
    }
    out["language_confidence"] = score;
  }

 private:
  std::string lang_;
  std::map<std::string, TrigramProfile> owned_;
  std::map<std::string, const TrigramProfile*> shipped_;
};

class PerplexityFilter final : public Filter {
 public:
  PerplexityFilter(OpDescriptor d, Json p) : Filter(std::move(d), std::move(p)) {
    std::string path = param_string("model_path");
    smoothing_ = param_double("smoothing");
    if (smoothing_ <= 0.0) throw ParamError("perplexity_filter: smoothing must be positive");
    if (!path.empty()) {
      owned_ = NgramModel::load(path);
      add_resource("model_path", owned_.digest());
      model_ = &owned_;
    } else {
      model_ = &reference::english_model();
    }
  }

 protected:
  void compute(const Sample& sample, ContextStore& ctx, Stats& out) const override {
    const auto& words = ctx.words(field(), field_text(sample, field()));
    out["perplexity"] = model_->perplexity(words, smoothing_);
  }

 private:
  NgramModel owned_;
  const NgramModel* model_ = nullptr;
  double smoothing_ = 0.1;
};

/// Keeps samples whose meta value at `key` equals `value`. Missing or null
/// values never match.
class MetaFieldFilter final : public Filter {
 public:
  MetaFieldFilter(OpDescriptor d, Json p) : Filter(std::move(d), std::move(p)), key_(FieldPath::parse(param_string("key"))) {
    if (key_.root() != FieldPath::Root::Meta) throw ParamError("meta_field_filter: key must be a meta.* path");
    value_ = param_string("value");
  }

  bool keep(const Sample& sample) const override {
    const Json* node = find_meta(sample, key_);
    if (!node) return false;
    if (node->is_string()) return node->get_ref<const std::string&>() == value_;
    return node->dump() == value_;
  }

 protected:
  void compute(const Sample&, ContextStore&, Stats&) const override {}

 private:
  FieldPath key_;
  std::string value_;
};

OpDescriptor filter(std::string name, std::string stat, std::set<ContextKey> contexts, CostClass cost,
                    double min, double max, std::string description, std::set<std::string> tags = {"general"}) {
  OpDescriptor d;
  d.name = std::move(name);
  d.category = Category::Filter;
  d.contexts = std::move(contexts);
  d.cost = cost;
  d.tags = std::move(tags);
  d.formula = d.name + "/" + stat;
  d.predicate = "min <= stats." + stat + " <= max";
  d.stat_keys = {std::move(stat)};
  d.description = std::move(description);
  d.params.push_back({"min", ParamType::Double, min, "inclusive lower bound"});
  d.params.push_back({"max", ParamType::Double, max, "inclusive upper bound"});
  return d;
}

OpFactory stat_factory(StatFilter::Compute fn) {
  return [fn = std::move(fn)](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
    return std::make_unique<StatFilter>(d, std::move(p), fn);
  };
}

}  // namespace

void register_filters(OpRegistry& registry) {
  using CK = ContextKey;

  registry.register_op(
      filter("text_length_filter", "char_count", {}, CostClass::Cheap, 10, kMaxDouble, "number of code points"),
      stat_factory([](const StatFilter&, std::string_view t, ContextStore&) {
        return static_cast<double>(text::codepoint_count(t));
      }));

  registry.register_op(
      filter("word_count_filter", "word_count", {CK::Words}, CostClass::Moderate, 10, kMaxDouble,
             "number of whitespace/CJK tokens"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        return static_cast<double>(ctx.words(f.field(), t).size());
      }));

  registry.register_op(
      filter("line_count_filter", "line_count", {CK::Lines}, CostClass::Cheap, 1, kMaxDouble, "number of lines"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        return static_cast<double>(ctx.lines(f.field(), t).size());
      }));

  registry.register_op(
      filter("avg_line_length_filter", "avg_line_length", {CK::Lines}, CostClass::Cheap, 10, kMaxDouble,
             "code points per line"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        return ratio(text::codepoint_count(t), ctx.lines(f.field(), t).size());
      }));

  registry.register_op(
      filter("max_line_length_filter", "max_line_length", {CK::Lines}, CostClass::Cheap, 10, kMaxDouble,
             "code points in the longest line"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        std::size_t longest = 0;
        for (auto line : ctx.lines(f.field(), t)) longest = std::max(longest, text::codepoint_count(line));
        return static_cast<double>(longest);
      }));

  registry.register_op(
      filter("paragraph_count_filter", "paragraph_count", {CK::Lines}, CostClass::Cheap, 1, kMaxDouble,
             "blocks separated by blank lines"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        std::size_t count = 0;
        bool in_paragraph = false;
        for (auto line : ctx.lines(f.field(), t)) {
          bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
          if (!blank && !in_paragraph) ++count;
          in_paragraph = !blank;
        }
        return static_cast<double>(count);
      }));

  registry.register_op(
      filter("alnum_ratio_filter", "alnum_ratio", {CK::CharClasses}, CostClass::Cheap, 0.25, 1.0,
             "alphanumeric code points / all code points"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        const auto& cc = ctx.char_classes(f.field(), t);
        return ratio(cc.alnum, cc.total);
      }));

  registry.register_op(
      filter("special_char_ratio_filter", "special_char_ratio", {CK::CharClasses}, CostClass::Cheap, 0.0, 0.25,
             "punctuation and symbol code points / all code points"),
      stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
        const auto& cc = ctx.char_classes(f.field(), t);
        return ratio(cc.special, cc.total);
      }));

  {
    auto d = filter("flagged_words_filter", "flagged_ratio", {CK::Words}, CostClass::Moderate, 0.0, 0.045,
                    "tokens found in the flagged wordlist / all tokens", {"general", "en"});
    d.params.push_back({"words_file", ParamType::String, "", "wordlist path, one term per line"});
    d.params.push_back({"words", ParamType::StringList, Json::array(), "inline wordlist"});
    registry.register_op(std::move(d), [](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
      return std::make_unique<WordListFilter>(d, std::move(p), reference::flagged_words());
    });
  }
  {
    auto d = filter("stopwords_filter", "stopwords_ratio", {CK::Words}, CostClass::Moderate, 0.3, 1.0,
                    "tokens found in the stopword list / all tokens", {"general", "en"});
    d.params.push_back({"words_file", ParamType::String, "", "wordlist path, one term per line"});
    d.params.push_back({"words", ParamType::StringList, Json::array(), "inline wordlist"});
    registry.register_op(std::move(d), [](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
      return std::make_unique<WordListFilter>(d, std::move(p), reference::english_stopwords());
    });
  }
  {
    auto d = filter("word_repetition_filter", "word_repetition_ratio", {CK::Words}, CostClass::Moderate, 0.0, 0.5,
                    "share of word n-gram occurrences whose n-gram repeats");
    d.params.push_back({"rep_len", ParamType::Int, 5, "n-gram length"});
    registry.register_op(std::move(d), stat_factory([](const StatFilter& f, std::string_view t, ContextStore& ctx) {
                           const auto& words = ctx.words(f.field(), t);
                           std::size_t n = static_cast<std::size_t>(std::max<std::int64_t>(1, f.params()["rep_len"].get<std::int64_t>()));
                           if (words.size() < n) return 0.0;
                           std::unordered_map<std::string, std::size_t> freq;
                           std::size_t total = words.size() - n + 1;
                           for (std::size_t i = 0; i < total; ++i) {
                             std::string gram = words[i];
                             for (std::size_t j = 1; j < n; ++j) gram += " " + words[i + j];
                             ++freq[gram];
                           }
                           std::size_t repeated = 0;
                           for (const auto& [g, c] : freq) {
                             if (c > 1) repeated += c;
                           }
                           return ratio(repeated, total);
                         }));
  }
  {
    auto d = filter("language_id_filter", "language_confidence", {}, CostClass::Expensive, 0.5, 1.0,
                    "cosine similarity of character-trigram profile to the target language");
    d.params.push_back({"lang", ParamType::String, "en", "target language; empty = best match"});
    d.params.push_back({"profiles", ParamType::StringList, Json::array(), "lang=path profile files"});
    registry.register_op(std::move(d), [](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
      return std::make_unique<LanguageIdFilter>(d, std::move(p));
    });
  }
  {
    auto d = filter("perplexity_filter", "perplexity", {CK::Words}, CostClass::Expensive, 0.0, 1500.0,
                    "word trigram perplexity under an add-k smoothed model", {"general", "en"});
    d.params.push_back({"model_path", ParamType::String, "", "n-gram count table; empty = shipped model"});
    d.params.push_back({"smoothing", ParamType::Double, 0.1, "add-k constant"});
    registry.register_op(std::move(d), [](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
      return std::make_unique<PerplexityFilter>(d, std::move(p));
    });
  }
  {
    OpDescriptor d;
    d.name = "meta_field_filter";
    d.category = Category::Filter;
    d.cost = CostClass::Cheap;
    d.tags = {"general"};
    d.predicate = "meta[key] == value";
    d.description = "keep samples whose meta value equals a target";
    d.params.push_back({"key", ParamType::String, "meta.lang", "meta path"});
    d.params.push_back({"value", ParamType::String, "", "required value"});
    registry.register_op(std::move(d), [](const OpDescriptor& d, Json p) -> std::unique_ptr<Op> {
      return std::make_unique<MetaFieldFilter>(d, std::move(p));
    });
  }
}

}  // namespace forge
