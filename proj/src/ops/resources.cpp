#include "forge/resources.hpp"

#include <cmath>
#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <map>

#include "forge/core.hpp"
#include "forge/error.hpp"
#include "forge/text.hpp"

namespace forge {

namespace {

template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    std::string_view line = content.substr(pos, nl == content.npos ? content.npos : nl - pos);
    pos = nl == content.npos ? content.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(line, line_no);
  }
}

std::string_view trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == s.npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::pair<std::string_view, double> split_tsv(std::string_view line, std::size_t line_no) {
  std::size_t tab = line.rfind('\t');
  if (tab == line.npos) throw ParseError("expected 'key<TAB>number'", line_no, 1);
  std::string_view num = trim(line.substr(tab + 1));
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
  if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(value)) {
    throw ParseError("invalid number '" + std::string(num) + "'", line_no, tab + 2);
  }
  return {line.substr(0, tab), value};
}

std::string format_number(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15) return fmt::format("{}", static_cast<long long>(v));
  return fmt::format("{}", v);
}

}  // namespace

// ---------------------------------------------------------------------------

WordList WordList::from_terms(std::span<const std::string> terms) {
  WordList list;
  std::string canonical;
  for (const auto& t : terms) {
    std::string term = text::to_lower(text::nfc(trim(t)));
    if (term.empty()) continue;
    list.terms_.insert(term);
  }
  std::vector<std::string> sorted(list.terms_.begin(), list.terms_.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& t : sorted) canonical += t + "\n";
  list.digest_ = hash128(canonical);
  return list;
}

WordList WordList::parse(std::string_view content) {
  std::vector<std::string> terms;
  for_each_line(content, [&](std::string_view line, std::size_t) {
    line = trim(line);
    if (!line.empty()) terms.emplace_back(line);
  });
  WordList list = from_terms(terms);
  list.digest_ = hash128(content);
  return list;
}

WordList WordList::load(const std::filesystem::path& path) { return parse(read_file(path)); }

// ---------------------------------------------------------------------------

NgramModel NgramModel::train(const std::vector<std::vector<std::string>>& documents) {
  NgramModel model;
  for (const auto& doc : documents) {
    std::vector<std::string_view> padded = {kBos, kBos};
    for (const auto& t : doc) padded.emplace_back(t);
    for (std::size_t i = 2; i < padded.size(); ++i) {
      std::string uni(padded[i]);
      std::string ctx = std::string(padded[i - 2]) + " " + std::string(padded[i - 1]);
      model.counts_[uni] += 1;
      model.counts_[ctx] += 1;
      model.counts_[ctx + " " + uni] += 1;
    }
  }
  model.finalize(model.to_tsv());
  return model;
}

NgramModel NgramModel::parse(std::string_view content) {
  NgramModel model;
  for_each_line(content, [&](std::string_view line, std::size_t line_no) {
    if (trim(line).empty() || line.front() == '#') return;
    auto [key, value] = split_tsv(line, line_no);
    if (key.empty()) throw ParseError("empty n-gram", line_no, 1);
    std::size_t order = 1 + static_cast<std::size_t>(std::count(key.begin(), key.end(), ' '));
    if (order > 3) throw ParseError("n-gram order above 3", line_no, 1);
    model.counts_[std::string(key)] += value;
  });
  model.finalize(content);
  return model;
}

NgramModel NgramModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void NgramModel::finalize(std::string_view source_bytes) {
  vocabulary_ = 1;  // unknown-word slot
  for (const auto& [key, count] : counts_) {
    if (key.find(' ') == std::string::npos && key != kBos) ++vocabulary_;
  }
  digest_ = hash128(source_bytes);
}

std::string NgramModel::to_tsv() const {
  std::map<std::string, double> sorted(counts_.begin(), counts_.end());
  std::string out;
  for (const auto& [key, count] : sorted) out += key + "\t" + format_number(count) + "\n";
  return out;
}

double NgramModel::perplexity(std::span<const std::string> tokens, double k) const {
  if (tokens.empty()) return 0.0;
  auto count = [&](const std::string& key) {
    auto it = counts_.find(key);
    return it == counts_.end() ? 0.0 : it->second;
  };
  std::string prev2(kBos), prev1(kBos);
  double log_sum = 0.0;
  const double kv = k * static_cast<double>(vocabulary_);
  for (const auto& w : tokens) {
    std::string ctx = prev2 + " " + prev1;
    double p = (count(ctx + " " + w) + k) / (count(ctx) + kv);
    log_sum += std::log(p);
    prev2 = std::move(prev1);
    prev1 = w;
  }
  return std::exp(-log_sum / static_cast<double>(tokens.size()));
}

// ---------------------------------------------------------------------------

std::vector<std::string> char_trigrams(std::string_view raw) {
  std::string lowered = text::to_lower(text::nfc(raw));
  std::vector<char32_t> cps{U' '};
  std::size_t pos = 0;
  while (pos < lowered.size()) {
    char32_t cp = text::next_codepoint(lowered, pos);
    bool letter = text::is_alnum(cp) && !(cp >= '0' && cp <= '9');
    if (letter) {
      cps.push_back(cp);
    } else if (cps.back() != U' ') {
      cps.push_back(U' ');
    }
  }
  if (cps.back() != U' ') cps.push_back(U' ');
  std::vector<std::string> out;
  if (cps.size() < 3) return out;
  out.reserve(cps.size() - 2);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    std::string tri;
    for (std::size_t j = 0; j < 3; ++j) text::append_utf8(tri, cps[i + j]);
    out.push_back(std::move(tri));
  }
  return out;
}

TrigramProfile TrigramProfile::from_text(std::string_view text) {
  TrigramProfile profile;
  auto grams = char_trigrams(text);
  for (auto& g : grams) profile.freq_[std::move(g)] += 1.0;
  double total = static_cast<double>(grams.size());
  double sq = 0.0;
  for (auto& [g, f] : profile.freq_) {
    f /= total;
    sq += f * f;
  }
  profile.norm_ = std::sqrt(sq);
  profile.digest_ = hash128(text);
  return profile;
}

TrigramProfile TrigramProfile::parse(std::string_view content) {
  TrigramProfile profile;
  for_each_line(content, [&](std::string_view line, std::size_t line_no) {
    if (line.empty() || line.front() == '#') return;
    auto [key, value] = split_tsv(line, line_no);
    if (text::codepoint_count(key) != 3) throw ParseError("trigram must have 3 characters", line_no, 1);
    profile.freq_[std::string(key)] += value;
  });
  double sq = 0.0;
  for (const auto& [g, f] : profile.freq_) sq += f * f;
  profile.norm_ = std::sqrt(sq);
  profile.digest_ = hash128(content);
  return profile;
}

TrigramProfile TrigramProfile::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string TrigramProfile::to_tsv() const {
  std::map<std::string, double> sorted(freq_.begin(), freq_.end());
  std::string out;
  for (const auto& [g, f] : sorted) out += g + "\t" + fmt::format("{}", f) + "\n";
  return out;
}

double TrigramProfile::cosine(const TrigramProfile& other) const {
  if (norm_ == 0.0 || other.norm_ == 0.0) return 0.0;
  const auto& small = freq_.size() <= other.freq_.size() ? freq_ : other.freq_;
  const auto& large = freq_.size() <= other.freq_.size() ? other.freq_ : freq_;
  double dot = 0.0;
  for (const auto& [g, f] : small) {
    if (auto it = large.find(g); it != large.end()) dot += f * it->second;
  }
  return dot / (norm_ * other.norm_);
}

// ---------------------------------------------------------------------------

namespace reference {

const NgramModel& english_model() {
  static const NgramModel model = [] {
    std::vector<std::vector<std::string>> docs;
    std::string_view t = english_text();
    std::size_t pos = 0;
    while (pos < t.size()) {
      std::size_t end = t.find("\n\n", pos);
      std::string_view para = t.substr(pos, end == t.npos ? t.npos : end - pos);
      pos = end == t.npos ? t.size() : end + 2;
      auto w = text::words(para);
      if (!w.empty()) docs.push_back(std::move(w));
    }
    return NgramModel::train(docs);
  }();
  return model;
}

const TrigramProfile& profile(std::string_view lang) {
  static const TrigramProfile en = TrigramProfile::from_text(english_text());
  static const TrigramProfile zh = TrigramProfile::from_text(chinese_text());
  if (lang == "en") return en;
  if (lang == "zh") return zh;
  throw ParamError("no shipped trigram profile for language '" + std::string(lang) + "'");
}

}  // namespace reference

}  // namespace forge
