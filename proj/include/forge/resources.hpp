#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "forge/hash.hpp"

// Immutable lookup resources loaded once and shared by every worker.
namespace forge {

/// One term per line, UTF-8, matched lowercase.
class WordList {
 public:
  WordList() = default;
  static WordList from_terms(std::span<const std::string> terms);
  static WordList parse(std::string_view content);
  static WordList load(const std::filesystem::path& path);

  bool contains(std::string_view lowercase_term) const { return terms_.contains(std::string(lowercase_term)); }
  std::size_t size() const noexcept { return terms_.size(); }
  const Fingerprint& digest() const noexcept { return digest_; }

 private:
  std::unordered_set<std::string> terms_;
  Fingerprint digest_;
};

/// Word n-gram counts (orders 1..3) with add-k smoothed trigram perplexity.
/// File format: `ngram \t count` per line, tokens of the n-gram separated by
/// single spaces. Sequences are padded with two `<s>` tokens.
class NgramModel {
 public:
  static constexpr std::string_view kBos = "<s>";

  NgramModel() = default;
  static NgramModel train(const std::vector<std::vector<std::string>>& documents);
  static NgramModel parse(std::string_view content);
  static NgramModel load(const std::filesystem::path& path);
  std::string to_tsv() const;

  /// exp(-mean log P(w_i | w_{i-2} w_{i-1})). Empty input gives 0.
  double perplexity(std::span<const std::string> tokens, double k = 0.1) const;
  std::size_t vocabulary() const noexcept { return vocabulary_; }
  const Fingerprint& digest() const noexcept { return digest_; }

 private:
  void finalize(std::string_view source_bytes);
  std::unordered_map<std::string, double> counts_;
  std::size_t vocabulary_ = 0;
  Fingerprint digest_;
};

/// Character trigram frequency profile. File format: `trigram \t freq`.
class TrigramProfile {
 public:
  TrigramProfile() = default;
  static TrigramProfile from_text(std::string_view text);
  static TrigramProfile parse(std::string_view content);
  static TrigramProfile load(const std::filesystem::path& path);
  std::string to_tsv() const;

  /// Cosine similarity of the two frequency vectors; 0 if either is empty.
  double cosine(const TrigramProfile& other) const;
  const std::unordered_map<std::string, double>& frequencies() const noexcept { return freq_; }
  const Fingerprint& digest() const noexcept { return digest_; }

 private:
  std::unordered_map<std::string, double> freq_;
  double norm_ = 0.0;
  Fingerprint digest_;
};

/// Trigram extraction used by both profiles and documents: lowercase, runs of
/// non-letters collapse to one space, padded with a space on both ends.
std::vector<std::string> char_trigrams(std::string_view text);

/// Shipped reference material.
namespace reference {
std::string_view english_text();
std::string_view chinese_text();
const std::vector<std::string>& english_stopwords();
const std::vector<std::string>& flagged_words();
const std::vector<std::string>& instruction_verbs();
/// Built from english_text(); cached.
const NgramModel& english_model();
const TrigramProfile& profile(std::string_view lang);
}  // namespace reference

}  // namespace forge
