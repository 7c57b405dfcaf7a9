#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Unicode helpers shared by operators, dedup and the quality classifier.
namespace forge::text {

/// Decodes one code point at `pos` and advances it. Invalid bytes decode as
/// U+FFFD and advance by one.
char32_t next_codepoint(std::string_view s, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);
std::size_t codepoint_count(std::string_view s);

bool is_space(char32_t cp);
bool is_alnum(char32_t cp);
/// Punctuation and symbol categories.
bool is_special(char32_t cp);
/// Han, kana, Hangul and CJK punctuation blocks.
bool is_cjk(char32_t cp);

/// NFC normalization. ASCII and already-normalized input come back unchanged.
std::string nfc(std::string_view s);
std::string to_lower(std::string_view s);

/// The word tokenizer: NFC, lowercase, split on Unicode whitespace; CJK
/// code points become single-character tokens.
std::vector<std::string> words(std::string_view s);

/// Python-style splitlines on '\n': a trailing newline adds no empty line
/// and empty text has no lines.
std::vector<std::string_view> lines(std::string_view s);
/// Splits after sentence-final punctuation followed by whitespace or end.
std::vector<std::string_view> sentences(std::string_view s);
/// Blocks of text separated by one or more blank lines.
std::size_t paragraph_count(std::string_view s);

struct CharClasses {
  std::size_t total = 0;
  std::size_t alnum = 0;
  std::size_t special = 0;
  std::size_t space = 0;
  std::size_t cjk = 0;

  friend bool operator==(const CharClasses&, const CharClasses&) = default;
};
CharClasses char_classes(std::string_view s);

/// Collapses every run of non-newline whitespace into one ASCII space,
/// strips spaces around newlines and trims the ends.
std::string normalize_whitespace(std::string_view s);

}  // namespace forge::text
