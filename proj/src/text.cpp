#include "forge/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace forge::text {

char32_t next_codepoint(std::string_view s, std::size_t& pos) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  unsigned char c = p[pos];
  if (c < 0x80) {
    ++pos;
    return c;
  }
  std::size_t len;
  char32_t cp;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + len > s.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    unsigned char cc = p[pos + k];
    if ((cc & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  pos += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

bool is_space(char32_t cp) {
  if (cp < 0x80) return cp == ' ' || (cp >= '\t' && cp <= '\r') || cp == 0x1C || cp == 0x1D || cp == 0x1E || cp == 0x1F;
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_alnum(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || ((cp | 0x20) >= 'a' && (cp | 0x20) <= 'z');
  return u_isalnum(static_cast<UChar32>(cp));
}

bool is_special(char32_t cp) {
  if (cp < 0x80) return cp > 0x20 && cp < 0x7F && !is_alnum(cp);
  switch (u_charType(static_cast<UChar32>(cp))) {
    case U_DASH_PUNCTUATION:
    case U_START_PUNCTUATION:
    case U_END_PUNCTUATION:
    case U_CONNECTOR_PUNCTUATION:
    case U_OTHER_PUNCTUATION:
    case U_INITIAL_PUNCTUATION:
    case U_FINAL_PUNCTUATION:
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL:
      return true;
    default:
      return false;
  }
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
         (cp >= 0x20000 && cp <= 0x2FA1F) ||  // extensions B+ and compatibility supplement
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
         (cp >= 0x3040 && cp <= 0x30FF) ||    // hiragana, katakana
         (cp >= 0xAC00 && cp <= 0xD7AF) ||    // hangul syllables
         (cp >= 0x3000 && cp <= 0x303F) ||    // CJK punctuation
         (cp >= 0xFF00 && cp <= 0xFFEF);      // full-width forms
}

namespace {
bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw std::runtime_error("ICU NFC normalizer unavailable");
  return *n;
}
}  // namespace

std::string nfc(std::string_view s) {
  if (is_ascii(s)) return std::string(s);
  static const icu::Normalizer2& norm = nfc_instance();
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  UErrorCode status = U_ZERO_ERROR;
  if (norm.isNormalized(u, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  icu::UnicodeString out = norm.normalize(u, status);
  if (U_FAILURE(status)) return std::string(s);
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[pos]);
    if (c < 0x80) {
      out += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
      ++pos;
      continue;
    }
    char32_t cp = next_codepoint(s, pos);
    append_utf8(out, static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
  }
  return out;
}

std::vector<std::string> words(std::string_view raw) {
  std::string normalized = nfc(raw);
  std::string_view s = normalized;
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  };
  std::size_t pos = 0;
  while (pos < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[pos]);
    if (c < 0x80) {
      ++pos;
      if (is_space(c)) {
        flush();
      } else {
        current += static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c);
      }
      continue;
    }
    char32_t cp = next_codepoint(s, pos);
    if (is_space(cp)) {
      flush();
    } else if (is_cjk(cp)) {
      flush();
      std::string single;
      append_utf8(single, cp);
      out.push_back(std::move(single));
    } else {
      append_utf8(current, static_cast<char32_t>(u_tolower(static_cast<UChar32>(cp))));
    }
  }
  flush();
  return out;
}

std::vector<std::string_view> lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == s.npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::string_view> sentences(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  auto push = [&](std::size_t end) {
    std::string_view piece = s.substr(start, end - start);
    std::size_t a = piece.find_first_not_of(" \t\r\n");
    if (a != piece.npos) {
      std::size_t b = piece.find_last_not_of(" \t\r\n");
      out.push_back(piece.substr(a, b - a + 1));
    }
    start = end;
  };
  while (pos < s.size()) {
    char32_t cp = next_codepoint(s, pos);
    bool terminal = cp == '.' || cp == '!' || cp == '?' || cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;
    if (!terminal) continue;
    bool cjk_terminal = cp > 0x7F;
    if (cjk_terminal || pos >= s.size() || is_space(static_cast<unsigned char>(s[pos]))) push(pos);
  }
  if (start < s.size()) push(s.size());
  return out;
}

std::size_t paragraph_count(std::string_view s) {
  std::size_t count = 0;
  bool in_paragraph = false;
  for (std::string_view line : lines(s)) {
    bool blank = line.find_first_not_of(" \t\r") == std::string_view::npos;
    if (!blank && !in_paragraph) ++count;
    in_paragraph = !blank;
  }
  return count;
}

CharClasses char_classes(std::string_view s) {
  CharClasses cc;
  std::size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = next_codepoint(s, pos);
    ++cc.total;
    if (is_alnum(cp)) {
      ++cc.alnum;
    } else if (is_space(cp)) {
      ++cc.space;
    } else if (is_special(cp)) {
      ++cc.special;
    }
    if (is_cjk(cp)) ++cc.cjk;
  }
  return cc;
}

std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  std::size_t newlines = 0;
  bool in_run = false;
  auto close_run = [&] {
    if (!in_run) return;
    if (!out.empty()) {
      if (newlines > 0) {
        out.append(newlines, '\n');
      } else {
        out += ' ';
      }
    }
    in_run = false;
    newlines = 0;
  };
  while (pos < s.size()) {
    std::size_t before = pos;
    char32_t cp = next_codepoint(s, pos);
    if (is_space(cp)) {
      in_run = true;
      if (cp == '\n') ++newlines;
      continue;
    }
    close_run();
    out.append(s.substr(before, pos - before));
  }
  return out;
}

}  // namespace forge::text
