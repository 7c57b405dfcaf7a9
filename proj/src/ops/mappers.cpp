#include <algorithm>
#include <array>
#include <unordered_map>

#include "forge/error.hpp"
#include "forge/ops.hpp"
#include "forge/text.hpp"

namespace forge {

namespace {

bool ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r'; }
bool ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
char ascii_lower(char c) { return c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c; }

bool starts_with_icase(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (ascii_lower(s[pos + i]) != prefix[i]) return false;
  }
  return true;
}

class WhitespaceNormalizer final : public Mapper {
 public:
  using Mapper::Mapper;

 protected:
  std::string transform(std::string_view text) const override { return text::normalize_whitespace(text); }
};

// ---------------------------------------------------------------------------
// Mojibake repair: UTF-8 bytes mis-decoded as Windows-1252 and re-encoded.

constexpr std::array<char32_t, 32> kCp1252High = {
    0x20AC, 0,      0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
    0x2039, 0x0152, 0,      0x017D, 0,      0,      0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
    0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0,      0x017E, 0x0178};

std::optional<std::string> mojibake_of(char32_t target) {
  std::string utf8;
  text::append_utf8(utf8, target);
  std::string garbled;
  for (unsigned char b : utf8) {
    char32_t cp = b;
    if (b >= 0x80 && b < 0xA0) {
      cp = kCp1252High[b - 0x80];
      if (cp == 0) return std::nullopt;
    }
    text::append_utf8(garbled, cp);
  }
  return garbled;
}

struct MojibakeTable {
  // Keyed by garbled sequence; entries sorted longest-first for greedy match.
  std::vector<std::pair<std::string, std::string>> entries;

  MojibakeTable() {
    std::vector<char32_t> targets;
    for (char32_t c = 0xA1; c <= 0xFF; ++c) targets.push_back(c);
    for (char32_t c : {0x2018, 0x2019, 0x201C, 0x201D, 0x2013, 0x2014, 0x2026, 0x2022, 0x20AC, 0x2122,
                       0x0152, 0x0153, 0x0160, 0x0161, 0x0178, 0x017D, 0x017E}) {
      targets.push_back(c);
    }
    for (char32_t t : targets) {
      auto garbled = mojibake_of(t);
      if (!garbled) continue;
      std::string fixed;
      text::append_utf8(fixed, t);
      entries.emplace_back(std::move(*garbled), std::move(fixed));
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
  }
};

const MojibakeTable& mojibake_table() {
  static const MojibakeTable table;
  return table;
}

class FixUnicode final : public Mapper {
 public:
  using Mapper::Mapper;

 protected:
  std::string transform(std::string_view input) const override {
    const auto& table = mojibake_table().entries;
    std::string repaired;
    repaired.reserve(input.size());
    std::size_t pos = 0;
    while (pos < input.size()) {
      unsigned char c = static_cast<unsigned char>(input[pos]);
      // Garbled sequences start with U+00C2..U+00C5 or U+00E2, all 0xC3-led.
      if (c == 0xC3) {
        bool matched = false;
        for (const auto& [bad, good] : table) {
          if (input.compare(pos, bad.size(), bad) == 0) {
            repaired += good;
            pos += bad.size();
            matched = true;
            break;
          }
        }
        if (matched) continue;
      }
      repaired += input[pos++];
    }
    return text::nfc(repaired);
  }
};

// ---------------------------------------------------------------------------

/// Removes `(https?|ftp)://\S+` and `www\.\S+` (ASCII-case-insensitive,
/// \S = not ASCII whitespace).
class CleanLinks final : public Mapper {
 public:
  using Mapper::Mapper;

 protected:
  std::string transform(std::string_view s) const override {
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t prefix = 0;
      for (std::string_view scheme : {"https://", "http://", "ftp://", "www."}) {
        if (starts_with_icase(s, pos, scheme)) {
          prefix = scheme.size();
          break;
        }
      }
      if (prefix > 0 && pos + prefix < s.size() && !ascii_space(s[pos + prefix])) {
        pos += prefix;
        while (pos < s.size() && !ascii_space(s[pos])) ++pos;
        continue;
      }
      out += s[pos++];
    }
    return out;
  }
};

/// Removes `[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}` with the same
/// leftmost-greedy result as a backtracking regex engine.
class CleanEmail final : public Mapper {
 public:
  using Mapper::Mapper;

 protected:
  static bool local_char(char c) {
    return ascii_alpha(c) || ascii_digit(c) || c == '.' || c == '_' || c == '%' || c == '+' || c == '-';
  }
  static bool domain_char(char c) { return ascii_alpha(c) || ascii_digit(c) || c == '.' || c == '-'; }

  std::string transform(std::string_view s) const override {
    std::string out;
    std::size_t cursor = 0;  // start of the not-yet-emitted region
    std::size_t search = 0;
    while (true) {
      std::size_t at = s.find('@', search);
      if (at == s.npos) break;
      std::size_t begin = at;
      while (begin > cursor && local_char(s[begin - 1])) --begin;
      std::size_t dom_end = at + 1;
      while (dom_end < s.size() && domain_char(s[dom_end])) ++dom_end;
      std::size_t match_end = 0;
      if (begin < at && dom_end > at + 1) {
        // Longest domain prefix d (>= 1 char) followed by '.' and 2+ letters.
        for (std::size_t dot = dom_end - 1; dot > at + 1; --dot) {
          if (s[dot] != '.') continue;
          if (dot + 2 < s.size() && ascii_alpha(s[dot + 1]) && ascii_alpha(s[dot + 2])) {
            std::size_t e = dot + 1;
            while (e < s.size() && ascii_alpha(s[e])) ++e;
            match_end = e;
            break;
          }
        }
      }
      if (match_end == 0) {
        search = at + 1;
        continue;
      }
      out.append(s.substr(cursor, begin - cursor));
      cursor = match_end;
      search = match_end;
    }
    out.append(s.substr(cursor));
    return out;
  }
};

// ---------------------------------------------------------------------------

class RemoveCodeComments final : public Mapper {
 public:
  RemoveCodeComments(OpDescriptor d, Json p) : Mapper(std::move(d), std::move(p)) {
    style_ = param_string("style");
    if (style_ != "c" && style_ != "hash") throw ParamError("remove_code_comments: style must be 'c' or 'hash'");
  }

 protected:
  std::string transform(std::string_view s) const override {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    char quote = 0;
    while (i < s.size()) {
      char c = s[i];
      if (quote) {
        out += c;
        if (c == '\\' && i + 1 < s.size()) {
          out += s[i + 1];
          i += 2;
          continue;
        }
        if (c == quote || c == '\n') quote = 0;
        ++i;
        continue;
      }
      if (c == '"' || c == '\'') {
        quote = c;
        out += c;
        ++i;
        continue;
      }
      bool line_comment = style_ == "c" ? (c == '/' && i + 1 < s.size() && s[i + 1] == '/') : c == '#';
      if (line_comment) {
        while (i < s.size() && s[i] != '\n') ++i;
        while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
        continue;
      }
      if (style_ == "c" && c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
        std::size_t close = s.find("*/", i + 2);
        i = close == s.npos ? s.size() : close + 2;
        continue;
      }
      out += c;
      ++i;
    }
    return out;
  }

 private:
  std::string style_;
};

class RemoveLatexHeader final : public Mapper {
 public:
  RemoveLatexHeader(OpDescriptor d, Json p) : Mapper(std::move(d), std::move(p)) {
    drop_no_head_ = param_bool("drop_no_head");
  }

 protected:
  std::string transform(std::string_view s) const override {
    static constexpr std::string_view kCommands[] = {"part", "chapter", "section", "subsection",
                                                     "subsubsection", "paragraph", "subparagraph"};
    std::size_t pos = 0;
    while ((pos = s.find('\\', pos)) != s.npos) {
      for (std::string_view cmd : kCommands) {
        std::size_t after = pos + 1 + cmd.size();
        if (s.compare(pos + 1, cmd.size(), cmd) != 0) continue;
        if (after < s.size() && s[after] == '*') ++after;
        if (after < s.size() && s[after] == '{') return std::string(s.substr(pos));
      }
      ++pos;
    }
    return drop_no_head_ ? std::string() : std::string(s);
  }

 private:
  bool drop_no_head_ = false;
};

template <typename T>
OpFactory make_factory() {
  return [](const OpDescriptor& d, Json params) -> std::unique_ptr<Op> {
    return std::make_unique<T>(d, std::move(params));
  };
}

OpDescriptor mapper(std::string name, std::string description, std::set<std::string> tags = {"general"}) {
  OpDescriptor d;
  d.name = std::move(name);
  d.category = Category::Mapper;
  d.cost = CostClass::Cheap;
  d.tags = std::move(tags);
  d.description = std::move(description);
  return d;
}

}  // namespace

void register_mappers(OpRegistry& registry) {
  registry.register_op(mapper("whitespace_normalizer", "collapse whitespace runs to one space, keep newlines"),
                       make_factory<WhitespaceNormalizer>());
  registry.register_op(mapper("fix_unicode", "repair common mojibake and normalize to NFC"),
                       make_factory<FixUnicode>());
  registry.register_op(mapper("clean_links", "remove http(s)/ftp/www links"), make_factory<CleanLinks>());
  registry.register_op(mapper("clean_email", "remove email addresses"), make_factory<CleanEmail>());
  {
    auto d = mapper("remove_code_comments", "strip line and block comments from source code", {"code"});
    d.params.push_back({"style", ParamType::String, "c", "comment syntax: c (// and /* */) or hash (#)"});
    registry.register_op(std::move(d), make_factory<RemoveCodeComments>());
  }
  {
    auto d = mapper("remove_latex_header", "drop everything before the first sectioning command", {"latex"});
    d.params.push_back({"drop_no_head", ParamType::Bool, false, "empty documents without a sectioning command"});
    registry.register_op(std::move(d), make_factory<RemoveLatexHeader>());
  }
}

}  // namespace forge
