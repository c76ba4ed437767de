#include "loyalty/text_preprocess.hpp"

#include <algorithm>

#include "loyalty/error.hpp"

namespace loyalty {
namespace utf8 {

std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (ok && (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace utf8

namespace {

bool in_range(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

bool is_whitespace(char32_t c) {
  return c == U' ' || c == U'\t' || c == 0x3000 || c == 0xA0 || is_line_break(c);
}

// Characters that disqualify a parenthesised span from being a kaomoji.
// Greek, Cyrillic and the katakana middle dot / prolonged sound mark are
// deliberately absent: they are common kaomoji faces.
bool is_wordlike(char32_t c) {
  return in_range(c, U'0', U'9') || in_range(c, U'A', U'Z') || in_range(c, U'a', U'z') ||
         (in_range(c, 0xC0, 0x24F) && c != 0xD7 && c != 0xF7) ||  // Latin-1 / Extended letters
         in_range(c, 0x3041, 0x309F) ||                            // Hiragana
         (in_range(c, 0x30A0, 0x30FF) && c != 0x30FB && c != 0x30FC) ||
         in_range(c, 0x3400, 0x4DBF) || in_range(c, 0x4E00, 0x9FFF) ||  // CJK ideographs
         in_range(c, 0xFF10, 0xFF19) || in_range(c, 0xFF21, 0xFF3A) || in_range(c, 0xFF41, 0xFF5A) ||
         in_range(c, 0xFF66, 0xFF9D);  // half-width katakana
}

bool is_open_paren(char32_t c) { return c == U'(' || c == U'（'; }
bool is_close_paren(char32_t c) { return c == U')' || c == U'）'; }

class Cleaner {
 public:
  explicit Cleaner(const PreprocessConfig& cfg) : cfg_(cfg) {}

  bool is_period(char32_t c) const { return cfg_.sentence_end_punct.find(c) != std::u32string::npos; }

  bool is_terminator(char32_t c) const {
    return is_period(c) || c == U'!' || c == U'?' || c == U'！' || c == U'？';
  }

  // One flag per code point: part of a line break, pictograph or kaomoji.
  std::vector<bool> mark_removable(const std::u32string& s) const {
    std::vector<bool> marks(s.size(), false);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (is_line_break(s[i]) || is_pictograph(s[i])) marks[i] = true;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!is_open_paren(s[i])) continue;
      std::size_t j = i + 1;
      bool kaomoji = true;
      for (; j < s.size() && !is_close_paren(s[j]); ++j) {
        if (is_open_paren(s[j]) || is_wordlike(s[j]) || is_whitespace(s[j])) {
          kaomoji = false;
          break;
        }
      }
      if (!kaomoji || j >= s.size() || j == i + 1) continue;
      std::fill(marks.begin() + static_cast<std::ptrdiff_t>(i), marks.begin() + static_cast<std::ptrdiff_t>(j + 1),
                true);
      i = j;
    }
    return marks;
  }

  bool sentence_end_at(const std::u32string& s, const std::vector<bool>& marks, std::size_t pos) const {
    if (pos >= s.size() || !marks[pos]) return false;
    for (std::size_t j = pos + 1; j < s.size(); ++j) {
      if (!marks[j] && !is_whitespace(s[j])) return false;
    }
    for (std::size_t j = pos; j-- > 0;) {
      if (!marks[j] && !is_whitespace(s[j])) return !is_terminator(s[j]);
    }
    return false;
  }

  // One removal pass; returns false when nothing was removable.
  bool remove_pass(std::u32string& s) const {
    const auto marks = mark_removable(s);
    if (std::none_of(marks.begin(), marks.end(), [](bool m) { return m; })) return false;
    std::u32string out;
    out.reserve(s.size());
    bool period_emitted = false;  // for the current group of removable elements
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!marks[i]) {
        if (!is_whitespace(s[i])) period_emitted = false;
        out.push_back(s[i]);
        continue;
      }
      if (!period_emitted && sentence_end_at(s, marks, i)) {
        out.push_back(cfg_.replacement);
        period_emitted = true;
      }
    }
    s = std::move(out);
    return true;
  }

  std::u32string merge_periods(const std::u32string& s) const {
    std::u32string out;
    out.reserve(s.size());
    for (char32_t c : s) {
      if (is_period(c) && !out.empty() && is_period(out.back())) continue;
      out.push_back(c);
    }
    return out;
  }

 private:
  const PreprocessConfig& cfg_;
};

}  // namespace

void PreprocessConfig::validate() const {
  if (len_max < 1 || len_max > kMaxEncoderTokens) {
    throw UsageError("len_max must lie in 1.." + std::to_string(kMaxEncoderTokens) + ", got " +
                     std::to_string(len_max));
  }
  if (sentence_end_punct.empty()) throw UsageError("sentence_end_punct must not be empty");
}

bool is_line_break(char32_t c) {
  return c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' || c == 0x85 || c == 0x2028 || c == 0x2029;
}

bool is_pictograph(char32_t c) {
  return in_range(c, 0x1F600, 0x1F64F)     // Emoticons
         || in_range(c, 0x1F300, 0x1F5FF)  // Misc Symbols and Pictographs
         || in_range(c, 0x1F680, 0x1F6FF)  // Transport and Map
         || in_range(c, 0x1F900, 0x1F9FF)  // Supplemental Symbols and Pictographs
         || in_range(c, 0x1FA70, 0x1FAFF)  // Symbols and Pictographs Extended-A
         || in_range(c, 0x2700, 0x27BF)    // Dingbats
         || c == 0xFE0E || c == 0xFE0F     // variation selectors
         || c == 0x200D;                   // zero-width joiner inside emoji sequences
}

std::string clean_text(std::string_view utf8_text, const PreprocessConfig& cfg) {
  const Cleaner cleaner(cfg);
  auto s = utf8::decode(utf8_text);
  // Removing one element can expose another (a line break inside a kaomoji),
  // so repeat until nothing removable is left. Each pass shrinks the text or
  // leaves only a trailing period, so the bound is never reached in practice.
  for (std::size_t pass = 0; pass <= s.size() + 1 && cleaner.remove_pass(s); ++pass) {
  }
  return utf8::encode(cleaner.merge_periods(s));
}

bool is_sentence_end(std::string_view utf8_text, std::size_t position, const PreprocessConfig& cfg) {
  if (position >= utf8_text.size()) return false;
  const Cleaner cleaner(cfg);
  const auto s = utf8::decode(utf8_text);
  // Map the byte offset onto the code point containing it.
  std::size_t index = 0;
  for (std::size_t i = 1; i <= position; ++i) {
    if ((static_cast<unsigned char>(utf8_text[i]) & 0xC0) != 0x80) ++index;
  }
  return cleaner.sentence_end_at(s, cleaner.mark_removable(s), index);
}

std::vector<std::int64_t> cap_tokens(std::span<const std::int64_t> token_ids, const PreprocessConfig& cfg) {
  const auto n = std::min(token_ids.size(), cfg.len_max);
  return {token_ids.begin(), token_ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::string truncate_code_points(std::string_view utf8_text, std::size_t limit) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < utf8_text.size(); ++i) {
    if ((static_cast<unsigned char>(utf8_text[i]) & 0xC0) != 0x80) {
      if (count == limit) return std::string(utf8_text.substr(0, i));
      ++count;
    }
  }
  return std::string(utf8_text);
}

}  // namespace loyalty
