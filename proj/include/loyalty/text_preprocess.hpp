#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loyalty {

inline constexpr std::size_t kMaxEncoderTokens = 512;

struct PreprocessConfig {
  std::size_t len_max = 200;
  // Characters treated as a sentence period. Runs of these collapse to one.
  std::u32string sentence_end_punct = U"。.";
  // Period emitted where a removed element closed the text.
  char32_t replacement = U'。';

  // Throws UsageError unless 1 <= len_max <= 512 and the period set is non-empty.
  void validate() const;
};

// Removes line breaks, pictographs/emoji and parenthesised kaomoji. A removed
// element that ends the text becomes a single period; elsewhere it is dropped.
// Afterwards every run of consecutive periods is merged into its first
// character. Idempotent.
std::string clean_text(std::string_view utf8, const PreprocessConfig& cfg = {});

// Decision rule for the removable element starting at byte offset `position`:
// true iff, skipping whitespace and other removable elements, the text ends
// after it, and the nearest preceding kept non-whitespace character exists and
// is not already a sentence terminator (a period, ! or ?). Returns false when
// `position` is not inside a removable element.
bool is_sentence_end(std::string_view utf8, std::size_t position, const PreprocessConfig& cfg = {});

// Prefix of at most cfg.len_max tokens.
std::vector<std::int64_t> cap_tokens(std::span<const std::int64_t> token_ids, const PreprocessConfig& cfg = {});

// Prefix of at most `limit` code points (the tokenizer-free length cap).
std::string truncate_code_points(std::string_view utf8, std::size_t limit);

bool is_line_break(char32_t c);
bool is_pictograph(char32_t c);

namespace utf8 {
// Invalid sequences decode to U+FFFD, one per offending byte.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
}  // namespace utf8

}  // namespace loyalty
