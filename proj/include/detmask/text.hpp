#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace detmask {

// Byte range [begin, end) into a UTF-8 string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(const Span& other) const {
    return begin <= other.begin && other.end <= end;
  }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  friend auto operator<=>(const Span&, const Span&) = default;
};

// A token produced by the whitespace+punctuation splitter. Word characters
// are ASCII alphanumerics and every byte >= 0x80, so multibyte UTF-8
// sequences stay inside one token. Any other non-space byte is a single
// punctuation token.
struct TextToken {
  Span span;
  bool word_start = false;
  bool punctuation = false;
};

// Splits text into tokens. A word is a whitespace-delimited chunk with its
// leading and trailing punctuation peeled off into one-token words of their
// own; "War Horse." yields three words, "don't" yields one word of three
// tokens.
std::vector<TextToken> split_tokens(std::string_view text);

// ASCII lowercase; bytes >= 0x80 pass through unchanged.
std::string to_lower(std::string_view text);

// Lowercased token strings.
std::vector<std::string> token_strings(std::string_view text);

// Number of whitespace-separated chunks.
std::size_t whitespace_word_count(std::string_view text);

inline bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string_view trim(std::string_view text);

}  // namespace detmask
