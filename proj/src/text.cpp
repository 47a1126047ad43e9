#include "detmask/text.hpp"

namespace detmask {

std::vector<TextToken> split_tokens(std::string_view text) {
  std::vector<TextToken> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= n) break;

    // One whitespace chunk.
    const std::size_t first = tokens.size();
    while (i < n && !is_space_byte(static_cast<unsigned char>(text[i]))) {
      TextToken tok;
      tok.span.begin = i;
      if (is_word_byte(static_cast<unsigned char>(text[i]))) {
        while (i < n && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
      } else {
        ++i;
        tok.punctuation = true;
      }
      tok.span.end = i;
      tokens.push_back(tok);
    }

    std::size_t lead = first;
    while (lead < tokens.size() && tokens[lead].punctuation) ++lead;
    std::size_t tail = tokens.size();
    while (tail > lead && tokens[tail - 1].punctuation) --tail;
    for (std::size_t t = first; t < tokens.size(); ++t) {
      tokens[t].word_start = t < lead || t >= tail || t == lead;
    }
  }
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> token_strings(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& tok : split_tokens(text)) {
    out.push_back(to_lower(text.substr(tok.span.begin, tok.span.size())));
  }
  return out;
}

std::size_t whitespace_word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = is_space_byte(static_cast<unsigned char>(c));
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space_byte(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && is_space_byte(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

}  // namespace detmask
