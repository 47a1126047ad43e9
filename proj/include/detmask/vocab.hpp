#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace detmask {

using TokenId = std::int32_t;

// Closed vocabulary over lowercased whitespace+punctuation tokens. Ids 0..2
// are the pad, unknown and mask sentinels; content tokens follow in
// lexicographic order.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnknown = 1;
  static constexpr TokenId kMask = 2;
  static constexpr TokenId kFirstContent = 3;

  Vocabulary();
  static Vocabulary build(std::span<const std::string> texts);
  // `tokens` is the full id-ordered list including the three sentinels.
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  static Vocabulary load(std::istream& in);
  void save(std::ostream& out) const;

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  static bool is_sentinel(TokenId id) { return id < kFirstContent; }

  std::vector<TokenId> encode(std::string_view text) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> lookup_;
};

}  // namespace detmask
