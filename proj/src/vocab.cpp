#include "detmask/vocab.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "detmask/error.hpp"
#include "detmask/text.hpp"

namespace detmask {

namespace {
const std::vector<std::string> kSentinels = {"[PAD]", "[UNK]", "[MASK]"};
}

Vocabulary::Vocabulary() {
  tokens_ = kSentinels;
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    lookup_.emplace(tokens_[i], static_cast<TokenId>(i));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts) {
  std::set<std::string> seen;
  for (const auto& text : texts) {
    for (auto& tok : token_strings(text)) seen.insert(std::move(tok));
  }
  std::vector<std::string> tokens = kSentinels;
  for (const auto& tok : seen) {
    if (std::find(kSentinels.begin(), kSentinels.end(), tok) == kSentinels.end())
      tokens.push_back(tok);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  if (tokens.size() < kSentinels.size() ||
      !std::equal(kSentinels.begin(), kSentinels.end(), tokens.begin()))
    throw Error("vocabulary must start with [PAD], [UNK], [MASK]");
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.lookup_.clear();
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.lookup_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second)
      throw Error("duplicate vocabulary entry " + v.tokens_[i]);
  }
  return v;
}

Vocabulary Vocabulary::load(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocabulary::save(std::ostream& out) const {
  for (const auto& t : tokens_) out << t << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = lookup_.find(std::string(token));
  return it == lookup_.end() ? kUnknown : it->second;
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& tok : token_strings(text)) ids.push_back(id(tok));
  return ids;
}

}  // namespace detmask
