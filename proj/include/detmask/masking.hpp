#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "detmask/align.hpp"
#include "detmask/rng.hpp"
#include "detmask/text.hpp"
#include "detmask/vocab.hpp"

namespace detmask {

enum class Role : std::uint8_t { Other, SubjectClue, PredicateClue, Object };

enum class MaskScheme { RandomToken, WholeWord, SalientSpan, ObjectSpan, Deterministic };

enum class Variant { Plain, KeepClues, MaskClues, MaskRandom };

std::string_view to_string(MaskScheme scheme);
std::string_view to_string(Variant variant);
std::optional<MaskScheme> parse_scheme(std::string_view name);
std::optional<Variant> parse_variant(std::string_view name);

// Character spans that drive role tagging. `other_clues` are the clue spans
// of triplets whose object lies elsewhere in the paragraph.
struct SampleAnnotation {
  std::optional<Span> object;
  std::vector<Span> subject_clues;
  std::vector<Span> predicate_clues;
  std::vector<Span> other_clues;
  std::vector<Span> entities;
};

struct TokenizedSample {
  std::string doc_id;
  std::vector<TokenId> tokens;
  std::vector<Span> token_spans;
  std::vector<Role> roles;
  std::vector<bool> word_starts;
  // Other-role tokens inside `other_clues`; never drawn as random context.
  std::vector<bool> reserved;
  // Token ranges [first, last) fully covered by an entity span.
  std::vector<std::pair<std::size_t, std::size_t>> entity_ranges;
  // Whitespace-separated words in the object surface.
  std::size_t object_words = 0;

  std::size_t count(Role role) const;
  std::size_t clue_count() const {
    return count(Role::SubjectClue) + count(Role::PredicateClue);
  }
};

// Lowercased whitespace+punctuation tokens. A token takes a role only when it
// lies fully inside the corresponding span; Object wins over SubjectClue,
// which wins over PredicateClue.
TokenizedSample tokenize(std::string_view text, const Vocabulary& vocab,
                         const SampleAnnotation& annotation = {});

// One tokenized sample per distinct object span in a deterministic record. All
// subject/predicate spans of triplets sharing that object become clues.
std::vector<TokenizedSample> training_samples(const AlignedSample& sample,
                                              const Vocabulary& vocab);
TokenizedSample salient_sample(const SsmSample& sample, const Vocabulary& vocab);

struct MaskedSample {
  std::string doc_id;
  MaskScheme scheme = MaskScheme::Deterministic;
  Variant variant = Variant::Plain;
  std::vector<TokenId> input;
  std::vector<std::size_t> positions;  // ascending
  std::vector<TokenId> targets;

  friend bool operator==(const MaskedSample&, const MaskedSample&) = default;
};

// Original token sequence recovered from a masked sample.
std::vector<TokenId> unmask(const MaskedSample& sample);

MaskedSample apply_mask(const TokenizedSample& sample, MaskScheme scheme, Rng& rng);

struct ContrastivePair {
  MaskedSample keep;  // object masked, clues visible
  MaskedSample drop;  // object and every clue masked
};
ContrastivePair make_contrastive_pair(const TokenizedSample& sample);

struct ClassificationTriple {
  MaskedSample keep;     // (a)
  MaskedSample drop;     // (b)
  MaskedSample random;   // (c) object plus as many random context tokens as clues
};
ClassificationTriple make_classification_triple(const TokenizedSample& sample,
                                                Rng& rng);

}  // namespace detmask
