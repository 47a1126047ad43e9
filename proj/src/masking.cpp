#include "detmask/masking.hpp"

#include <algorithm>
#include <array>

#include "detmask/error.hpp"

namespace detmask {

namespace {

constexpr std::array<std::pair<MaskScheme, std::string_view>, 5> kSchemeNames{{
    {MaskScheme::RandomToken, "random-token"},
    {MaskScheme::WholeWord, "whole-word"},
    {MaskScheme::SalientSpan, "salient-span"},
    {MaskScheme::ObjectSpan, "object-span"},
    {MaskScheme::Deterministic, "deterministic"},
}};

constexpr std::array<std::pair<Variant, std::string_view>, 4> kVariantNames{{
    {Variant::Plain, "plain"},
    {Variant::KeepClues, "keep-clues"},
    {Variant::MaskClues, "mask-clues"},
    {Variant::MaskRandom, "mask-random"},
}};

bool inside_any(const std::vector<Span>& spans, const Span& tok) {
  return std::any_of(spans.begin(), spans.end(),
                     [&](const Span& s) { return s.contains(tok); });
}

MaskedSample mask_positions(const TokenizedSample& sample, MaskScheme scheme,
                            Variant variant, std::vector<std::size_t> positions) {
  std::sort(positions.begin(), positions.end());
  positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
  MaskedSample out;
  out.doc_id = sample.doc_id;
  out.scheme = scheme;
  out.variant = variant;
  out.input = sample.tokens;
  out.positions = std::move(positions);
  out.targets.reserve(out.positions.size());
  for (auto p : out.positions) {
    out.targets.push_back(sample.tokens[p]);
    out.input[p] = Vocabulary::kMask;
  }
  return out;
}

std::vector<std::size_t> positions_with(const TokenizedSample& sample,
                                        std::initializer_list<Role> roles) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < sample.roles.size(); ++i) {
    if (std::find(roles.begin(), roles.end(), sample.roles[i]) != roles.end())
      out.push_back(i);
  }
  return out;
}

}  // namespace

std::string_view to_string(MaskScheme scheme) {
  for (const auto& [s, name] : kSchemeNames)
    if (s == scheme) return name;
  return "unknown";
}

std::string_view to_string(Variant variant) {
  for (const auto& [v, name] : kVariantNames)
    if (v == variant) return name;
  return "unknown";
}

std::optional<MaskScheme> parse_scheme(std::string_view name) {
  for (const auto& [s, n] : kSchemeNames)
    if (n == name) return s;
  return std::nullopt;
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (const auto& [v, n] : kVariantNames)
    if (n == name) return v;
  return std::nullopt;
}

std::size_t TokenizedSample::count(Role role) const {
  return static_cast<std::size_t>(std::count(roles.begin(), roles.end(), role));
}

TokenizedSample tokenize(std::string_view text, const Vocabulary& vocab,
                         const SampleAnnotation& annotation) {
  TokenizedSample out;
  const auto tokens = split_tokens(text);
  out.tokens.reserve(tokens.size());
  for (const auto& tok : tokens) {
    out.tokens.push_back(vocab.id(to_lower(text.substr(tok.span.begin, tok.span.size()))));
    out.token_spans.push_back(tok.span);
    out.word_starts.push_back(tok.word_start);

    Role role = Role::Other;
    if (annotation.object && annotation.object->contains(tok.span)) {
      role = Role::Object;
    } else if (inside_any(annotation.subject_clues, tok.span)) {
      role = Role::SubjectClue;
    } else if (inside_any(annotation.predicate_clues, tok.span)) {
      role = Role::PredicateClue;
    }
    out.roles.push_back(role);
    out.reserved.push_back(role == Role::Other &&
                           inside_any(annotation.other_clues, tok.span));
  }

  for (const auto& entity : annotation.entities) {
    std::size_t first = tokens.size(), last = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (entity.contains(tokens[i].span)) {
        first = std::min(first, i);
        last = i + 1;
      }
    }
    if (first < last) out.entity_ranges.emplace_back(first, last);
  }

  if (annotation.object) {
    out.object_words = whitespace_word_count(
        text.substr(annotation.object->begin, annotation.object->size()));
  }
  return out;
}

std::vector<TokenizedSample> training_samples(const AlignedSample& sample,
                                              const Vocabulary& vocab) {
  std::vector<TokenizedSample> out;
  for (const auto& group : object_groups(sample)) {
    SampleAnnotation annotation;
    annotation.object = group.object;
    for (std::size_t i = 0; i < sample.aligned.size(); ++i) {
      const auto& a = sample.aligned[i];
      if (std::find(group.triplets.begin(), group.triplets.end(), i) !=
          group.triplets.end()) {
        annotation.subject_clues.push_back(a.subject_span);
        annotation.predicate_clues.push_back(a.predicate_span);
      } else {
        annotation.other_clues.push_back(a.subject_span);
        annotation.other_clues.push_back(a.predicate_span);
      }
    }
    for (const auto& e : sample.entity_spans) annotation.entities.push_back(e.span);
    auto tokenized = tokenize(sample.paragraph.text, vocab, annotation);
    tokenized.doc_id = sample.paragraph.doc_id;
    out.push_back(std::move(tokenized));
  }
  return out;
}

TokenizedSample salient_sample(const SsmSample& sample, const Vocabulary& vocab) {
  SampleAnnotation annotation;
  for (const auto& e : sample.entity_spans) annotation.entities.push_back(e.span);
  auto tokenized = tokenize(sample.paragraph.text, vocab, annotation);
  tokenized.doc_id = sample.paragraph.doc_id;
  return tokenized;
}

std::vector<TokenId> unmask(const MaskedSample& sample) {
  auto tokens = sample.input;
  for (std::size_t i = 0; i < sample.positions.size(); ++i)
    tokens[sample.positions[i]] = sample.targets[i];
  return tokens;
}

MaskedSample apply_mask(const TokenizedSample& sample, MaskScheme scheme, Rng& rng) {
  const auto objects = positions_with(sample, {Role::Object});
  switch (scheme) {
    case MaskScheme::Deterministic:
    case MaskScheme::ObjectSpan:
      if (objects.empty()) throw NoMaskableContent(std::string(to_string(scheme)));
      return mask_positions(sample, scheme, Variant::Plain, objects);

    case MaskScheme::RandomToken: {
      if (objects.empty()) throw NoMaskableContent(std::string(to_string(scheme)));
      return mask_positions(sample, scheme, Variant::Plain,
                            choose_sorted(rng, sample.tokens.size(), objects.size()));
    }

    case MaskScheme::WholeWord: {
      std::vector<std::size_t> word_begins;
      for (std::size_t i = 0; i < sample.word_starts.size(); ++i)
        if (sample.word_starts[i]) word_begins.push_back(i);
      const std::size_t k = sample.object_words;
      if (k == 0 || k > word_begins.size())
        throw NoMaskableContent(std::string(to_string(scheme)));
      std::vector<std::size_t> positions;
      for (auto w : choose_sorted(rng, word_begins.size(), k)) {
        const std::size_t end =
            w + 1 < word_begins.size() ? word_begins[w + 1] : sample.tokens.size();
        for (std::size_t t = word_begins[w]; t < end; ++t) positions.push_back(t);
      }
      return mask_positions(sample, scheme, Variant::Plain, std::move(positions));
    }

    case MaskScheme::SalientSpan: {
      if (sample.entity_ranges.empty())
        throw NoMaskableContent(std::string(to_string(scheme)));
      const auto& [first, last] =
          sample.entity_ranges[uniform_below(rng, sample.entity_ranges.size())];
      std::vector<std::size_t> positions;
      for (std::size_t t = first; t < last; ++t) positions.push_back(t);
      return mask_positions(sample, scheme, Variant::Plain, std::move(positions));
    }
  }
  throw NoMaskableContent("unknown");
}

ContrastivePair make_contrastive_pair(const TokenizedSample& sample) {
  const auto objects = positions_with(sample, {Role::Object});
  if (objects.empty()) throw NoMaskableContent("deterministic");
  const auto with_clues =
      positions_with(sample, {Role::Object, Role::SubjectClue, Role::PredicateClue});
  if (with_clues.size() == objects.size()) throw NoClues();
  return {mask_positions(sample, MaskScheme::Deterministic, Variant::KeepClues, objects),
          mask_positions(sample, MaskScheme::Deterministic, Variant::MaskClues,
                         with_clues)};
}

ClassificationTriple make_classification_triple(const TokenizedSample& sample,
                                                Rng& rng) {
  auto [keep, drop] = make_contrastive_pair(sample);
  const std::size_t clues = sample.clue_count();

  std::vector<std::size_t> context;
  for (std::size_t i = 0; i < sample.roles.size(); ++i) {
    if (sample.roles[i] == Role::Other && !sample.reserved[i]) context.push_back(i);
  }
  if (context.size() < clues) throw InsufficientContext(context.size(), clues);

  auto positions = positions_with(sample, {Role::Object});
  for (auto c : choose_sorted(rng, context.size(), clues))
    positions.push_back(context[c]);
  auto random =
      mask_positions(sample, MaskScheme::Deterministic, Variant::MaskRandom, positions);
  return {std::move(keep), std::move(drop), std::move(random)};
}

}  // namespace detmask
