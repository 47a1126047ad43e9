#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "detmask/kb.hpp"
#include "detmask/text.hpp"

namespace detmask {

struct LinkedSpan {
  Span span;
  EntityId entity;

  friend bool operator==(const LinkedSpan&, const LinkedSpan&) = default;
};

struct Paragraph {
  std::string doc_id;
  std::string text;
  // Entity alignments supplied with the input (TREX style). When present the
  // dictionary linker is bypassed.
  std::optional<std::vector<LinkedSpan>> pre_linked;
};

struct PredicateMatch {
  Span span;
  std::size_t distance = 0;

  friend bool operator==(const PredicateMatch&, const PredicateMatch&) = default;
};

struct AlignedTriplet {
  Triplet triplet;
  Span subject_span;
  Span predicate_span;
  Span object_span;
  bool deterministic = false;
  std::size_t edit_distance = 0;

  friend bool operator==(const AlignedTriplet&, const AlignedTriplet&) = default;
};

struct AlignedSample {
  Paragraph paragraph;
  std::vector<LinkedSpan> entity_spans;
  // Deterministic triplets only, ordered by (object span, subject span,
  // predicate span, predicate id).
  std::vector<AlignedTriplet> aligned;
};

// Per-paragraph bookkeeping. A candidate is a distinct (s, p, o) connecting
// two linked spans in the knowledge base.
struct AlignCounters {
  std::size_t candidates = 0;
  std::size_t nondeterministic = 0;
  std::size_t unmatched_predicate = 0;

  AlignCounters& operator+=(const AlignCounters& o) {
    candidates += o.candidates;
    nondeterministic += o.nondeterministic;
    unmatched_predicate += o.unmatched_predicate;
    return *this;
  }
  friend bool operator==(const AlignCounters&, const AlignCounters&) = default;
};

struct ParagraphAlignment {
  AlignedSample sample;
  AlignCounters counters;
};

// Precomputed alias dictionaries over one knowledge base. Holds a reference
// to the KB, which must outlive it. All member functions are const and safe
// to call concurrently.
class Aligner {
 public:
  explicit Aligner(const KnowledgeBase& kb);

  const KnowledgeBase& kb() const { return kb_; }

  // Case-insensitive dictionary match on token boundaries, longest match
  // first, scanning left to right without overlap. Pre-linked spans are
  // returned verbatim.
  std::vector<LinkedSpan> link_entities(const Paragraph& paragraph) const;

  // Every token-aligned window within edit distance 1 of an alias of `p`,
  // sorted by (distance, begin, length). Windows are restricted to lengths
  // within one byte of the alias length.
  std::vector<PredicateMatch> predicate_windows(
      std::string_view lowered_text, std::span<const TextToken> tokens,
      PredicateIndex p) const;

  std::optional<PredicateMatch> match_predicate(std::string_view text,
                                                const PredicateId& p) const;

  ParagraphAlignment align(const Paragraph& paragraph) const;

 private:
  const KnowledgeBase& kb_;
  std::unordered_map<std::string, EntityIndex> entity_dictionary_;
  std::size_t max_alias_tokens_ = 0;
  std::vector<std::vector<std::string>> predicate_aliases_;  // lowercased
};

std::vector<LinkedSpan> link_entities(const Paragraph& paragraph,
                                      const KnowledgeBase& kb);
std::optional<PredicateMatch> match_predicate(std::string_view text,
                                              const PredicateId& p,
                                              const KnowledgeBase& kb);
ParagraphAlignment align_paragraph(const Paragraph& paragraph,
                                   const KnowledgeBase& kb);

// One distinct object span and the aligned triplets pointing at it.
struct ObjectGroup {
  Span object;
  std::vector<std::size_t> triplets;  // indices into AlignedSample::aligned
};
std::vector<ObjectGroup> object_groups(const AlignedSample& sample);

struct DatasetCounters {
  std::size_t paragraphs = 0;
  std::size_t bad_paragraphs = 0;
  std::size_t deterministic_paragraphs = 0;
  std::size_t ssm_paragraphs = 0;
  std::size_t emitted_triplets = 0;
  AlignCounters triplets;

  DatasetCounters& operator+=(const DatasetCounters& o);
  friend bool operator==(const DatasetCounters&, const DatasetCounters&) = default;
};

struct SsmSample {
  Paragraph paragraph;
  std::vector<LinkedSpan> entity_spans;
};

struct Dataset {
  std::vector<AlignedSample> deterministic;  // deterministic-only records
  std::vector<SsmSample> salient;            // records with linked entities
  DatasetCounters counters;
};

// In-memory alignment of a corpus; output order follows input order.
Dataset build_dataset(std::span<const Paragraph> corpus, const Aligner& aligner,
                      int threads = 1);

struct DatasetStats {
  std::size_t paragraph_count = 0;
  std::size_t sample_count = 0;
  double avg_tokens_per_paragraph = 0.0;
  double avg_clue_tokens = 0.0;
  double avg_object_tokens = 0.0;
  double nondeterministic_fraction = 0.0;
};

// Averages over deterministic records; a sample is one object group.
// Throws EmptyDataset.
DatasetStats compute_stats(std::span<const AlignedSample> deterministic,
                           const AlignCounters& counters);

}  // namespace detmask
