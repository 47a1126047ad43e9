#pragma once

#include <cstdint>
#include <vector>

#include "detmask/align.hpp"
#include "detmask/kb.hpp"
#include "detmask/probe.hpp"

namespace detmask::synth {

struct World {
  KnowledgeBase kb;
  std::vector<Paragraph> corpus;
  std::vector<Template> templates;
  std::vector<Fact> facts;
};

// Noisy world for alignment: multi-word and nested aliases, one- and
// two-character predicate typos, multi-valued predicates, filler text and a
// share of pre-linked paragraphs.
struct RandomWorldOptions {
  std::size_t entities = 60;
  std::size_t predicates = 5;
  std::size_t triplets = 300;
  std::size_t paragraphs = 50;
  std::size_t words_per_paragraph = 40;
  std::size_t facts_per_paragraph = 3;
  double multi_valued_share = 0.4;  // predicates allowed several objects
  double pre_linked_share = 0.2;
  double typo_share = 0.3;
  std::uint64_t seed = 1;
};
World make_random_world(const RandomWorldOptions& options);

// Clean functional world for training and probing: every subject has exactly
// one object per predicate; each fact is written into several paragraphs
// with varied frames and filler; 2-3 cloze templates per predicate.
struct FactWorldOptions {
  std::size_t subjects = 60;
  std::size_t objects_per_predicate = 13;
  std::size_t paragraphs_per_fact = 3;
  std::uint64_t seed = 1;
};
World make_fact_world(const FactWorldOptions& options);

}  // namespace detmask::synth
