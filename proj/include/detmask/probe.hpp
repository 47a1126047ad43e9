#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detmask/kb.hpp"
#include "detmask/model.hpp"
#include "detmask/vocab.hpp"

namespace detmask {

struct Template {
  PredicateId relation;
  std::string pattern;  // exactly one "[X]" and one "[Y]"
};

enum class RelationType { N1Or11, NM };
std::string_view to_string(RelationType type);

struct Fact {
  Triplet triplet;
  std::string subject_surface;
  std::string object_surface;
  RelationType relation_type = RelationType::N1Or11;
  bool in_domain = false;
};

inline constexpr std::string_view kMaskToken = "[MASK]";

struct ClozeQuestion {
  std::size_t fact = 0;       // index into the fact list
  std::size_t prompt_id = 0;  // index among this fact's prompts
  std::vector<std::string> tokens;  // lowercased; "[MASK]" at mask positions
  std::vector<std::size_t> mask_positions;
  std::vector<std::string> answer;  // gold object tokens

  std::string text() const;
};

// [X] becomes the subject surface, [Y] a run of masks as long as the object's
// token count. Throws BadTemplate.
ClozeQuestion instantiate(const Template& tmpl, const Fact& fact,
                          std::size_t fact_index = 0, std::size_t prompt_id = 0);

// Every template of the fact's relation, prompt ids in template order.
std::vector<ClozeQuestion> build_questions(std::span<const Template> templates,
                                           std::span<const Fact> facts);

struct LeakageSplit {
  std::vector<ClozeQuestion> kept;
  std::vector<ClozeQuestion> dropped;
};
// Drops a question when its answer tokens appear contiguously in the prompt.
LeakageSplit filter_leakage(std::vector<ClozeQuestion> questions);

// in_domain iff the triplet is in `pretraining`; relation type from the
// subject -> object cardinality of the predicate across the KB.
std::vector<Fact> split_questions(std::vector<Fact> facts, const KnowledgeBase& kb,
                                  const std::set<Triplet>& pretraining);

struct SplitMetrics {
  double accuracy = 0.0;
  double consistency = 0.0;
  double joint = 0.0;
  std::size_t facts = 0;
  std::size_t questions = 0;
  std::size_t correct = 0;
  std::size_t pairs = 0;
  std::size_t agreeing_pairs = 0;
  std::size_t joint_facts = 0;
};

struct MetricsReport {
  SplitMetrics total;
  SplitMetrics in_domain;
  SplitMetrics out_of_domain;
  SplitMetrics n1;
  SplitMetrics nm;
};

// predictions[i] is the predicted token sequence for questions[i].
// Throws MissingPrediction.
MetricsReport evaluate(std::span<const std::vector<std::string>> predictions,
                       std::span<const ClozeQuestion> questions,
                       std::span<const Fact> facts);

// Greedy fill for every question, in question order.
std::vector<std::vector<std::string>> predict_questions(
    const ModelState& state, const Vocabulary& vocab,
    std::span<const ClozeQuestion> questions, int threads = 1);

}  // namespace detmask
