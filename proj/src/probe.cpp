#include "detmask/probe.hpp"

#include <algorithm>
#include <map>

#include "detmask/error.hpp"
#include "detmask/text.hpp"

namespace detmask {

namespace {

std::size_t occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size()))
    ++count;
  return count;
}

void finish(SplitMetrics& m) {
  m.accuracy = m.questions ? static_cast<double>(m.correct) / m.questions : 0.0;
  m.consistency = m.pairs ? static_cast<double>(m.agreeing_pairs) / m.pairs : 0.0;
  m.joint = m.facts ? static_cast<double>(m.joint_facts) / m.facts : 0.0;
}

}  // namespace

std::string_view to_string(RelationType type) {
  return type == RelationType::N1Or11 ? "N-1" : "N-M";
}

std::string ClozeQuestion::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

ClozeQuestion instantiate(const Template& tmpl, const Fact& fact,
                          std::size_t fact_index, std::size_t prompt_id) {
  const std::string_view pattern = tmpl.pattern;
  if (occurrences(pattern, "[X]") != 1 || occurrences(pattern, "[Y]") != 1)
    throw BadTemplate(tmpl.pattern);

  ClozeQuestion q;
  q.fact = fact_index;
  q.prompt_id = prompt_id;
  q.answer = token_strings(fact.object_surface);
  if (q.answer.empty()) throw Error("empty object surface for " + fact.triplet.object);

  std::string filled(pattern);
  filled.replace(filled.find("[X]"), 3, fact.subject_surface);
  const auto y = filled.find("[Y]");
  q.tokens = token_strings(std::string_view(filled).substr(0, y));
  for (std::size_t i = 0; i < q.answer.size(); ++i) {
    q.mask_positions.push_back(q.tokens.size());
    q.tokens.emplace_back(kMaskToken);
  }
  for (auto& t : token_strings(std::string_view(filled).substr(y + 3)))
    q.tokens.push_back(std::move(t));
  return q;
}

std::vector<ClozeQuestion> build_questions(std::span<const Template> templates,
                                           std::span<const Fact> facts) {
  std::vector<ClozeQuestion> out;
  for (std::size_t f = 0; f < facts.size(); ++f) {
    std::size_t prompt = 0;
    for (const auto& t : templates) {
      if (t.relation == facts[f].triplet.predicate)
        out.push_back(instantiate(t, facts[f], f, prompt++));
    }
  }
  return out;
}

LeakageSplit filter_leakage(std::vector<ClozeQuestion> questions) {
  LeakageSplit split;
  for (auto& q : questions) {
    const auto& a = q.answer;
    bool leaked = false;
    for (std::size_t i = 0; !leaked && i + a.size() <= q.tokens.size(); ++i)
      leaked = std::equal(a.begin(), a.end(), q.tokens.begin() + static_cast<long>(i));
    (leaked ? split.dropped : split.kept).push_back(std::move(q));
  }
  return split;
}

std::vector<Fact> split_questions(std::vector<Fact> facts, const KnowledgeBase& kb,
                                  const std::set<Triplet>& pretraining) {
  // predicate -> subject -> object count
  std::map<PredicateId, std::map<EntityId, std::size_t>> fanout;
  for (const auto& t : kb.triplets()) ++fanout[t.predicate][t.subject];
  std::map<PredicateId, RelationType> types;
  for (const auto& [p, subjects] : fanout) {
    const bool functional = std::all_of(subjects.begin(), subjects.end(),
                                        [](const auto& s) { return s.second == 1; });
    types[p] = functional ? RelationType::N1Or11 : RelationType::NM;
  }
  for (auto& f : facts) {
    f.in_domain = pretraining.contains(f.triplet);
    const auto it = types.find(f.triplet.predicate);
    f.relation_type = it == types.end() ? RelationType::N1Or11 : it->second;
  }
  return facts;
}

MetricsReport evaluate(std::span<const std::vector<std::string>> predictions,
                       std::span<const ClozeQuestion> questions,
                       std::span<const Fact> facts) {
  if (predictions.size() < questions.size()) throw MissingPrediction(predictions.size());

  std::vector<std::vector<std::size_t>> by_fact(facts.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (questions[i].fact >= facts.size())
      throw Error("question " + std::to_string(i) + " references an unknown fact");
    if (predictions[i].empty()) throw MissingPrediction(i);
    by_fact[questions[i].fact].push_back(i);
  }

  MetricsReport report;
  for (std::size_t f = 0; f < facts.size(); ++f) {
    const auto& qs = by_fact[f];
    if (qs.empty()) continue;

    SplitMetrics fact;
    fact.facts = 1;
    fact.questions = qs.size();
    std::map<std::vector<std::string>, std::size_t> groups;
    for (auto i : qs) {
      fact.correct += predictions[i] == questions[i].answer;
      ++groups[predictions[i]];
    }
    fact.pairs = qs.size() * (qs.size() - 1) / 2;
    for (const auto& [_, c] : groups) fact.agreeing_pairs += c * (c - 1) / 2;
    fact.joint_facts = fact.correct == fact.questions;

    auto add = [&](SplitMetrics& m) {
      m.facts += fact.facts;
      m.questions += fact.questions;
      m.correct += fact.correct;
      m.pairs += fact.pairs;
      m.agreeing_pairs += fact.agreeing_pairs;
      m.joint_facts += fact.joint_facts;
    };
    add(report.total);
    add(facts[f].in_domain ? report.in_domain : report.out_of_domain);
    add(facts[f].relation_type == RelationType::N1Or11 ? report.n1 : report.nm);
  }
  for (auto* m : {&report.total, &report.in_domain, &report.out_of_domain, &report.n1,
                  &report.nm})
    finish(*m);
  return report;
}

std::vector<std::vector<std::string>> predict_questions(
    const ModelState& state, const Vocabulary& vocab,
    std::span<const ClozeQuestion> questions, int threads) {
  std::vector<std::vector<std::string>> out(questions.size());
  std::vector<std::string> errors(questions.size());
  auto run = [&](std::size_t i) {
    try {
      std::vector<TokenId> ids;
      ids.reserve(questions[i].tokens.size());
      for (const auto& t : questions[i].tokens)
        ids.push_back(t == kMaskToken ? Vocabulary::kMask : vocab.id(t));
      for (auto id : predict_fill(state, ids)) out[i].push_back(vocab.token(id));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  const long n = static_cast<long>(questions.size());
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
  } else {
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
    for (long i = 0; i < n; ++i) run(static_cast<std::size_t>(i));
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty()) throw Error("question " + std::to_string(i) + ": " + errors[i]);
  return out;
}

}  // namespace detmask
