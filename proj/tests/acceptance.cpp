// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "detmask/align.hpp"
#include "detmask/error.hpp"
#include "detmask/io.hpp"
#include "detmask/masking.hpp"
#include "detmask/model.hpp"
#include "detmask/pipeline.hpp"
#include "detmask/probe.hpp"
#include "detmask/synth.hpp"
#include "fixtures.hpp"
#include "model_fixtures.hpp"
#include "oracle.hpp"

using namespace detmask;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ------------------------------------------------------------ 1

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::size_t paragraphs = 0, records = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto world = fixtures::oracle_world(seed);
    if (world.corpus.size() > 100 || world.kb.triplets().size() > 500)
      return {false, "fixture " + std::to_string(seed) + " exceeds the size bounds"};
    const Aligner aligner(world.kb);
    const auto dataset = build_dataset(world.corpus, aligner);

    std::vector<AlignedSample> expected;
    AlignCounters expected_counters;
    for (const auto& p : world.corpus) {
      auto want = oracle::align(p, world.kb);
      auto got = aligner.align(p);
      if (got.sample.entity_spans != want.sample.entity_spans ||
          got.sample.aligned != want.sample.aligned || !(got.counters == want.counters))
        return {false, "seed " + std::to_string(seed) + " paragraph " + p.doc_id + " differs"};
      expected_counters += want.counters;
      if (!want.sample.aligned.empty()) expected.push_back(std::move(want.sample));
    }
    if (dataset.deterministic.size() != expected.size() ||
        !(dataset.counters.triplets == expected_counters))
      return {false, "seed " + std::to_string(seed) + " dataset differs"};
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (dataset.deterministic[i].paragraph.doc_id != expected[i].paragraph.doc_id ||
          dataset.deterministic[i].aligned != expected[i].aligned)
        return {false, "seed " + std::to_string(seed) + " record " + std::to_string(i)};
    }
    paragraphs += world.corpus.size();
    records += expected.size();
  }
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "50 fixtures, " << paragraphs << " paragraphs, " << records << " records, " << s << " s";
  return {s < 30.0, d.str()};
}

// ------------------------------------------------------------ 2

Outcome nondeterministic_fraction() {
  // 100 paragraphs, each naming one (subject, born_in, object) candidate; the
  // first 46 subjects have a second birthplace in the KB.
  std::vector<Triplet> triplets;
  AliasTable entities, predicates{{"born_in", {"born in"}}};
  std::vector<Paragraph> corpus;
  entities["X"] = {"Elsewhere"};
  for (int i = 0; i < 100; ++i) {
    const std::string s = "S" + std::to_string(i), o = "O" + std::to_string(i);
    entities[s] = {"person" + std::to_string(i)};
    entities[o] = {"town" + std::to_string(i)};
    triplets.push_back({s, "born_in", o});
    if (i < 46) triplets.push_back({s, "born_in", "X"});
    corpus.push_back({"p" + std::to_string(i),
                      "person" + std::to_string(i) + " was born in town" + std::to_string(i),
                      std::nullopt});
  }
  const auto kb = KnowledgeBase::from_parts(triplets, entities, predicates);
  const auto dataset = build_dataset(corpus, Aligner(kb));
  const auto stats = compute_stats(dataset.deterministic, dataset.counters.triplets);
  std::ostringstream d;
  d.precision(17);
  d << "fraction " << stats.nondeterministic_fraction << " over "
    << dataset.counters.triplets.candidates << " candidates";
  return {stats.nondeterministic_fraction == 0.46, d.str()};
}

// ------------------------------------------------------------ 3

// Random sample: an object run, clue tokens, reserved context, words of one
// or two tokens and a few entity ranges.
TokenizedSample random_sample(Rng& rng) {
  TokenizedSample s;
  const std::size_t words = 8 + uniform_below(rng, 30);
  for (std::size_t w = 0; w < words; ++w) {
    const std::size_t pieces = 1 + (uniform_below(rng, 4) == 0);
    for (std::size_t k = 0; k < pieces; ++k) {
      s.tokens.push_back(static_cast<TokenId>(Vocabulary::kFirstContent + uniform_below(rng, 200)));
      s.word_starts.push_back(k == 0);
    }
  }
  const std::size_t n = s.tokens.size();
  s.roles.assign(n, Role::Other);
  s.reserved.assign(n, false);
  // Object: 1-3 whole words starting at a random word.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i)
    if (s.word_starts[i]) starts.push_back(i);
  const std::size_t ow = 1 + uniform_below(rng, 3);
  const std::size_t first = uniform_below(rng, starts.size() - ow + 1);
  const std::size_t begin = starts[first];
  const std::size_t end = first + ow < starts.size() ? starts[first + ow] : n;
  for (std::size_t i = begin; i < end; ++i) s.roles[i] = Role::Object;
  s.object_words = ow;
  for (std::size_t i = 0; i < n; ++i) {
    if (s.roles[i] != Role::Other) continue;
    switch (uniform_below(rng, 8)) {
      case 0: s.roles[i] = Role::SubjectClue; break;
      case 1: s.roles[i] = Role::PredicateClue; break;
      case 2: s.reserved[i] = true; break;
      default: break;
    }
  }
  s.entity_ranges.emplace_back(begin, end);
  for (int e = 0; e < 2; ++e) {
    const std::size_t a = uniform_below(rng, n);
    s.entity_ranges.emplace_back(a, std::min(n, a + 1 + uniform_below(rng, 3)));
  }
  return s;
}

std::vector<std::size_t> with_role(const TokenizedSample& s, std::initializer_list<Role> roles) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.roles.size(); ++i)
    if (std::find(roles.begin(), roles.end(), s.roles[i]) != roles.end()) out.push_back(i);
  return out;
}

// Masked input equals the original outside `positions`, [MASK] inside, and
// targets hold the original tokens in position order.
bool consistent(const TokenizedSample& s, const MaskedSample& m) {
  if (m.input.size() != s.tokens.size() || m.targets.size() != m.positions.size()) return false;
  if (!std::is_sorted(m.positions.begin(), m.positions.end()) ||
      std::adjacent_find(m.positions.begin(), m.positions.end()) != m.positions.end())
    return false;
  std::vector<bool> masked(s.tokens.size(), false);
  for (std::size_t k = 0; k < m.positions.size(); ++k) {
    const auto p = m.positions[k];
    if (p >= s.tokens.size() || m.targets[k] != s.tokens[p]) return false;
    masked[p] = true;
  }
  for (std::size_t i = 0; i < s.tokens.size(); ++i)
    if (m.input[i] != (masked[i] ? Vocabulary::kMask : s.tokens[i])) return false;
  return unmask(m) == s.tokens;
}

Outcome masking_parity() {
  Rng rng(2024);
  std::size_t failures = 0, skipped = 0;
  std::string first;
  auto fail = [&](std::size_t i, const char* what) {
    if (!failures++) first = "sample " + std::to_string(i) + ": " + what;
  };
  for (std::size_t i = 0; i < 10000; ++i) {
    const auto s = random_sample(rng);
    const auto objects = with_role(s, {Role::Object});
    const auto object_and_clues = with_role(s, {Role::Object, Role::SubjectClue, Role::PredicateClue});
    auto mrng = stream_for(99, i);

    const auto det = apply_mask(s, MaskScheme::Deterministic, mrng);
    if (!consistent(s, det) || det.positions != objects) fail(i, "deterministic");
    const auto obj = apply_mask(s, MaskScheme::ObjectSpan, mrng);
    if (obj.positions != det.positions) fail(i, "object-span");

    const auto rt = apply_mask(s, MaskScheme::RandomToken, mrng);
    if (!consistent(s, rt) || rt.positions.size() != objects.size()) fail(i, "random-token");

    const auto ww = apply_mask(s, MaskScheme::WholeWord, mrng);
    std::size_t word_count = 0;
    bool whole = consistent(s, ww);
    for (std::size_t k = 0; whole && k < ww.positions.size(); ++k) {
      const auto p = ww.positions[k];
      if (s.word_starts[p]) {
        ++word_count;
      } else if (k == 0 || ww.positions[k - 1] != p - 1) {
        whole = false;
      }
      const bool next_continues = p + 1 < s.tokens.size() && !s.word_starts[p + 1];
      if (next_continues && (k + 1 == ww.positions.size() || ww.positions[k + 1] != p + 1))
        whole = false;
    }
    if (!whole || word_count != s.object_words) fail(i, "whole-word");

    const auto ss = apply_mask(s, MaskScheme::SalientSpan, mrng);
    bool is_range = consistent(s, ss) && !ss.positions.empty();
    if (is_range) {
      const std::pair<std::size_t, std::size_t> r{ss.positions.front(), ss.positions.back() + 1};
      is_range = r.second - r.first == ss.positions.size() &&
                 std::find(s.entity_ranges.begin(), s.entity_ranges.end(), r) !=
                     s.entity_ranges.end();
    }
    if (!is_range) fail(i, "salient-span");

    if (object_and_clues.size() == objects.size()) {
      ++skipped;
      continue;
    }
    std::size_t free_context = 0;
    for (std::size_t t = 0; t < s.roles.size(); ++t)
      free_context += s.roles[t] == Role::Other && !s.reserved[t];
    if (free_context < s.clue_count()) {
      ++skipped;
      continue;
    }
    const auto triple = make_classification_triple(s, mrng);
    if (!consistent(s, triple.keep) || triple.keep.positions != objects) fail(i, "keep");
    if (!consistent(s, triple.drop) || triple.drop.positions != object_and_clues) fail(i, "drop");
    bool random_ok = consistent(s, triple.random) &&
                     triple.random.positions.size() == triple.drop.positions.size();
    for (auto p : triple.random.positions) {
      const bool object = s.roles[p] == Role::Object;
      random_ok = random_ok && (object || (s.roles[p] == Role::Other && !s.reserved[p]));
    }
    random_ok = random_ok && std::includes(triple.random.positions.begin(),
                                           triple.random.positions.end(), objects.begin(),
                                           objects.end());
    if (!random_ok) fail(i, "random");
  }
  std::ostringstream d;
  d << "10000 samples, " << failures << " violations, " << skipped
    << " without a classification triple";
  if (failures) d << "; first: " << first;
  return {failures == 0, d.str()};
}

// ------------------------------------------------------------ 4

Outcome gradient_check() {
  const auto t0 = Clock::now();
  ModelConfig c;
  c.vocab_size = 50;
  c.d = 8;
  c.hidden = 16;
  c.max_len = 32;
  c.seed = 3;
  auto state = init(c);
  Rng rng(17);
  for (auto& p : state.params) p += 0.4 * (uniform_unit(rng) - 0.5);
  const auto batch = fixtures::random_triples(4, 50, 32, 18);

  std::ostringstream d;
  d << std::scientific;
  bool ok = true;
  const std::pair<const char*, LossWeights> components[] = {
      {"L_mlm", {1, 0, 0}}, {"L_con", {0, 1, 0}}, {"L_cls", {0, 0, 1}}, {"L_total", {1, 1, 1}}};
  for (const auto& [name, w] : components) {
    const auto r = finite_diff_check(state, batch, w, 1e-5, 400, 5);
    ok = ok && r.max_relative_error < 1e-4;
    d << name << " " << r.max_relative_error << " (" << r.coordinates << " coords) ";
  }
  const double s = seconds_since(t0);
  d << std::defaultfloat << s << " s";
  return {ok && s < 60.0, d.str()};
}

// ------------------------------------------------------------ 5, 6

struct AuxResult {
  double keep_wins = 0.0;
  double classifier = 0.0;
  std::size_t facts = 0, train = 0, held = 0;
  double seconds = 0.0;
};

AuxResult auxiliary_objectives() {
  const auto t0 = Clock::now();
  synth::FactWorldOptions fo;
  fo.subjects = 67;
  fo.seed = 1;
  const auto world = synth::make_fact_world(fo);
  const Aligner aligner(world.kb);
  std::vector<std::string> texts;
  for (const auto& p : world.corpus) texts.push_back(p.text);
  const auto vocab = Vocabulary::build(texts);

  // Every fact is written into several paragraphs; one of them is held out.
  std::vector<TrainingExample> train_set, held;
  std::size_t g = 0;
  for (const auto& p : world.corpus) {
    const auto aligned = aligner.align(p).sample;
    for (const auto& t : training_samples(aligned, vocab)) {
      auto rng = stream_for(1, g++);
      try {
        auto tr = make_classification_triple(t, rng);
        TrainingExample ex{tr.keep, tr.drop, tr.random};
        (p.doc_id.ends_with("_p2") ? held : train_set).push_back(std::move(ex));
      } catch (const Error&) {
      }
    }
  }

  ModelConfig c;
  c.vocab_size = vocab.size();
  c.d = 32;
  c.hidden = 64;
  c.max_len = 32;
  c.seed = 1;
  c.lambda_con = 1.0;
  c.lambda_cls = 1.0;
  TrainOptions o;
  o.steps = 4000;
  o.lr = 0.2;
  o.batch_size = 8;
  const auto state = train(c, train_set, o);

  std::size_t wins = 0, cls_ok = 0, cls_n = 0;
  for (const auto& ex : held) {
    const auto fk = forward(state, ex.keep.input);
    const auto fd = forward(state, ex.drop->input);
    const auto fr = forward(state, ex.random->input);
    wins += avg_truth_prob(fk, ex.keep.positions, ex.keep.targets) >
            avg_truth_prob(fd, ex.keep.positions, ex.keep.targets);
    const ForwardOutput* outs[3] = {&fk, &fd, &fr};
    for (std::size_t v = 0; v < 3; ++v) {
      for (auto pos : ex.keep.positions) {
        const auto y = classify(state, *outs[v], pos);
        cls_ok += static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin()) == v;
        ++cls_n;
      }
    }
  }
  AuxResult r;
  r.keep_wins = held.empty() ? 0.0 : static_cast<double>(wins) / held.size();
  r.classifier = cls_n ? static_cast<double>(cls_ok) / cls_n : 0.0;
  r.facts = world.facts.size();
  r.train = train_set.size();
  r.held = held.size();
  r.seconds = seconds_since(t0);
  return r;
}

// ------------------------------------------------------------ 7

struct ProbeScores {
  double deterministic = 0.0;
  double random_token = 0.0;
};

ProbeScores consistency_gap(std::uint64_t seed) {
  synth::FactWorldOptions fo;
  fo.subjects = 60;
  fo.seed = seed;
  const auto world = synth::make_fact_world(fo);
  const Aligner aligner(world.kb);
  std::vector<AlignedSample> samples;
  std::vector<std::string> texts;
  for (const auto& p : world.corpus) {
    auto aligned = aligner.align(p).sample;
    if (!aligned.aligned.empty()) samples.push_back(std::move(aligned));
    texts.push_back(p.text);
  }
  for (const auto& t : world.templates) texts.push_back(t.pattern);
  const auto vocab = Vocabulary::build(texts);
  const auto questions = filter_leakage(build_questions(world.templates, world.facts)).kept;

  ProbeScores scores;
  for (const auto scheme : {MaskScheme::Deterministic, MaskScheme::RandomToken}) {
    std::vector<TrainingExample> data;
    std::size_t g = 0;
    for (const auto& s : samples) {
      for (const auto& t : training_samples(s, vocab)) {
        auto rng = stream_for(seed, g++);
        data.push_back({apply_mask(t, scheme, rng), std::nullopt, std::nullopt});
      }
    }
    ModelConfig c;
    c.vocab_size = vocab.size();
    c.d = 32;
    c.hidden = 64;
    c.max_len = 32;
    c.seed = seed;
    c.lambda_con = 0.0;
    c.lambda_cls = 0.0;
    TrainOptions o;
    o.steps = 8000;
    o.lr = 0.2;
    o.batch_size = 16;
    const auto state = train(c, data, o);
    const auto report = evaluate(predict_questions(state, vocab, questions), questions, world.facts);
    (scheme == MaskScheme::Deterministic ? scores.deterministic : scores.random_token) =
        report.total.consistency;
  }
  return scores;
}

Outcome consistency_comparison() {
  const auto t0 = Clock::now();
  std::vector<double> gaps;
  std::ostringstream d;
  d.precision(3);
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s = consistency_gap(seed);
    gaps.push_back(s.deterministic - s.random_token);
    d << "seed " << seed << ": " << s.deterministic << " vs " << s.random_token << "; ";
  }
  std::sort(gaps.begin(), gaps.end());
  const double s = seconds_since(t0);
  d << "median gap " << gaps[1] << ", " << s << " s";
  return {gaps[1] >= 0.05 && s < 600.0, d.str()};
}

// ------------------------------------------------------------ 8

struct EvalCase {
  std::vector<std::vector<std::string>> per_fact;  // answer is always "a"
  double accuracy, consistency, joint;
};

Outcome evaluate_fixtures() {
  const std::vector<EvalCase> cases{
      {{{"a", "a", "a"}, {"a", "b", "b"}}, 4.0 / 6, 4.0 / 6, 0.5},
      {{{"a"}}, 1.0, 0.0, 1.0},
      {{{"b"}}, 0.0, 0.0, 0.0},
      {{{"a", "a"}}, 1.0, 1.0, 1.0},
      {{{"a", "b"}}, 0.5, 0.0, 0.0},
      {{{"b", "b"}}, 0.0, 1.0, 0.0},
      {{{"b", "c"}}, 0.0, 0.0, 0.0},
      {{{"a", "a", "b"}}, 2.0 / 3, 1.0 / 3, 0.0},
      {{{"b", "b", "b"}}, 0.0, 1.0, 0.0},
      {{{"a", "b", "c"}}, 1.0 / 3, 0.0, 0.0},
      {{{"a", "a", "a", "a"}}, 1.0, 1.0, 1.0},
      {{{"a", "a", "b", "b"}}, 0.5, 2.0 / 6, 0.0},
      {{{"a", "b", "b", "b"}}, 0.25, 3.0 / 6, 0.0},
      {{{"a"}, {"b"}}, 0.5, 0.0, 0.5},
      {{{"a", "a"}, {"b", "b"}}, 0.5, 1.0, 0.5},
      {{{"a", "a"}, {"a", "b"}}, 0.75, 0.5, 0.5},
      {{{"a"}, {"a", "a", "a"}}, 1.0, 1.0, 1.0},
      {{{"b"}, {"a", "b", "c"}}, 0.25, 0.0, 0.0},
      {{{"a", "a", "a"}, {"b", "c"}, {"a"}}, 4.0 / 6, 3.0 / 4, 2.0 / 3},
      {{{"c", "c", "b"}, {"a", "a", "a", "b"}}, 3.0 / 7, 4.0 / 9, 0.0},
      {{{"a", "b"}, {"b", "a"}, {"a", "a"}}, 4.0 / 6, 1.0 / 3, 1.0 / 3},
      {{{"b", "b", "b", "b", "b"}, {"a", "a"}}, 2.0 / 7, 1.0, 0.5},
  };
  std::size_t failed = 0;
  std::string first;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    std::vector<Fact> facts;
    std::vector<ClozeQuestion> questions;
    std::vector<std::vector<std::string>> predictions;
    for (std::size_t f = 0; f < cases[k].per_fact.size(); ++f) {
      facts.push_back({{"s" + std::to_string(f), "p", "a"}, "s", "a"});
      for (const auto& pred : cases[k].per_fact[f]) {
        ClozeQuestion q;
        q.fact = f;
        q.tokens = {"s", "[MASK]"};
        q.mask_positions = {1};
        q.answer = {"a"};
        questions.push_back(q);
        predictions.push_back({pred});
      }
    }
    const auto r = evaluate(predictions, questions, facts).total;
    auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
    if (!near(r.accuracy, cases[k].accuracy) || !near(r.consistency, cases[k].consistency) ||
        !near(r.joint, cases[k].joint)) {
      if (!failed++) {
        std::ostringstream d;
        d << "case " << k << " got " << r.accuracy << "/" << r.consistency << "/" << r.joint;
        first = d.str();
      }
    }
  }
  std::string detail = std::to_string(cases.size()) + " fixtures, " + std::to_string(failed) +
                       " mismatches";
  if (failed) detail += "; " + first;
  return {failed == 0 && cases.size() >= 20, detail};
}

// ------------------------------------------------------------ 9

Outcome alignment_throughput() {
  synth::RandomWorldOptions o;
  o.paragraphs = 10000;
  o.triplets = 10000;
  o.entities = 2500;
  o.predicates = 24;
  o.words_per_paragraph = 170;
  o.facts_per_paragraph = 6;
  o.seed = 7;
  const auto world = synth::make_random_world(o);
  std::vector<std::string> lines;
  std::size_t tokens = 0;
  for (const auto& p : world.corpus) {
    lines.push_back(io::paragraph_line(p));
    tokens += split_tokens(p.text).size();
  }
  const Aligner aligner(world.kb);

  auto t0 = Clock::now();
  const auto serial = align_lines_serial(lines, aligner);
  const double serial_s = seconds_since(t0);
  const auto parallel = align_lines_parallel(lines, aligner, 4);

  std::string a, b;
  std::size_t records = 0;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    a += serial[i].samples_line + '\n' + serial[i].ssm_line + '\n' + serial[i].error + '\n';
    records += !serial[i].samples_line.empty();
  }
  for (const auto& l : parallel) b += l.samples_line + '\n' + l.ssm_line + '\n' + l.error + '\n';

  std::ostringstream d;
  d << lines.size() << " paragraphs x " << tokens / lines.size() << " tokens, "
    << world.kb.triplets().size() << " triplets, " << records << " records, serial "
    << serial_s << " s, 4 threads " << (a == b ? "identical" : "DIFFERENT");
  return {serial_s < 60.0 && a == b && world.kb.triplets().size() >= 10000 &&
              tokens / lines.size() >= 140,
          d.str()};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& r) {
    std::cout << "criterion " << n << " " << name << ": " << (r.pass ? "PASS" : "FAIL") << " ("
              << r.detail << ")" << std::endl;
    failures += !r.pass;
  };
  auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "alignment matches brute-force oracle", guarded(oracle_equivalence));
  report(2, "non-deterministic fraction", guarded(nondeterministic_fraction));
  report(3, "masking scheme contracts", guarded(masking_parity));
  report(4, "gradient check", guarded(gradient_check));

  AuxResult aux;
  std::string aux_error;
  try {
    aux = auxiliary_objectives();
  } catch (const std::exception& e) {
    aux_error = e.what();
  }
  {
    std::ostringstream d;
    d.precision(3);
    d << aux.keep_wins << " of " << aux.held << " held-out triples, " << aux.facts << " facts, "
      << aux.train << " training triples, " << aux.seconds << " s" << aux_error;
    report(5, "keep beats drop on held-out triples",
           {aux_error.empty() && aux.keep_wins >= 0.9 && aux.held > 0, d.str()});
  }
  {
    std::ostringstream d;
    d.precision(3);
    d << "accuracy " << aux.classifier << aux_error;
    report(6, "held-out variant classifier", {aux_error.empty() && aux.classifier >= 0.9, d.str()});
  }
  report(7, "deterministic masking improves consistency", guarded(consistency_comparison));
  report(8, "evaluate on crafted fixtures", guarded(evaluate_fixtures));
  report(9, "alignment throughput and thread determinism", guarded(alignment_throughput));

  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
