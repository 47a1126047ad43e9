#include "detmask/synth.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>

#include "detmask/rng.hpp"

namespace detmask::synth {

namespace {

constexpr std::array<const char*, 24> kSyllables = {
    "ka", "ro", "mi", "tel", "van", "dor", "sa", "lin", "pe", "quo", "zu", "bri",
    "nal", "fen", "gor", "hil", "jas", "ket", "lum", "mor", "vex", "tra", "osk", "ury"};

constexpr std::array<const char*, 28> kFiller = {
    "the",     "records", "show",   "that",   "in",      "year",   "early",
    "later",   "sources", "it",     "is",     "known",   "widely", "reported",
    "local",   "archive", "notes",  "during", "season",  "with",   "many",
    "friends", "as",      "a",      "result", "quietly", "then",   "also"};

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

// Distinct lowercase words of `syllables` syllables each, in seeded order.
std::vector<std::string> word_pool(Rng& rng, std::size_t count, std::size_t syllables) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  while (out.size() < count) {
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) w += kSyllables[uniform_below(rng, kSyllables.size())];
    if (seen.insert(w).second) out.push_back(w);
  }
  return out;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform_below(rng, v.size())];
}

std::string typo(Rng& rng, std::string s, std::size_t edits) {
  for (std::size_t e = 0; e < edits; ++e) {
    std::vector<std::size_t> letters;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= 'a' && s[i] <= 'z') letters.push_back(i);
    if (letters.size() < 2) break;
    const auto at = letters[uniform_below(rng, letters.size())];
    const char c = static_cast<char>('a' + uniform_below(rng, 26));
    switch (uniform_below(rng, 3)) {
      case 0: s[at] = c; break;
      case 1: s.erase(at, 1); break;
      default: s.insert(at, 1, c); break;
    }
  }
  return s;
}

// Builds paragraph text word by word and records entity mention spans.
struct TextBuilder {
  std::string text;
  std::vector<LinkedSpan> mentions;

  void word(const std::string& w) {
    if (!text.empty()) text += ' ';
    text += w;
  }
  void punct(char c) { text += c; }
  void mention(const std::string& surface, const EntityId& id) {
    if (!text.empty()) text += ' ';
    const std::size_t begin = text.size();
    text += surface;
    mentions.push_back({{begin, text.size()}, id});
  }
  void filler(Rng& rng, std::size_t lo, std::size_t hi) {
    const std::size_t n = lo + uniform_below(rng, hi - lo + 1);
    for (std::size_t i = 0; i < n; ++i) word(kFiller[uniform_below(rng, kFiller.size())]);
  }
};

std::string case_variant(Rng& rng, const std::string& s) {
  switch (uniform_below(rng, 4)) {
    case 0: return to_lower(s);
    default: return s;
  }
}

}  // namespace

World make_random_world(const RandomWorldOptions& o) {
  Rng rng(splitmix64(o.seed));
  const auto words = word_pool(rng, o.entities * 3 + o.predicates * 6 + 16, 3);
  std::size_t next_word = 0;
  auto fresh = [&] { return words[next_word++ % words.size()]; };

  AliasTable entities;
  std::vector<EntityId> entity_ids;
  std::vector<std::string> canonical;
  for (std::size_t i = 0; i < o.entities; ++i) {
    std::string name;
    if (!canonical.empty() && uniform_below(rng, 100) < 15) {
      // Nested alias: extends an earlier name by one word.
      name = pick(rng, canonical) + " " + capitalize(fresh());
    } else {
      const std::size_t n = 1 + uniform_below(rng, 2);
      for (std::size_t w = 0; w < n; ++w) name += (w ? " " : "") + capitalize(fresh());
    }
    std::vector<std::string> aliases{name};
    if (uniform_below(rng, 100) < 30) aliases.push_back(capitalize(fresh()));
    const auto id = "E" + std::to_string(i);
    entities[id] = aliases;
    entity_ids.push_back(id);
    canonical.push_back(name);
  }

  AliasTable predicates;
  std::vector<PredicateId> predicate_ids;
  std::set<PredicateId> multi;
  for (std::size_t i = 0; i < o.predicates; ++i) {
    std::vector<std::string> aliases;
    const std::size_t n = 1 + uniform_below(rng, 2);
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t len = 1 + uniform_below(rng, 2);
      std::string alias;
      for (std::size_t w = 0; w < len; ++w) alias += (w ? " " : "") + fresh();
      aliases.push_back(alias);
    }
    const auto id = "R" + std::to_string(i);
    predicates[id] = aliases;
    predicate_ids.push_back(id);
    if (static_cast<double>(i) < o.multi_valued_share * static_cast<double>(o.predicates))
      multi.insert(id);
  }

  std::set<Triplet> triplets;
  std::set<std::pair<EntityId, PredicateId>> functional_used;
  for (std::size_t attempt = 0; triplets.size() < o.triplets && attempt < o.triplets * 20;
       ++attempt) {
    const auto& p = pick(rng, predicate_ids);
    const auto& s = pick(rng, entity_ids);
    const auto& obj = pick(rng, entity_ids);
    if (s == obj) continue;
    if (!multi.contains(p) && !functional_used.insert({s, p}).second) continue;
    triplets.insert({s, p, obj});
  }
  std::vector<Triplet> rows(triplets.begin(), triplets.end());

  World world;
  world.kb = KnowledgeBase::from_parts(rows, entities, predicates);

  for (std::size_t i = 0; i < o.paragraphs; ++i) {
    TextBuilder b;
    auto surface = [&](const EntityId& id) {
      return case_variant(rng, pick(rng, entities.at(id)));
    };
    for (std::size_t f = 0; f < o.facts_per_paragraph && !rows.empty(); ++f) {
      const auto& t = pick(rng, rows);
      b.filler(rng, 0, 3);
      b.mention(surface(t.subject), t.subject);
      b.filler(rng, 0, 1);
      auto alias = pick(rng, predicates.at(t.predicate));
      if (uniform_below(rng, 1000) < static_cast<std::size_t>(o.typo_share * 1000))
        alias = typo(rng, alias, 1 + uniform_below(rng, 2));
      b.word(alias);
      b.filler(rng, 0, 1);
      b.mention(surface(t.object), t.object);
      if (uniform_below(rng, 3) == 0) b.punct(',');
    }
    while (b.text.size() < o.words_per_paragraph * 6) {
      if (uniform_below(rng, 10) == 0) {
        const auto& e = pick(rng, entity_ids);
        b.mention(surface(e), e);
      } else if (uniform_below(rng, 12) == 0) {
        b.word(pick(rng, predicates.at(pick(rng, predicate_ids))));
      } else {
        b.filler(rng, 1, 1);
      }
    }
    b.punct('.');

    Paragraph p{"doc" + std::to_string(i), b.text, std::nullopt};
    if (uniform_below(rng, 1000) < static_cast<std::size_t>(o.pre_linked_share * 1000))
      p.pre_linked = b.mentions;
    world.corpus.push_back(std::move(p));
  }
  return world;
}

World make_fact_world(const FactWorldOptions& o) {
  Rng rng(splitmix64(o.seed ^ 0xfac7ULL));

  struct Relation {
    PredicateId id;
    std::vector<std::string> aliases;
    std::vector<std::string> templates;
    std::size_t object_words;  // max words per object name
  };
  const std::vector<Relation> relations = {
      {"born_in",
       {"born in", "native of"},
       {"[X] born in [Y] .", "[X] is a native of [Y] .", "it is known that [X] , native of [Y] ."},
       1},
      {"citizen_of",
       {"citizen of", "national of"},
       {"[X] citizen of [Y] .", "[X] is a national of [Y] .",
        "records show [X] citizen of [Y] ."},
       2},
      {"works_for",
       {"works for", "employed by"},
       {"[X] works for [Y] .", "[X] is employed by [Y] .", "local archive notes [X] , employed by [Y] ."},
       2},
  };

  const auto words = word_pool(rng, o.subjects * 2 + relations.size() * o.objects_per_predicate * 2, 2);
  std::size_t next_word = 0;
  auto fresh = [&] { return capitalize(words[next_word++]); };

  AliasTable entities;
  std::vector<EntityId> subjects;
  for (std::size_t i = 0; i < o.subjects; ++i) {
    const auto id = "S" + std::to_string(i);
    entities[id] = {fresh() + " " + fresh()};
    subjects.push_back(id);
  }

  AliasTable predicates;
  std::vector<Triplet> triplets;
  World world;
  std::size_t object_counter = 0;
  std::map<PredicateId, std::vector<EntityId>> objects;
  for (const auto& r : relations) {
    predicates[r.id] = r.aliases;
    for (const auto& t : r.templates) world.templates.push_back({r.id, t});
    for (std::size_t j = 0; j < o.objects_per_predicate; ++j) {
      const auto id = "O" + std::to_string(object_counter++);
      std::string name = fresh();
      if (r.object_words > 1 && uniform_below(rng, 2) == 0) name += " " + fresh();
      entities[id] = {name};
      objects[r.id].push_back(id);
    }
    for (const auto& s : subjects) triplets.push_back({s, r.id, pick(rng, objects[r.id])});
  }
  world.kb = KnowledgeBase::from_parts(triplets, entities, predicates);

  std::size_t fact_index = 0;
  for (const auto& t : world.kb.triplets()) {
    const auto& s_name = entities.at(t.subject).front();
    const auto& o_name = entities.at(t.object).front();
    const auto& aliases = predicates.at(t.predicate);
    for (std::size_t k = 0; k < o.paragraphs_per_fact; ++k) {
      TextBuilder b;
      const auto& alias = aliases[(k + fact_index) % aliases.size()];
      switch ((k + fact_index) % 3) {
        case 0:
          b.filler(rng, 1, 3);
          b.mention(s_name, t.subject);
          b.word(alias);
          b.mention(o_name, t.object);
          b.filler(rng, 1, 3);
          break;
        case 1:
          b.filler(rng, 2, 4);
          b.punct(',');
          b.mention(s_name, t.subject);
          b.word(alias);
          b.mention(o_name, t.object);
          b.punct(',');
          b.filler(rng, 1, 2);
          break;
        default:
          b.mention(s_name, t.subject);
          b.filler(rng, 1, 2);
          b.word(alias);
          b.mention(o_name, t.object);
          b.filler(rng, 2, 3);
          break;
      }
      b.punct('.');
      world.corpus.push_back(
          {"f" + std::to_string(fact_index) + "_p" + std::to_string(k), b.text, std::nullopt});
    }
    world.facts.push_back({t, s_name, o_name, RelationType::N1Or11, false});
    ++fact_index;
  }
  return world;
}

}  // namespace detmask::synth
