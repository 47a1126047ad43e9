#include <doctest.h>

#include <sstream>

#include "detmask/error.hpp"
#include "detmask/kb.hpp"
#include "detmask/rng.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

using namespace detmask;

namespace {

KnowledgeBase load_strings(const std::string& t, const std::string& e, const std::string& p) {
  std::istringstream ts(t), es(e), ps(p);
  return KnowledgeBase::load(ts, es, ps);
}

}  // namespace

TEST_SUITE("kb") {
  TEST_CASE("objects_for and determinism") {
    const auto kb = KnowledgeBase::from_parts(
        {{"A", "P", "B"}, {"A", "P", "C"}, {"D", "P", "B"}},
        {{"A", {"a"}}, {"B", {"b"}}, {"C", {"c"}}, {"D", {"d"}}},
        {{"P", {"p"}}, {"Q", {"q"}}});
    CHECK(kb.objects_for("A", "P") == std::vector<EntityId>{"B", "C"});
    CHECK(kb.objects_for("D", "P") == std::vector<EntityId>{"B"});
    CHECK(kb.objects_for("A", "Q").empty());
    CHECK(kb.objects_for("nobody", "P").empty());
    CHECK_FALSE(kb.is_deterministic("A", "P"));
    CHECK(kb.is_deterministic("D", "P"));
    CHECK_FALSE(kb.is_deterministic("A", "Q"));
    CHECK(kb.contains({"A", "P", "C"}));
    CHECK_FALSE(kb.contains({"C", "P", "A"}));
  }

  TEST_CASE("war horse directions") {
    const auto kb = fixtures::war_horse_kb();
    CHECK(kb.is_deterministic("Q1", "directed_by"));
    CHECK_FALSE(kb.is_deterministic("Q2", "director_of"));
  }

  TEST_CASE("duplicate triplets collapse") {
    const auto kb = KnowledgeBase::from_parts({{"A", "P", "B"}, {"A", "P", "B"}},
                                              {{"A", {"a"}}, {"B", {"b"}}}, {{"P", {"p"}}});
    CHECK(kb.triplets().size() == 1);
    CHECK(kb.is_deterministic("A", "P"));
  }

  TEST_CASE("dangling references are rejected") {
    CHECK_THROWS_AS(KnowledgeBase::from_parts({{"A", "P", "Z"}}, {{"A", {"a"}}}, {{"P", {"p"}}}),
                    DanglingReference);
    CHECK_THROWS_AS(KnowledgeBase::from_parts({{"A", "R", "A"}}, {{"A", {"a"}}}, {{"P", {"p"}}}),
                    DanglingReference);
  }

  TEST_CASE("index lookups equal a linear scan on random knowledge bases") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t entities = 1 + uniform_below(rng, 50);
      const std::size_t predicates = 1 + uniform_below(rng, 5);
      const std::size_t count = uniform_below(rng, 501);
      AliasTable ents, preds;
      for (std::size_t e = 0; e < entities; ++e) ents["E" + std::to_string(e)] = {"e"};
      for (std::size_t p = 0; p < predicates; ++p) preds["P" + std::to_string(p)] = {"p"};
      std::vector<Triplet> rows;
      for (std::size_t i = 0; i < count; ++i) {
        rows.push_back({"E" + std::to_string(uniform_below(rng, entities)),
                        "P" + std::to_string(uniform_below(rng, predicates)),
                        "E" + std::to_string(uniform_below(rng, entities))});
      }
      const auto kb = KnowledgeBase::from_parts(rows, ents, preds);
      for (const auto& [s, _] : ents) {
        for (const auto& [p, __] : preds) {
          const auto expected = oracle::objects_for(kb, s, p);
          REQUIRE(kb.objects_for(s, p) == expected);
          REQUIRE(kb.is_deterministic(s, p) == (expected.size() == 1));
        }
      }
    }
  }

  TEST_CASE("tsv parsing") {
    const auto kb = load_strings(
        "# header comment\nQ1\tdirected_by\tQ2\r\n\nQ2\tdirector_of\tQ1\n",
        "Q1\tWar Horse\nQ2\tSteven Spielberg\tSpielberg| Steven Spielberg |S. Spielberg\n",
        "directed_by\tdirected by|was directed by\ndirector_of\tdirector of\n");
    CHECK(kb.triplets().size() == 2);
    CHECK(kb.entity_aliases().at("Q2") ==
          std::vector<std::string>{"Steven Spielberg", "Spielberg", "S. Spielberg"});
    CHECK(kb.predicate_aliases().at("directed_by").size() == 2);
  }

  TEST_CASE("malformed lines report their source and line number") {
    try {
      load_strings("Q1\tP\n", "Q1\tx\n", "P\tp\n");
      FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
      CHECK(e.source() == "triplets");
      CHECK(e.line() == 1);
    }
    CHECK_THROWS_AS(load_strings("", "Q1\n", ""), MalformedLine);
    CHECK_THROWS_AS(load_strings("", "Q1\tx\nQ1\ty\n", ""), MalformedLine);
    CHECK_THROWS_AS(load_strings("", "", "P\t | \n"), MalformedLine);
    CHECK_THROWS_AS(load_strings("Q1\tP\tQ9\n", "Q1\tx\n", "P\tp\n"), DanglingReference);
  }

  TEST_CASE("write and reload round trip") {
    fixtures::TempDir dir("kb");
    const auto kb = fixtures::war_horse_kb();
    kb.write_dir(dir.path());
    const auto again = KnowledgeBase::load_dir(dir.path());
    CHECK(again.triplets() == kb.triplets());
    CHECK(again.entity_aliases() == kb.entity_aliases());
    CHECK(again.predicate_aliases() == kb.predicate_aliases());
    const auto third = KnowledgeBase::load_dir(dir.path());
    CHECK(third.triplets() == again.triplets());
  }
}
