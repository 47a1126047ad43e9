#include <doctest.h>

#include "detmask/align.hpp"
#include "detmask/error.hpp"
#include "detmask/io.hpp"
#include "fixtures.hpp"

using namespace detmask;

TEST_SUITE("io") {
  TEST_CASE("paragraph lines round trip") {
    Paragraph p{"d1", "War Horse \"quoted\" \xC3\xA9t\xC3\xA9", std::nullopt};
    auto back = io::parse_paragraph(io::paragraph_line(p));
    CHECK(back.doc_id == p.doc_id);
    CHECK(back.text == p.text);
    CHECK_FALSE(back.pre_linked);

    p.pre_linked = std::vector<LinkedSpan>{{{0, 3}, "Q1"}, {{4, 9}, "Q2"}};
    back = io::parse_paragraph(io::paragraph_line(p));
    REQUIRE(back.pre_linked);
    CHECK(*back.pre_linked == *p.pre_linked);
  }

  TEST_CASE("aligned samples round trip byte for byte") {
    const auto kb = fixtures::war_horse_kb();
    const auto sample = align_paragraph({"w", fixtures::kWarHorseText, std::nullopt}, kb).sample;
    const auto line = io::sample_line(sample);
    const auto back = io::parse_sample(line);
    CHECK(back.aligned == sample.aligned);
    CHECK(back.entity_spans == sample.entity_spans);
    CHECK(io::sample_line(back) == line);

    const SsmSample ssm{sample.paragraph, sample.entity_spans};
    const auto ssm_back = io::parse_ssm(io::ssm_line(ssm));
    CHECK(ssm_back.entity_spans == ssm.entity_spans);
    CHECK(io::ssm_line(ssm_back) == io::ssm_line(ssm));
  }

  TEST_CASE("masked records round trip") {
    MaskedSample m;
    m.doc_id = "d";
    m.scheme = MaskScheme::WholeWord;
    m.variant = Variant::Plain;
    m.input = {3, 2, 5, 2};
    m.positions = {1, 3};
    m.targets = {4, 6};
    const auto rec = io::parse_masked(io::masked_line(m, 7));
    CHECK(rec.sample == m);
    CHECK(rec.group == 7);
  }

  TEST_CASE("templates, facts and reports round trip") {
    const Template t{"born_in", "[X] born in [Y] ."};
    const auto t2 = io::parse_template(io::template_line(t));
    CHECK(t2.relation == t.relation);
    CHECK(t2.pattern == t.pattern);

    const Fact f{{"Q1", "born_in", "Q2"}, "Ada", "Oslo"};
    const auto f2 = io::parse_fact(io::fact_line(f));
    CHECK(f2.triplet == f.triplet);
    CHECK(f2.subject_surface == "Ada");
    CHECK(f2.object_surface == "Oslo");

    MetricsReport r;
    r.total = {0.5, 0.25, 0.125, 4, 8, 4, 8, 2, 1};
    r.nm.accuracy = 1.0;
    r.nm.facts = 1;
    const auto text = io::report_json(r);
    const auto back = io::parse_report(text);
    CHECK(back.total.accuracy == 0.5);
    CHECK(back.total.consistency == 0.25);
    CHECK(back.total.joint_facts == 1);
    CHECK(back.nm.facts == 1);
    CHECK(io::report_json(back) == text);
    CHECK_THROWS_AS(io::parse_report("{\"schema\":\"other\"}"), Error);
  }

  TEST_CASE("malformed records") {
    CHECK_THROWS_AS(io::parse_paragraph("not json"), Error);
    CHECK_THROWS_AS(io::parse_paragraph("{\"text\":\"x\"}"), Error);
    CHECK_THROWS_AS(io::parse_paragraph("{\"doc_id\":1,\"text\":\"x\"}"), Error);
    CHECK_THROWS_AS(
        io::parse_paragraph("{\"doc_id\":\"a\",\"text\":\"abc\",\"entity_spans\":[[0,9,\"Q\"]]}"),
        Error);
    CHECK_THROWS_AS(io::parse_paragraph(
                        "{\"doc_id\":\"a\",\"text\":\"abcdef\","
                        "\"entity_spans\":[[0,3,\"Q\"],[2,5,\"R\"]]}"),
                    Error);
    CHECK_THROWS_AS(io::parse_masked("{\"doc_id\":\"d\",\"variant\":\"plain\",\"scheme\":"
                                     "\"deterministic\",\"input_ids\":[3],"
                                     "\"mask_positions\":[4],\"targets\":[3],\"group\":0}"),
                    Error);
  }

  TEST_CASE("line reader reports source and line") {
    fixtures::TempDir dir("io");
    const auto path = dir / "corpus.jsonl";
    fixtures::write_text(path, "{\"doc_id\":\"a\",\"text\":\"x\"}\n\n{broken\n");
    std::size_t seen = 0;
    try {
      io::for_each_line(path, [&](std::size_t, const std::string& line) {
        io::parse_paragraph(line);
        ++seen;
      });
      FAIL("expected MalformedLine");
    } catch (const MalformedLine& e) {
      CHECK(e.line() == 3);
      CHECK(e.source() == path.string());
    }
    CHECK(seen == 1);
    CHECK_THROWS_AS(io::read_file(dir / "absent"), Error);
  }
}
