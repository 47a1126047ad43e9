#include "detmask/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detmask/error.hpp"

namespace detmask::io {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

json parse_json(std::string_view line) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("missing field \"") + key + "\"");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(std::string("bad type for field \"") + key + "\"");
  }
}

Span span_from(const json& j, const char* key) {
  const auto v = field<std::vector<std::size_t>>(j, key);
  if (v.size() != 2 || v[0] >= v[1]) throw Error(std::string("bad span ") + key);
  return {v[0], v[1]};
}

ojson span_json(const Span& s) { return ojson::array({s.begin, s.end}); }

ojson entities_json(const std::vector<LinkedSpan>& spans) {
  auto arr = ojson::array();
  for (const auto& e : spans) arr.push_back(ojson::array({e.span.begin, e.span.end, e.entity}));
  return arr;
}

std::vector<LinkedSpan> entities_from(const json& arr, std::size_t text_size) {
  if (!arr.is_array()) throw Error("entity spans must be an array");
  std::vector<LinkedSpan> out;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_unsigned() ||
        !e[1].is_number_unsigned() || !e[2].is_string())
      throw Error("entity span must be [start, end, id]");
    LinkedSpan ls{{e[0].get<std::size_t>(), e[1].get<std::size_t>()},
                  e[2].get<std::string>()};
    if (ls.span.begin >= ls.span.end || ls.span.end > text_size)
      throw Error("entity span out of range");
    if (ls.entity.empty()) throw Error("empty entity id");
    out.push_back(std::move(ls));
  }
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.span < b.span; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].span.overlaps(sorted[i].span))
      throw Error("overlapping entity spans");
  }
  return out;
}

ojson split_json(const SplitMetrics& m) {
  return {{"accuracy", m.accuracy},   {"consistency", m.consistency},
          {"joint", m.joint},         {"facts", m.facts},
          {"questions", m.questions}, {"correct", m.correct},
          {"pairs", m.pairs},         {"agreeing_pairs", m.agreeing_pairs},
          {"joint_facts", m.joint_facts}};
}

SplitMetrics split_from(const json& j) {
  SplitMetrics m;
  m.accuracy = field<double>(j, "accuracy");
  m.consistency = field<double>(j, "consistency");
  m.joint = field<double>(j, "joint");
  m.facts = field<std::size_t>(j, "facts");
  m.questions = field<std::size_t>(j, "questions");
  m.correct = field<std::size_t>(j, "correct");
  m.pairs = field<std::size_t>(j, "pairs");
  m.agreeing_pairs = field<std::size_t>(j, "agreeing_pairs");
  m.joint_facts = field<std::size_t>(j, "joint_facts");
  return m;
}

}  // namespace

Paragraph parse_paragraph(std::string_view line) {
  const auto j = parse_json(line);
  Paragraph p;
  p.doc_id = field<std::string>(j, "doc_id");
  p.text = field<std::string>(j, "text");
  if (const auto it = j.find("entity_spans"); it != j.end() && !it->is_null())
    p.pre_linked = entities_from(*it, p.text.size());
  return p;
}

std::string paragraph_line(const Paragraph& p) {
  ojson j{{"doc_id", p.doc_id}, {"text", p.text}};
  if (p.pre_linked) j["entity_spans"] = entities_json(*p.pre_linked);
  return j.dump();
}

std::string sample_line(const AlignedSample& s) {
  ojson triplets = ojson::array();
  for (const auto& a : s.aligned) {
    triplets.push_back({{"s", a.triplet.subject},
                        {"p", a.triplet.predicate},
                        {"o", a.triplet.object},
                        {"s_span", span_json(a.subject_span)},
                        {"p_span", span_json(a.predicate_span)},
                        {"o_span", span_json(a.object_span)},
                        {"edit_distance", a.edit_distance}});
  }
  ojson j{{"doc_id", s.paragraph.doc_id},
          {"text", s.paragraph.text},
          {"entities", entities_json(s.entity_spans)},
          {"triplets", std::move(triplets)}};
  return j.dump();
}

AlignedSample parse_sample(std::string_view line) {
  const auto j = parse_json(line);
  AlignedSample s;
  s.paragraph.doc_id = field<std::string>(j, "doc_id");
  s.paragraph.text = field<std::string>(j, "text");
  s.entity_spans = entities_from(field<json>(j, "entities"), s.paragraph.text.size());
  for (const auto& t : field<json>(j, "triplets")) {
    AlignedTriplet a;
    a.triplet = {field<std::string>(t, "s"), field<std::string>(t, "p"),
                 field<std::string>(t, "o")};
    a.subject_span = span_from(t, "s_span");
    a.predicate_span = span_from(t, "p_span");
    a.object_span = span_from(t, "o_span");
    a.edit_distance = field<std::size_t>(t, "edit_distance");
    a.deterministic = true;
    for (const auto* sp : {&a.subject_span, &a.predicate_span, &a.object_span}) {
      if (sp->end > s.paragraph.text.size()) throw Error("triplet span out of range");
    }
    s.aligned.push_back(std::move(a));
  }
  return s;
}

std::string ssm_line(const SsmSample& s) {
  ojson j{{"doc_id", s.paragraph.doc_id},
          {"text", s.paragraph.text},
          {"entities", entities_json(s.entity_spans)}};
  return j.dump();
}

SsmSample parse_ssm(std::string_view line) {
  const auto j = parse_json(line);
  SsmSample s;
  s.paragraph.doc_id = field<std::string>(j, "doc_id");
  s.paragraph.text = field<std::string>(j, "text");
  s.entity_spans = entities_from(field<json>(j, "entities"), s.paragraph.text.size());
  return s;
}

std::string masked_line(const MaskedSample& m, std::size_t group) {
  ojson j{{"doc_id", m.doc_id},
          {"variant", to_string(m.variant)},
          {"input_ids", m.input},
          {"mask_positions", m.positions},
          {"targets", m.targets},
          {"scheme", to_string(m.scheme)},
          {"group", group}};
  return j.dump();
}

MaskedRecord parse_masked(std::string_view line) {
  const auto j = parse_json(line);
  MaskedRecord r;
  auto& m = r.sample;
  m.doc_id = field<std::string>(j, "doc_id");
  const auto variant = parse_variant(field<std::string>(j, "variant"));
  const auto scheme = parse_scheme(field<std::string>(j, "scheme"));
  if (!variant) throw Error("unknown variant");
  if (!scheme) throw Error("unknown scheme");
  m.variant = *variant;
  m.scheme = *scheme;
  m.input = field<std::vector<TokenId>>(j, "input_ids");
  m.positions = field<std::vector<std::size_t>>(j, "mask_positions");
  m.targets = field<std::vector<TokenId>>(j, "targets");
  if (m.positions.size() != m.targets.size())
    throw Error("mask_positions and targets differ in length");
  for (auto p : m.positions)
    if (p >= m.input.size()) throw Error("mask position out of range");
  if (const auto it = j.find("group"); it != j.end()) r.group = it->get<std::size_t>();
  return r;
}

Template parse_template(std::string_view line) {
  const auto j = parse_json(line);
  return {field<std::string>(j, "relation"), field<std::string>(j, "pattern")};
}

Fact parse_fact(std::string_view line) {
  const auto j = parse_json(line);
  Fact f;
  f.triplet = {field<std::string>(j, "s"), field<std::string>(j, "p"),
               field<std::string>(j, "o")};
  f.subject_surface = field<std::string>(j, "s_surface");
  f.object_surface = field<std::string>(j, "o_surface");
  return f;
}

std::string template_line(const Template& t) {
  return ojson{{"relation", t.relation}, {"pattern", t.pattern}}.dump();
}

std::string fact_line(const Fact& f) {
  return ojson{{"s", f.triplet.subject},
               {"p", f.triplet.predicate},
               {"o", f.triplet.object},
               {"s_surface", f.subject_surface},
               {"o_surface", f.object_surface}}
      .dump();
}

std::string report_json(const MetricsReport& r) {
  ojson j{{"schema", "detmask-probe-report"},
          {"version", 1},
          {"total", split_json(r.total)},
          {"splits",
           {{"in_domain", split_json(r.in_domain)},
            {"out_of_domain", split_json(r.out_of_domain)},
            {"n1", split_json(r.n1)},
            {"nm", split_json(r.nm)}}}};
  return j.dump(2) + "\n";
}

MetricsReport parse_report(std::string_view text) {
  const auto j = parse_json(text);
  if (field<std::string>(j, "schema") != "detmask-probe-report" ||
      field<int>(j, "version") != 1)
    throw Error("not a version 1 probe report");
  MetricsReport r;
  r.total = split_from(field<json>(j, "total"));
  const auto splits = field<json>(j, "splits");
  r.in_domain = split_from(field<json>(splits, "in_domain"));
  r.out_of_domain = split_from(field<json>(splits, "out_of_domain"));
  r.n1 = split_from(field<json>(splits, "n1"));
  r.nm = split_from(field<json>(splits, "nm"));
  return r;
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fn(number, line);
    } catch (const MalformedLine&) {
      throw;
    } catch (const Error& e) {
      throw MalformedLine(path.string(), number, e.what());
    }
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detmask::io
