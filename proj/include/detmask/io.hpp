#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "detmask/align.hpp"
#include "detmask/masking.hpp"
#include "detmask/probe.hpp"

// JSONL record formats. Every writer emits one compact JSON object with a
// fixed key order, so equal inputs give byte-identical files.
namespace detmask::io {

// corpus.jsonl: {"doc_id", "text", optional "entity_spans": [[b, e, id], ...]}
Paragraph parse_paragraph(std::string_view line);
std::string paragraph_line(const Paragraph& p);

// samples.jsonl: {"doc_id", "text", "entities": [[b, e, id]...],
//   "triplets": [{"s","p","o","s_span","p_span","o_span","edit_distance"}...]}
std::string sample_line(const AlignedSample& s);
AlignedSample parse_sample(std::string_view line);

// ssm.jsonl: {"doc_id", "text", "entities": [...]}
std::string ssm_line(const SsmSample& s);
SsmSample parse_ssm(std::string_view line);

// masked.jsonl: {"doc_id", "variant", "input_ids", "mask_positions",
//   "targets", "scheme", "group"}. `group` ties the variants built from one
//   tokenized sample together.
struct MaskedRecord {
  MaskedSample sample;
  std::size_t group = 0;
};
std::string masked_line(const MaskedSample& m, std::size_t group);
MaskedRecord parse_masked(std::string_view line);

// templates.jsonl: {"relation", "pattern"}; facts.jsonl: {"s","p","o",
// "s_surface","o_surface"}.
Template parse_template(std::string_view line);
Fact parse_fact(std::string_view line);
std::string template_line(const Template& t);
std::string fact_line(const Fact& f);

// report.json, schema "detmask-probe-report" version 1.
std::string report_json(const MetricsReport& report);
MetricsReport parse_report(std::string_view text);

// Calls fn(line_number, line) for each non-blank line. Throws if the file
// cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, const std::string&)>& fn);

template <typename T, typename Parse>
std::vector<T> read_jsonl(const std::filesystem::path& path, Parse parse) {
  std::vector<T> out;
  for_each_line(path, [&](std::size_t, const std::string& line) {
    out.push_back(parse(line));
  });
  return out;
}

std::string read_file(const std::filesystem::path& path);

}  // namespace detmask::io
