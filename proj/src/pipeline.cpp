#include "detmask/pipeline.hpp"

#include <istream>
#include <ostream>

#include "detmask/io.hpp"

namespace detmask {

namespace {

AlignedLine align_one(const std::string& line, const Aligner& aligner) {
  AlignedLine out;
  try {
    const auto paragraph = io::parse_paragraph(line);
    auto result = aligner.align(paragraph);
    out.counters = result.counters;
    out.emitted = result.sample.aligned.size();
    if (!result.sample.entity_spans.empty())
      out.ssm_line = io::ssm_line({result.sample.paragraph, result.sample.entity_spans});
    if (!result.sample.aligned.empty()) out.samples_line = io::sample_line(result.sample);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<AlignedLine> align_lines_serial(std::span<const std::string> lines,
                                            const Aligner& aligner) {
  std::vector<AlignedLine> out;
  out.reserve(lines.size());
  for (const auto& line : lines) out.push_back(align_one(line, aligner));
  return out;
}

std::vector<AlignedLine> align_lines_parallel(std::span<const std::string> lines,
                                              const Aligner& aligner, int threads) {
  std::vector<AlignedLine> out(lines.size());
  const long n = static_cast<long>(lines.size());
#pragma omp parallel for schedule(dynamic, 32) num_threads(threads)
  for (long i = 0; i < n; ++i) out[i] = align_one(lines[i], aligner);
  return out;
}

AlignRun align_stream(std::istream& corpus, std::ostream& samples, std::ostream* ssm,
                      const Aligner& aligner, int threads, std::size_t chunk_lines) {
  AlignRun run;
  std::vector<std::string> lines;
  std::vector<std::size_t> numbers;
  std::size_t number = 0;

  auto flush = [&] {
    const auto results = threads <= 1 ? align_lines_serial(lines, aligner)
                                      : align_lines_parallel(lines, aligner, threads);
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      ++run.counters.paragraphs;
      if (!r.ok) {
        ++run.counters.bad_paragraphs;
        run.errors.push_back("line " + std::to_string(numbers[i]) + ": " + r.error);
        continue;
      }
      run.counters.triplets += r.counters;
      if (!r.ssm_line.empty()) {
        ++run.counters.ssm_paragraphs;
        if (ssm) *ssm << r.ssm_line << '\n';
      }
      if (!r.samples_line.empty()) {
        ++run.counters.deterministic_paragraphs;
        run.counters.emitted_triplets += r.emitted;
        samples << r.samples_line << '\n';
      }
    }
    lines.clear();
    numbers.clear();
  };

  std::string line;
  while (std::getline(corpus, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
    numbers.push_back(number);
    if (lines.size() >= chunk_lines) flush();
  }
  if (!lines.empty()) flush();
  return run;
}

}  // namespace detmask
