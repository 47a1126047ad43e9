#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "detmask/align.hpp"

namespace detmask {

// Result of aligning one corpus.jsonl line, already serialised.
struct AlignedLine {
  bool ok = false;
  std::string error;
  std::string samples_line;  // empty when the paragraph has no deterministic triplet
  std::string ssm_line;      // empty when no entity was linked
  AlignCounters counters;
  std::size_t emitted = 0;
};

// Serial reference kernel.
std::vector<AlignedLine> align_lines_serial(std::span<const std::string> lines,
                                            const Aligner& aligner);
// OpenMP kernel; element i always corresponds to lines[i].
std::vector<AlignedLine> align_lines_parallel(std::span<const std::string> lines,
                                              const Aligner& aligner, int threads);

struct AlignRun {
  DatasetCounters counters;
  std::vector<std::string> errors;  // "line N: message"
};

// Streams corpus.jsonl in chunks, writing deterministic and (optionally) salient-span lines in
// input order. Bad lines are skipped and reported, never fatal.
AlignRun align_stream(std::istream& corpus, std::ostream& samples, std::ostream* ssm,
                      const Aligner& aligner, int threads,
                      std::size_t chunk_lines = 4096);

}  // namespace detmask
