// Serial reference aligner against the OpenMP kernel on one synthetic corpus.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "detmask/io.hpp"
#include "detmask/pipeline.hpp"
#include "detmask/synth.hpp"

using namespace detmask;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_output(const std::vector<AlignedLine>& a, const std::vector<AlignedLine>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].samples_line != b[i].samples_line || a[i].ssm_line != b[i].ssm_line ||
        a[i].error != b[i].error)
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t paragraphs = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 10000;
  const std::size_t triplets = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 10000;

  synth::RandomWorldOptions o;
  o.paragraphs = paragraphs;
  o.triplets = triplets;
  o.entities = triplets / 4;
  o.predicates = 24;
  o.words_per_paragraph = 170;
  o.facts_per_paragraph = 6;
  o.seed = 7;
  auto t0 = std::chrono::steady_clock::now();
  const auto world = synth::make_random_world(o);
  std::vector<std::string> lines;
  std::size_t tokens = 0;
  for (const auto& p : world.corpus) {
    lines.push_back(io::paragraph_line(p));
    tokens += split_tokens(p.text).size();
  }
  std::cout << "corpus: " << lines.size() << " paragraphs, "
            << tokens / std::max<std::size_t>(lines.size(), 1) << " tokens each, "
            << world.kb.triplets().size() << " triplets (" << seconds_since(t0) << " s)\n";

  const Aligner aligner(world.kb);
  t0 = std::chrono::steady_clock::now();
  const auto serial = align_lines_serial(lines, aligner);
  const double serial_s = seconds_since(t0);
  std::size_t aligned = 0;
  for (const auto& r : serial) aligned += r.emitted;
  std::cout << "serial       " << serial_s << " s, " << aligned << " aligned triplets\n";

  for (int threads : {1, 2, 4, 8}) {
    t0 = std::chrono::steady_clock::now();
    const auto parallel = align_lines_parallel(lines, aligner, threads);
    const double s = seconds_since(t0);
    std::cout << "openmp x" << threads << "    " << s << " s, speedup " << serial_s / s
              << (same_output(serial, parallel) ? ", identical" : ", MISMATCH") << '\n';
  }
  return 0;
}
