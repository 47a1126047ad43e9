#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <stdexcept>

#include <unistd.h>

#include "detmask/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("detmask_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

detmask::KnowledgeBase war_horse_kb() {
  return detmask::KnowledgeBase::from_parts(
      {{"Q1", "directed_by", "Q2"}, {"Q2", "director_of", "Q1"}, {"Q2", "director_of", "Q3"}},
      {{"Q1", {"War Horse"}}, {"Q2", {"Steven Spielberg", "Spielberg"}}, {"Q3", {"Jaws"}}},
      {{"directed_by", {"directed by"}}, {"director_of", {"director of", "directed"}}});
}

detmask::synth::World oracle_world(std::uint64_t seed) {
  detmask::Rng rng(detmask::splitmix64(seed));
  detmask::synth::RandomWorldOptions o;
  o.entities = 20 + detmask::uniform_below(rng, 40);
  o.predicates = 2 + detmask::uniform_below(rng, 5);
  o.triplets = 50 + detmask::uniform_below(rng, 451);
  o.paragraphs = 20 + detmask::uniform_below(rng, 81);
  o.words_per_paragraph = 15 + detmask::uniform_below(rng, 20);
  o.facts_per_paragraph = 1 + detmask::uniform_below(rng, 3);
  o.multi_valued_share = 0.2 + 0.1 * static_cast<double>(detmask::uniform_below(rng, 5));
  o.seed = seed;
  return detmask::synth::make_random_world(o);
}

}  // namespace fixtures
