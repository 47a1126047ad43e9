#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "detmask/align.hpp"
#include "detmask/kb.hpp"
#include "detmask/synth.hpp"

namespace fixtures {

// Directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& content);

// War Horse / Steven Spielberg world: Q1 directed_by Q2 is deterministic,
// Q2 director_of {Q1, Q3} is not.
detmask::KnowledgeBase war_horse_kb();
inline const char* kWarHorseText =
    "War Horse is an American war film directed by Steven Spielberg";

// Noisy random world sized for the brute-force oracle.
detmask::synth::World oracle_world(std::uint64_t seed);

}  // namespace fixtures
