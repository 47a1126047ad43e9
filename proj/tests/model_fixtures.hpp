#pragma once

#include <algorithm>
#include <vector>

#include "detmask/model.hpp"
#include "detmask/rng.hpp"

namespace fixtures {

// Random (keep, drop, random) triples over a toy vocabulary: keep masks two
// object positions, drop also masks `clues` positions, random masks the
// object plus as many other positions.
inline std::vector<detmask::TrainingExample> random_triples(std::size_t count,
                                                            std::size_t vocab,
                                                            std::size_t max_len,
                                                            std::uint64_t seed) {
  using namespace detmask;
  Rng rng(seed);
  std::vector<TrainingExample> out;
  for (std::size_t e = 0; e < count; ++e) {
    const std::size_t n = 8 + uniform_below(rng, max_len - 7);
    MaskedSample base;
    for (std::size_t i = 0; i < n; ++i)
      base.input.push_back(static_cast<TokenId>(
          Vocabulary::kFirstContent + uniform_below(rng, vocab - Vocabulary::kFirstContent)));
    auto order = choose_sorted(rng, n, 6);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_below(rng, i)]);
    const std::vector<std::size_t> object{order[0], order[1]};
    const std::vector<std::size_t> clues{order[2], order[3]};
    const std::vector<std::size_t> other{order[4], order[5]};

    auto masked = [&](Variant v, std::vector<std::size_t> positions) {
      std::sort(positions.begin(), positions.end());
      MaskedSample m = base;
      m.variant = v;
      m.positions = positions;
      for (auto p : positions) {
        m.targets.push_back(base.input[p]);
        m.input[p] = Vocabulary::kMask;
      }
      return m;
    };
    auto with = [](std::vector<std::size_t> a, const std::vector<std::size_t>& b) {
      a.insert(a.end(), b.begin(), b.end());
      return a;
    };
    TrainingExample ex{masked(Variant::KeepClues, object),
                       masked(Variant::MaskClues, with(object, clues)),
                       masked(Variant::MaskRandom, with(object, other))};
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace fixtures
