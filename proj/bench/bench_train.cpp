// Training-step throughput of the batch gradient at several thread counts.
#include <chrono>
#include <iostream>
#include <vector>

#include "detmask/model.hpp"

using namespace detmask;

int main() {
  ModelConfig config;
  config.vocab_size = 400;
  config.d = 32;
  config.hidden = 64;
  config.max_len = 32;
  const auto state = init(config);

  Rng rng(3);
  std::vector<TrainingExample> batch;
  for (int e = 0; e < 32; ++e) {
    MaskedSample keep;
    for (int i = 0; i < 24; ++i)
      keep.input.push_back(static_cast<TokenId>(3 + uniform_below(rng, 397)));
    auto drop = keep;
    keep.positions = drop.positions = {10, 11};
    keep.targets = drop.targets = {keep.input[10], keep.input[11]};
    for (std::size_t p = 6; p < 12; ++p) drop.input[p] = Vocabulary::kMask;
    keep.input[10] = keep.input[11] = Vocabulary::kMask;
    auto random = drop;
    batch.push_back({keep, drop, random});
  }

  std::vector<double> reference;
  loss_and_grad(state, batch, total_weights(config), &reference, 1);
  for (int threads : {1, 2, 4}) {
    std::vector<double> grad;
    const auto t0 = std::chrono::steady_clock::now();
    const int reps = 20;
    for (int r = 0; r < reps; ++r) loss_and_grad(state, batch, total_weights(config), &grad, threads);
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
    std::cout << "threads " << threads << ": " << s * 1e3 << " ms per batch of 32"
              << (grad == reference ? ", bitwise equal to serial" : ", DIFFERS") << '\n';
  }
  return 0;
}
