#pragma once

#include <filesystem>

#include "detmask/model.hpp"
#include "detmask/vocab.hpp"

namespace detmask {

// Checkpoint file layout (version 1):
//   bytes [0, 8)    magic "DMCKPT01"
//   bytes [8, 16)   header length H, uint64 little-endian
//   bytes [16, 16+H) UTF-8 JSON header:
//       {"format": "detmask-checkpoint", "version": 1, "dtype": "f64le",
//        "config": {...}, "vocab": [token, ...],
//        "tensors": [{"name", "shape", "offset"}, ...]}
//   bytes [16+H, ...) tensor payload; "offset" is the byte offset of each
//       tensor within the payload, values are IEEE-754 doubles, little-endian,
//       row-major.
struct Checkpoint {
  ModelState state;
  Vocabulary vocab;
};

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const Vocabulary& vocab);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace detmask
