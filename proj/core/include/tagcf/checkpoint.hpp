#pragma once

#include <filesystem>

#include "tagcf/model.hpp"

namespace tagcf {

// Binary model checkpoint, little-endian:
//   magic "TAGC", format version u32,
//   d, h, K, N_u, N_i, N_a as u64,
//   gate_mode u8, ablation u8,
//   X_U, X_I, X_A then per relation W1, b1, W2, b2, all as contiguous f32,
//   trailing CRC32 over everything before it.
// Embeddings are held in doubles in memory; the f32 narrowing happens here
// and only here, so save -> load -> save is byte-identical.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Model& model);

// Verifies magic, version, CRC, and exact payload size before materializing
// anything; a bad file never yields a partial model. leaky_slope and
// init_scale are not part of the format and stay at their defaults.
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace tagcf
