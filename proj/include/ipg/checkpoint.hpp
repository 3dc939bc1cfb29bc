#pragma once

#include <string>

#include "ipg/model.hpp"

namespace ipg::model {

// Checkpoint layout, all integers little-endian:
//   "IPGM" | u16 version | u32 config_len | config JSON |
//   per parameter in sorted name order:
//     u32 name_len | name | u32 rank | u32 dims[rank] | f32 values |
//   SHA-256 of everything above as a 32-byte trailer.
constexpr uint16_t kCheckpointVersion = 1;

void save_checkpoint(const InfillModel<float>& model, const std::string& path);

/// Throws CheckpointError with kind BadMagic / BadVersion / Truncated /
/// DigestMismatch / ShapeMismatch.
InfillModel<float> load_checkpoint(const std::string& path);

}  // namespace ipg::model
