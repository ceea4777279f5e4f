#pragma once

#include <optional>
#include <string>

#include "nco/adam.hpp"
#include "nco/params.hpp"

namespace nco {

// Binary checkpoint: format-version integer, then per parameter its name,
// shape and raw little-endian f64 values. Optimizer moments, step counter
// and schedule ride along when saving mid-training. Writes are atomic
// (temp file + rename).
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ParamStore params;
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const AdamState* adam = nullptr);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nco
