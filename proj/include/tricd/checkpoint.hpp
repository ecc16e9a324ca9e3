#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tricd/policy.hpp"
#include "tricd/trainer.hpp"

namespace tricd {

struct Checkpoint {
  std::uint64_t seed = 0;
  PolicyParams params;
  TrainerState state;
};

inline constexpr int kCheckpointVersion = 1;

// Canonical JSON text: fixed field order, parameters in enumeration order,
// values rounded to 32-bit floats and printed with 9 significant digits.
std::string checkpoint_to_string(const PolicyParams& params, const TrainerState& state,
                                 std::uint64_t seed);
// Throws MalformedDocument, ShapeMismatch.
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const TrainerState& state, std::uint64_t seed);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tricd
