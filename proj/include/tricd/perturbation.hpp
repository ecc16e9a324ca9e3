#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>

#include "tricd/rng.hpp"
#include "tricd/video.hpp"

namespace tricd {

// Enumeration order is the fixed application order inside each stage and
// the tool index used by the policy.
enum class Tool : std::size_t {
  Sample = 0,
  Reverse,
  Shuffle,
  Blur,
  Noise,
  Grayscale,
  HorizontalMirror,
  VerticalMirror,
};

inline constexpr std::size_t kNumTools = 8;
inline constexpr std::array<Tool, kNumTools> kAllTools{
    Tool::Sample, Tool::Reverse,   Tool::Shuffle,          Tool::Blur,
    Tool::Noise,  Tool::Grayscale, Tool::HorizontalMirror, Tool::VerticalMirror};

enum class ToolCategory { Temporal, Spatial };

using ToolSet = std::bitset<kNumTools>;

constexpr std::size_t index_of(Tool t) { return static_cast<std::size_t>(t); }
ToolCategory category_of(Tool t);
std::string_view tool_name(Tool t);
// Accepts the names produced by tool_name plus lower/snake-case variants
// ("hmirror", "horizontal_mirror", ...). Throws InvalidArgument.
Tool parse_tool(std::string_view name);

struct ToolConfig {
  std::size_t sample_keep_stride = 2;
  double blur_sigma = 2.0;
  std::size_t blur_kernel_radius = 4;
  double noise_sigma = 0.1;

  void validate() const;
};

// Applies one tool. For Sample on a single-frame input the sequence comes
// back unchanged and `*degenerate` (if given) is set.
FrameSequence apply_tool(const FrameSequence& seq, Tool tool, const ToolConfig& cfg, Rng& rng,
                         bool* degenerate = nullptr);

// Temporal tools of `tools` in enumeration order over the whole sequence.
FrameSequence apply_temporal_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                   Rng& rng);
// Spatial tools of `tools` in enumeration order over every frame.
FrameSequence apply_spatial_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                  Rng& rng);

// Builds the negative video: temporal stage first, then spatial tools on the
// surviving frames. Throws EmptyToolSet.
FrameSequence compose_dual_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                 Rng& rng);

// "This {Type} perturbation, specifically {Description}, which effectively {Explain}"
std::string tool_description(Tool tool);

}  // namespace tricd
