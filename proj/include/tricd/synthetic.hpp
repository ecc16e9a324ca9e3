#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tricd/dataset.hpp"
#include "tricd/video.hpp"

namespace tricd {

enum class Direction { Left, Right, Up, Down };
enum class SquareColor { Red, Green, Blue, Yellow };
enum class Brightness { Rising, Falling };

std::string_view direction_name(Direction d);
std::string_view color_name(SquareColor c);

// Ground-truth properties of one generated clip.
struct SyntheticScene {
  Direction direction = Direction::Right;
  SquareColor color = SquareColor::Red;
  Brightness brightness = Brightness::Rising;
  bool marker_top = true;  // white bar along the top (else bottom) edge
  std::size_t start_x = 8, start_y = 8;
};

inline constexpr std::size_t kSyntheticSize = 64;
inline constexpr std::size_t kSyntheticFrames = 8;
inline constexpr std::size_t kSquareSize = 16;
inline constexpr std::size_t kSquareStep = 3;  // px per frame

// Random scene whose square stays inside the frame for the whole clip.
SyntheticScene random_scene(std::uint64_t seed, std::size_t index);
FrameSequence render_scene(const SyntheticScene& scene);

// QA items for one scene; `video_id` prefixes the sample ids.
std::vector<QASample> scene_questions(const SyntheticScene& scene, const std::string& video_id,
                                      std::uint64_t seed, std::size_t index);

// Writes videos/NNNN.vseq plus dataset.jsonl under out_dir and returns the
// samples (video paths absolute). Throws IoFailure, InvalidArgument (n < 4).
std::vector<QASample> gen_synthetic(const std::filesystem::path& out_dir, std::size_t n_videos,
                                    std::uint64_t seed);

}  // namespace tricd
