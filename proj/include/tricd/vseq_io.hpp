#pragma once

#include <cstddef>
#include <filesystem>

#include "tricd/video.hpp"

namespace tricd {

// VSEQ layout (little-endian):
//   "VSEQ1" magic (5 bytes) | T H W C as uint32 | T*H*W*C float32 samples
inline constexpr std::size_t kVseqHeaderBytes = 5 + 4 * 4;

FrameSequence load_vseq(const std::filesystem::path& path);
void save_vseq(const FrameSequence& seq, const std::filesystem::path& path);

// Reads every *.ppm (binary P6) in `dir`; lexicographic filename order is
// frame order.
FrameSequence import_ppm_dir(const std::filesystem::path& dir);

// Writes one frame as binary P6, quantizing to 8 bits.
void write_ppm(const FrameSequence& seq, std::size_t frame, const std::filesystem::path& path);

}  // namespace tricd
