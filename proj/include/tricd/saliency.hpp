#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "tricd/flow.hpp"
#include "tricd/video.hpp"

namespace tricd {

struct BandpassParams {
  std::size_t window_w = 5;
  double lambda_low = 0.1;
  double lambda_high = 0.9;
  double gaussian_sigma_pi = 1.0;
  std::size_t gaussian_radius = 3;

  void validate() const;
};

// Spatial and motion streams at patch resolution, both in [0, 1].
struct SaliencyPair {
  std::vector<Grid2D> spatial;
  std::vector<Grid2D> motion;
};

// Flow magnitude between each pair of consecutive (grayscale) frames: T-1 grids.
std::vector<Grid2D> flow_magnitudes(const FrameSequence& seq, const FarnebackParams& params = {});

// Gaussian smoothing of each grid with sigma = gaussian_sigma_pi.
std::vector<Grid2D> smooth_magnitudes(const std::vector<Grid2D>& mags, const BandpassParams& params);

// max(m - (mean + lo*std), 0) * [m <= mean + hi*std]
double bandpass_response(double m, double mean, double std_dev, double lambda_low,
                         double lambda_high);

// Per-pixel band-pass against population statistics over a window of
// window_w frames around each frame. Near the sequence ends the window is
// shifted to stay inside the sequence; with fewer than window_w frames the
// whole sequence is the window.
std::vector<Grid2D> temporal_bandpass(const std::vector<Grid2D>& mags, const BandpassParams& params);

// flow -> magnitude -> Gaussian smoothing -> band-pass. Returns T-1 grids
// (empty for a single frame).
std::vector<Grid2D> motion_saliency(const FrameSequence& seq, const FarnebackParams& flow = {},
                                    const BandpassParams& band = {});

class SpatialSaliencyProvider {
 public:
  virtual ~SpatialSaliencyProvider() = default;
  // One patch-resolution grid per frame.
  virtual std::vector<Grid2D> compute(const FrameSequence& seq, std::size_t patch) const = 0;
};

// Seeded single-layer multi-head self-attention over [CLS] + patch tokens;
// the saliency of a frame is the softmax of the head-averaged CLS->patch
// attention row.
class ToySpatialExtractor : public SpatialSaliencyProvider {
 public:
  explicit ToySpatialExtractor(std::uint64_t seed, std::size_t dim = 32, std::size_t heads = 4);
  std::vector<Grid2D> compute(const FrameSequence& seq, std::size_t patch) const override;

 private:
  std::size_t dim_, heads_;
  std::vector<double> w_embed_, b_embed_, cls_, wq_, wk_;
};

std::vector<Grid2D> toy_spatial_saliency(const FrameSequence& seq, std::uint64_t extractor_seed,
                                         std::size_t patch);

// Precomputed maps stored as a single-channel VSEQ at patch resolution.
std::vector<Grid2D> load_spatial_saliency(const std::filesystem::path& path, std::size_t frames,
                                          std::size_t rows, std::size_t cols);

class FileSpatialSaliency : public SpatialSaliencyProvider {
 public:
  explicit FileSpatialSaliency(std::filesystem::path path) : path_(std::move(path)) {}
  std::vector<Grid2D> compute(const FrameSequence& seq, std::size_t patch) const override;

 private:
  std::filesystem::path path_;
};

// Pads motion to the spatial frame count by repeating its first map, min-max
// normalizes each stream over the whole video (constant -> zeros) and resizes
// to patch_h x patch_w. Throws FrameCountMismatch.
SaliencyPair normalize_and_align(const std::vector<Grid2D>& spatial,
                                 const std::vector<Grid2D>& motion, std::size_t patch_h,
                                 std::size_t patch_w);

// beta * spatial + (1 - beta) * motion. Throws BetaOutOfRange.
std::vector<Grid2D> fuse(const SaliencyPair& pair, double beta);

// Full pipeline for one video at the given patch size.
SaliencyPair compute_saliency(const FrameSequence& seq, const SpatialSaliencyProvider& spatial,
                              std::size_t patch, const FarnebackParams& flow = {},
                              const BandpassParams& band = {});

// Grids packed as a T x rows x cols x 1 sequence (values clamped to [0, 1]).
FrameSequence grids_to_sequence(const std::vector<Grid2D>& grids);

}  // namespace tricd
