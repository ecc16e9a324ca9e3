#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tricd {

// T x H x W x C video buffer with intensities in [0, 1], frame-major and
// row-major within each frame. Immutable once constructed.
class FrameSequence {
 public:
  FrameSequence(std::size_t frames, std::size_t height, std::size_t width, std::size_t channels,
                std::vector<float> data, std::optional<double> frame_rate_hint = std::nullopt);

  static FrameSequence filled(std::size_t frames, std::size_t height, std::size_t width,
                              std::size_t channels, float value);

  std::size_t frames() const { return frames_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t channels() const { return channels_; }
  std::size_t frame_size() const { return height_ * width_ * channels_; }
  std::optional<double> frame_rate_hint() const { return frame_rate_hint_; }

  float at(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((t * height_ + y) * width_ + x) * channels_ + c];
  }
  std::span<const float> data() const { return data_; }
  std::span<const float> frame(std::size_t t) const {
    return std::span<const float>(data_).subspan(t * frame_size(), frame_size());
  }

  // Copy of the raw buffer for building a modified sequence.
  std::vector<float> to_vector() const { return data_; }

  bool operator==(const FrameSequence& other) const {
    return frames_ == other.frames_ && height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_ && data_ == other.data_;
  }

 private:
  std::size_t frames_, height_, width_, channels_;
  std::vector<float> data_;
  std::optional<double> frame_rate_hint_;
};

enum class Resolution { Pixel, Patch };

// Per-frame 2-D map of reals (flow components, magnitudes, saliency).
struct Grid2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  Resolution resolution = Resolution::Pixel;

  Grid2D() = default;
  Grid2D(std::size_t r, std::size_t c, double fill = 0.0, Resolution res = Resolution::Pixel)
      : rows(r), cols(c), values(r * c, fill), resolution(res) {}

  double& at(std::size_t y, std::size_t x) { return values[y * cols + x]; }
  double at(std::size_t y, std::size_t x) const { return values[y * cols + x]; }
  std::size_t size() const { return values.size(); }
  double min() const;
  double max() const;
  double mean() const;

  bool operator==(const Grid2D& other) const = default;
};

// Extracts channel `c` of frame `t` as a pixel grid.
Grid2D channel_grid(const FrameSequence& seq, std::size_t t, std::size_t c);

// ITU-R BT.601 luminance (0.299 R + 0.587 G + 0.114 B). C=1 input is
// returned unchanged.
FrameSequence to_grayscale(const FrameSequence& seq);

// Bilinear resampling without corner alignment, edge-clamped sampling.
Grid2D resize_bilinear(const Grid2D& grid, std::size_t out_h, std::size_t out_w);

// Separable normalized Gaussian with half-sample symmetric borders.
Grid2D gaussian_blur(const Grid2D& grid, double sigma, std::size_t radius);

}  // namespace tricd
