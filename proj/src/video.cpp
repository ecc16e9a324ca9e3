#include "tricd/video.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tricd/error.hpp"

namespace tricd {

FrameSequence::FrameSequence(std::size_t frames, std::size_t height, std::size_t width,
                             std::size_t channels, std::vector<float> data,
                             std::optional<double> frame_rate_hint)
    : frames_(frames),
      height_(height),
      width_(width),
      channels_(channels),
      data_(std::move(data)),
      frame_rate_hint_(frame_rate_hint) {
  if (frames_ == 0 || height_ == 0 || width_ == 0 || (channels_ != 1 && channels_ != 3)) {
    throw Error(ErrorCode::DimensionMismatch,
                "invalid sequence dimensions T=" + std::to_string(frames_) + " H=" +
                    std::to_string(height_) + " W=" + std::to_string(width_) +
                    " C=" + std::to_string(channels_));
  }
  if (data_.size() != frames_ * height_ * width_ * channels_) {
    throw Error(ErrorCode::DimensionMismatch, "buffer length does not match T*H*W*C");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const float v = data_[i];
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw Error(ErrorCode::ValueOutOfRange,
                  "sample " + std::to_string(i) + " = " + std::to_string(v) + " outside [0,1]");
    }
  }
}

FrameSequence FrameSequence::filled(std::size_t frames, std::size_t height, std::size_t width,
                                    std::size_t channels, float value) {
  return FrameSequence(frames, height, width, channels,
                       std::vector<float>(frames * height * width * channels, value));
}

double Grid2D::min() const { return *std::min_element(values.begin(), values.end()); }
double Grid2D::max() const { return *std::max_element(values.begin(), values.end()); }
double Grid2D::mean() const {
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Grid2D channel_grid(const FrameSequence& seq, std::size_t t, std::size_t c) {
  Grid2D g(seq.height(), seq.width());
  for (std::size_t y = 0; y < seq.height(); ++y)
    for (std::size_t x = 0; x < seq.width(); ++x) g.at(y, x) = seq.at(t, y, x, c);
  return g;
}

FrameSequence to_grayscale(const FrameSequence& seq) {
  if (seq.channels() == 1) return seq;
  const std::size_t pixels = seq.frames() * seq.height() * seq.width();
  std::vector<float> out(pixels);
  auto src = seq.data();
  for (std::size_t p = 0; p < pixels; ++p) {
    const double lum = 0.299 * src[3 * p] + 0.587 * src[3 * p + 1] + 0.114 * src[3 * p + 2];
    out[p] = std::clamp(static_cast<float>(lum), 0.0f, 1.0f);
  }
  return FrameSequence(seq.frames(), seq.height(), seq.width(), 1, std::move(out),
                       seq.frame_rate_hint());
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * scale - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(std::floor(src));
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - static_cast<double>(i0)};
  }
  return taps;
}

}  // namespace

Grid2D resize_bilinear(const Grid2D& grid, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) {
    throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
  }
  if (out_h == grid.rows && out_w == grid.cols) return grid;
  const auto ty = bilinear_taps(grid.rows, out_h);
  const auto tx = bilinear_taps(grid.cols, out_w);
  Grid2D out(out_h, out_w, 0.0, grid.resolution);
  for (std::size_t y = 0; y < out_h; ++y) {
    const auto& a = ty[y];
    for (std::size_t x = 0; x < out_w; ++x) {
      const auto& b = tx[x];
      const double top = grid.at(a.i0, b.i0) + (grid.at(a.i0, b.i1) - grid.at(a.i0, b.i0)) * b.w1;
      const double bot = grid.at(a.i1, b.i0) + (grid.at(a.i1, b.i1) - grid.at(a.i1, b.i0)) * b.w1;
      double v = top + (bot - top) * a.w1;
      // Rounding in the lerp must not escape the local hull.
      const double lo = std::min({grid.at(a.i0, b.i0), grid.at(a.i0, b.i1), grid.at(a.i1, b.i0),
                                  grid.at(a.i1, b.i1)});
      const double hi = std::max({grid.at(a.i0, b.i0), grid.at(a.i0, b.i1), grid.at(a.i1, b.i0),
                                  grid.at(a.i1, b.i1)});
      out.at(y, x) = std::clamp(v, lo, hi);
    }
  }
  return out;
}

Grid2D gaussian_blur(const Grid2D& grid, double sigma, std::size_t radius) {
  if (!(sigma > 0.0) || radius == 0) return grid;
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;

  auto reflect = [](std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
  };
  const auto r = static_cast<std::ptrdiff_t>(radius);
  Grid2D tmp(grid.rows, grid.cols, 0.0, grid.resolution);
  for (std::size_t y = 0; y < grid.rows; ++y)
    for (std::size_t x = 0; x < grid.cols; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -r; j <= r; ++j)
        acc += k[j + r] * grid.at(y, reflect(static_cast<std::ptrdiff_t>(x) + j, grid.cols));
      tmp.at(y, x) = acc;
    }
  Grid2D out(grid.rows, grid.cols, 0.0, grid.resolution);
  for (std::size_t y = 0; y < grid.rows; ++y)
    for (std::size_t x = 0; x < grid.cols; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -r; j <= r; ++j)
        acc += k[j + r] * tmp.at(reflect(static_cast<std::ptrdiff_t>(y) + j, grid.rows), x);
      out.at(y, x) = acc;
    }
  return out;
}

}  // namespace tricd
