#include "tricd/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tricd/error.hpp"
#include "tricd/rng.hpp"
#include "tricd/vseq_io.hpp"

namespace tricd {

void BandpassParams::validate() const {
  if (window_w < 2) throw Error(ErrorCode::InvalidArgument, "window_w must be >= 2");
  if (!(lambda_low >= 0.0 && lambda_low < lambda_high))
    throw Error(ErrorCode::InvalidArgument, "need 0 <= lambda_low < lambda_high");
  if (!(gaussian_sigma_pi > 0.0)) throw Error(ErrorCode::InvalidArgument, "gaussian sigma must be > 0");
}

std::vector<Grid2D> flow_magnitudes(const FrameSequence& seq, const FarnebackParams& params) {
  const FrameSequence gray = to_grayscale(seq);
  std::vector<Grid2D> out;
  if (gray.frames() < 2) return out;
  out.reserve(gray.frames() - 1);
  Grid2D prev = channel_grid(gray, 0, 0);
  for (std::size_t t = 1; t < gray.frames(); ++t) {
    Grid2D next = channel_grid(gray, t, 0);
    out.push_back(motion_magnitude(farneback_flow(prev, next, params)));
    prev = std::move(next);
  }
  return out;
}

std::vector<Grid2D> smooth_magnitudes(const std::vector<Grid2D>& mags, const BandpassParams& params) {
  std::vector<Grid2D> out;
  out.reserve(mags.size());
  for (const auto& m : mags) out.push_back(gaussian_blur(m, params.gaussian_sigma_pi, params.gaussian_radius));
  return out;
}

double bandpass_response(double m, double mean, double std_dev, double lambda_low,
                         double lambda_high) {
  if (m > mean + lambda_high * std_dev) return 0.0;
  return std::max(m - (mean + lambda_low * std_dev), 0.0);
}

std::vector<Grid2D> temporal_bandpass(const std::vector<Grid2D>& mags, const BandpassParams& params) {
  params.validate();
  std::vector<Grid2D> out;
  if (mags.empty()) return out;
  const std::size_t n = mags.size();
  for (const auto& m : mags) {
    if (m.rows != mags[0].rows || m.cols != mags[0].cols)
      throw Error(ErrorCode::ShapeMismatch, "magnitude grids differ in size");
  }
  const std::size_t w = std::min(params.window_w, n);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto start = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(params.window_w / 2), 0,
        static_cast<std::ptrdiff_t>(n - w)));
    Grid2D s(mags[i].rows, mags[i].cols, 0.0, mags[i].resolution);
    for (std::size_t p = 0; p < s.size(); ++p) {
      double mean = 0.0;
      for (std::size_t j = start; j < start + w; ++j) mean += mags[j].values[p];
      mean /= static_cast<double>(w);
      double var = 0.0;
      for (std::size_t j = start; j < start + w; ++j) {
        const double d = mags[j].values[p] - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(w));
      s.values[p] = bandpass_response(mags[i].values[p], mean, sd, params.lambda_low, params.lambda_high);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Grid2D> motion_saliency(const FrameSequence& seq, const FarnebackParams& flow,
                                    const BandpassParams& band) {
  return temporal_bandpass(smooth_magnitudes(flow_magnitudes(seq, flow), band), band);
}

ToySpatialExtractor::ToySpatialExtractor(std::uint64_t seed, std::size_t dim, std::size_t heads)
    : dim_(dim), heads_(heads) {
  if (heads == 0 || dim % heads != 0)
    throw Error(ErrorCode::InvalidArgument, "dim must be a multiple of heads");
  Rng rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t n, double scale) {
    v.resize(n);
    for (double& x : v) x = rng.normal() * scale;
  };
  fill(w_embed_, dim * 3, 1.0);
  fill(b_embed_, dim, 0.1);
  fill(cls_, dim, 1.0);
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  fill(wq_, dim * dim, s);
  fill(wk_, dim * dim, s);
}

std::vector<Grid2D> ToySpatialExtractor::compute(const FrameSequence& seq, std::size_t patch) const {
  if (patch == 0 || seq.height() % patch != 0 || seq.width() % patch != 0) {
    throw Error(ErrorCode::IndivisibleDimensions,
                std::to_string(seq.height()) + "x" + std::to_string(seq.width()) +
                    " is not divisible by patch " + std::to_string(patch));
  }
  const std::size_t gh = seq.height() / patch, gw = seq.width() / patch, np = gh * gw;
  const std::size_t dh = dim_ / heads_;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Grid2D> out;
  out.reserve(seq.frames());

  for (std::size_t t = 0; t < seq.frames(); ++t) {
    // tokens[0] = CLS, tokens[1..np] = patches
    std::vector<std::vector<double>> tokens(np + 1, std::vector<double>(dim_));
    tokens[0] = cls_;
    for (std::size_t py = 0; py < gh; ++py)
      for (std::size_t px = 0; px < gw; ++px) {
        double mean[3] = {0.0, 0.0, 0.0};
        for (std::size_t y = py * patch; y < (py + 1) * patch; ++y)
          for (std::size_t x = px * patch; x < (px + 1) * patch; ++x)
            for (std::size_t c = 0; c < 3; ++c) mean[c] += seq.at(t, y, x, seq.channels() == 3 ? c : 0);
        for (double& m : mean) m /= static_cast<double>(patch * patch);
        auto& tok = tokens[1 + py * gw + px];
        for (std::size_t d = 0; d < dim_; ++d)
          tok[d] = b_embed_[d] + w_embed_[d * 3] * mean[0] + w_embed_[d * 3 + 1] * mean[1] +
                   w_embed_[d * 3 + 2] * mean[2];
      }

    auto project = [&](const std::vector<double>& w, const std::vector<double>& x) {
      std::vector<double> y(dim_, 0.0);
      for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = 0; j < dim_; ++j) y[i] += w[i * dim_ + j] * x[j];
      return y;
    };
    const auto q = project(wq_, tokens[0]);
    std::vector<std::vector<double>> keys;
    keys.reserve(np + 1);
    for (const auto& tok : tokens) keys.push_back(project(wk_, tok));

    std::vector<double> row(np, 0.0);
    std::vector<double> logits(np + 1);
    for (std::size_t h = 0; h < heads_; ++h) {
      for (std::size_t j = 0; j <= np; ++j) {
        double dot = 0.0;
        for (std::size_t d = h * dh; d < (h + 1) * dh; ++d) dot += q[d] * keys[j][d];
        logits[j] = dot * inv_sqrt;
      }
      const double mx = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double& l : logits) z += (l = std::exp(l - mx));
      for (std::size_t j = 0; j < np; ++j) row[j] += logits[j + 1] / z / static_cast<double>(heads_);
    }

    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    Grid2D g(gh, gw, 0.0, Resolution::Patch);
    for (std::size_t j = 0; j < np; ++j) z += (g.values[j] = std::exp(row[j] - mx));
    for (double& v : g.values) v /= z;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Grid2D> toy_spatial_saliency(const FrameSequence& seq, std::uint64_t extractor_seed,
                                         std::size_t patch) {
  return ToySpatialExtractor(extractor_seed).compute(seq, patch);
}

std::vector<Grid2D> load_spatial_saliency(const std::filesystem::path& path, std::size_t frames,
                                          std::size_t rows, std::size_t cols) {
  const FrameSequence s = load_vseq(path);
  if (s.frames() != frames || s.height() != rows || s.width() != cols || s.channels() != 1) {
    throw Error(ErrorCode::ShapeMismatch,
                path.string() + " has shape " + std::to_string(s.frames()) + "x" +
                    std::to_string(s.height()) + "x" + std::to_string(s.width()) + "x" +
                    std::to_string(s.channels()) + ", expected " + std::to_string(frames) + "x" +
                    std::to_string(rows) + "x" + std::to_string(cols) + "x1");
  }
  std::vector<Grid2D> out;
  out.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    Grid2D g = channel_grid(s, t, 0);
    g.resolution = Resolution::Patch;
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<Grid2D> FileSpatialSaliency::compute(const FrameSequence& seq, std::size_t patch) const {
  if (patch == 0 || seq.height() % patch != 0 || seq.width() % patch != 0) {
    throw Error(ErrorCode::IndivisibleDimensions, "frame size not divisible by patch");
  }
  return load_spatial_saliency(path_, seq.frames(), seq.height() / patch, seq.width() / patch);
}

namespace {

std::vector<Grid2D> normalize_stream(std::vector<Grid2D> grids, std::size_t h, std::size_t w) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& g : grids) {
    lo = std::min(lo, g.min());
    hi = std::max(hi, g.max());
  }
  const double range = hi - lo;
  for (auto& g : grids) {
    for (double& v : g.values) v = range > 0.0 ? std::clamp((v - lo) / range, 0.0, 1.0) : 0.0;
    g = resize_bilinear(g, h, w);
    g.resolution = Resolution::Patch;
  }
  return grids;
}

}  // namespace

SaliencyPair normalize_and_align(const std::vector<Grid2D>& spatial,
                                 const std::vector<Grid2D>& motion, std::size_t patch_h,
                                 std::size_t patch_w) {
  if (spatial.empty()) throw Error(ErrorCode::FrameCountMismatch, "no spatial frames");
  std::vector<Grid2D> mot = motion;
  if (mot.empty()) {
    mot.assign(spatial.size(), Grid2D(patch_h, patch_w, 0.0, Resolution::Patch));
  } else if (mot.size() + 1 == spatial.size()) {
    mot.insert(mot.begin(), mot.front());
  }
  if (mot.size() != spatial.size()) {
    throw Error(ErrorCode::FrameCountMismatch,
                std::to_string(spatial.size()) + " spatial vs " + std::to_string(mot.size()) +
                    " motion frames after padding");
  }
  return {normalize_stream(spatial, patch_h, patch_w), normalize_stream(std::move(mot), patch_h, patch_w)};
}

std::vector<Grid2D> fuse(const SaliencyPair& pair, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorCode::BetaOutOfRange, "beta = " + std::to_string(beta));
  }
  if (pair.spatial.size() != pair.motion.size()) {
    throw Error(ErrorCode::FrameCountMismatch, "streams differ in frame count");
  }
  std::vector<Grid2D> out;
  out.reserve(pair.spatial.size());
  for (std::size_t t = 0; t < pair.spatial.size(); ++t) {
    const auto& s = pair.spatial[t];
    const auto& m = pair.motion[t];
    if (s.rows != m.rows || s.cols != m.cols) throw Error(ErrorCode::ShapeMismatch, "stream grids differ");
    Grid2D g(s.rows, s.cols, 0.0, s.resolution);
    for (std::size_t i = 0; i < g.size(); ++i) {
      // Clamp guards the convex-hull property against rounding.
      const double v = beta * s.values[i] + (1.0 - beta) * m.values[i];
      g.values[i] = std::clamp(v, std::min(s.values[i], m.values[i]), std::max(s.values[i], m.values[i]));
    }
    out.push_back(std::move(g));
  }
  return out;
}

SaliencyPair compute_saliency(const FrameSequence& seq, const SpatialSaliencyProvider& spatial,
                              std::size_t patch, const FarnebackParams& flow,
                              const BandpassParams& band) {
  auto spa = spatial.compute(seq, patch);
  auto mot = motion_saliency(seq, flow, band);
  return normalize_and_align(spa, mot, seq.height() / patch, seq.width() / patch);
}

FrameSequence grids_to_sequence(const std::vector<Grid2D>& grids) {
  if (grids.empty()) throw Error(ErrorCode::InvalidArgument, "no grids to pack");
  const std::size_t h = grids[0].rows, w = grids[0].cols;
  std::vector<float> data;
  data.reserve(grids.size() * h * w);
  for (const auto& g : grids) {
    if (g.rows != h || g.cols != w) throw Error(ErrorCode::ShapeMismatch, "grids differ in size");
    for (double v : g.values) data.push_back(std::clamp(static_cast<float>(v), 0.0f, 1.0f));
  }
  return FrameSequence(grids.size(), h, w, 1, std::move(data));
}

}  // namespace tricd
