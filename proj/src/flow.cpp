#include "tricd/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "tricd/error.hpp"

namespace tricd {

void FarnebackParams::validate() const {
  auto odd_ok = [](std::size_t w) { return w >= 3 && w % 2 == 1; };
  if (pyramid_levels < 1) throw Error(ErrorCode::InvalidArgument, "pyramid_levels must be >= 1");
  if (!(pyramid_scale > 0.0 && pyramid_scale < 1.0))
    throw Error(ErrorCode::InvalidArgument, "pyramid_scale must be in (0, 1)");
  if (!odd_ok(poly_window) || !odd_ok(smoothing_window))
    throw Error(ErrorCode::InvalidArgument, "windows must be odd and >= 3");
  if (!(poly_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "poly_sigma must be > 0");
  if (iterations_per_level < 1)
    throw Error(ErrorCode::InvalidArgument, "iterations_per_level must be >= 1");
}

namespace {

// The regularizer in the normal equations is tuned for 8-bit intensities.
constexpr double kIntensityScale = 255.0;
constexpr std::size_t kMinLevelSize = 16;

using Coeffs = std::array<double, 5>;  // ry, rx, ryy, rxx, rxy

std::size_t clampi(std::ptrdiff_t i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

// Inverse of a small dense matrix by Gauss-Jordan with partial pivoting.
template <std::size_t N>
std::array<std::array<double, N>, N> invert(std::array<std::array<double, N>, N> a) {
  std::array<std::array<double, N>, N> inv{};
  for (std::size_t i = 0; i < N; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < N; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(inv[c], inv[p]);
    const double d = a[c][c];
    for (std::size_t j = 0; j < N; ++j) {
      a[c][j] /= d;
      inv[c][j] /= d;
    }
    for (std::size_t r = 0; r < N; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < N; ++j) {
        a[r][j] -= f * a[c][j];
        inv[r][j] -= f * inv[c][j];
      }
    }
  }
  return inv;
}

// Per-pixel quadratic fit f ~ r0 + b^T p + p^T A p over a Gaussian-weighted
// (2n+1)^2 neighbourhood, p = (y, x).
std::vector<Coeffs> poly_expand(const Grid2D& img, std::size_t n_half, double sigma) {
  const auto n = static_cast<std::ptrdiff_t>(n_half);
  std::vector<double> g(2 * n_half + 1);
  double gsum = 0.0;
  for (std::ptrdiff_t k = -n; k <= n; ++k) {
    g[k + n] = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
    gsum += g[k + n];
  }
  for (double& v : g) v /= gsum;

  // Normal-equation matrix for basis (1, x, y, x^2, y^2, xy).
  std::array<std::array<double, 6>, 6> G{};
  for (std::ptrdiff_t y = -n; y <= n; ++y)
    for (std::ptrdiff_t x = -n; x <= n; ++x) {
      const double w = g[y + n] * g[x + n];
      const std::array<double, 6> b{1.0,
                                    static_cast<double>(x),
                                    static_cast<double>(y),
                                    static_cast<double>(x * x),
                                    static_cast<double>(y * y),
                                    static_cast<double>(x * y)};
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) G[i][j] += w * b[i] * b[j];
    }
  const auto iG = invert(G);

  const std::size_t H = img.rows, W = img.cols;
  // Vertical pass: moments 0, 1, 2 in y.
  std::vector<std::array<double, 3>> v(H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      std::array<double, 3> acc{};
      for (std::ptrdiff_t k = -n; k <= n; ++k) {
        const double s = img.at(clampi(static_cast<std::ptrdiff_t>(y) + k, H), x) * g[k + n];
        const auto kd = static_cast<double>(k);
        acc[0] += s;
        acc[1] += s * kd;
        acc[2] += s * kd * kd;
      }
      v[y * W + x] = acc;
    }

  std::vector<Coeffs> out(H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      // Projections onto (1, x, y, x^2, y^2, xy).
      std::array<double, 6> b{};
      for (std::ptrdiff_t k = -n; k <= n; ++k) {
        const auto& m = v[y * W + clampi(static_cast<std::ptrdiff_t>(x) + k, W)];
        const double gk = g[k + n];
        const auto kd = static_cast<double>(k);
        b[0] += gk * m[0];
        b[1] += gk * kd * m[0];
        b[2] += gk * m[1];
        b[3] += gk * kd * kd * m[0];
        b[4] += gk * m[2];
        b[5] += gk * kd * m[1];
      }
      std::array<double, 6> c{};
      for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) c[i] += iG[i][j] * b[j];
      // A = [[c4, c5/2], [c5/2, c3]] in (y, x); stored as ryy, rxx, rxy = c5/2.
      out[y * W + x] = {c[2], c[1], c[4], c[3], c[5] * 0.5};
    }
  return out;
}

// Builds the per-pixel 2x2 normal equations G d = h for the displacement.
std::vector<Coeffs> update_matrices(const std::vector<Coeffs>& R0, const std::vector<Coeffs>& R1,
                                    const Grid2D& fx, const Grid2D& fy) {
  const std::size_t H = fx.rows, W = fx.cols;
  constexpr std::array<double, 5> kBorder{0.14, 0.14, 0.4472, 0.4472, 0.4472};
  std::vector<Coeffs> M(H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      const double dx = fx.values[i], dy = fy.values[i];
      const double px = static_cast<double>(x) + dx, py = static_cast<double>(y) + dy;
      const auto x1 = static_cast<std::ptrdiff_t>(std::floor(px));
      const auto y1 = static_cast<std::ptrdiff_t>(std::floor(py));
      const double ax = px - static_cast<double>(x1), ay = py - static_cast<double>(y1);
      const auto& r0 = R0[i];
      double r2, r3, r4, r5, r6;
      if (x1 >= 0 && y1 >= 0 && x1 < static_cast<std::ptrdiff_t>(W) &&
          y1 < static_cast<std::ptrdiff_t>(H)) {
        // Bilinear sample of the second expansion at the displaced position.
        const auto xa = static_cast<std::size_t>(x1), ya = static_cast<std::size_t>(y1);
        const std::size_t xb = std::min(xa + 1, W - 1), yb = std::min(ya + 1, H - 1);
        const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
        Coeffs r1{};
        for (std::size_t k = 0; k < 5; ++k)
          r1[k] = w00 * R1[ya * W + xa][k] + w01 * R1[ya * W + xb][k] + w10 * R1[yb * W + xa][k] +
                  w11 * R1[yb * W + xb][k];
        r2 = r1[0];
        r3 = r1[1];
        r4 = (r0[2] + r1[2]) * 0.5;
        r5 = (r0[3] + r1[3]) * 0.5;
        r6 = (r0[4] + r1[4]) * 0.5;
      } else {
        r2 = r3 = 0.0;
        r4 = r0[2];
        r5 = r0[3];
        r6 = r0[4];
      }
      r2 = (r0[0] - r2) * 0.5;
      r3 = (r0[1] - r3) * 0.5;
      r2 += r4 * dy + r6 * dx;
      r3 += r6 * dy + r5 * dx;

      const std::size_t edge = std::min({x, y, W - 1 - x, H - 1 - y});
      if (edge < kBorder.size()) {
        const double s = kBorder[edge];
        r2 *= s;
        r3 *= s;
        r4 *= s;
        r5 *= s;
        r6 *= s;
      }
      M[i] = {r4 * r4 + r6 * r6, (r4 + r5) * r6, r5 * r5 + r6 * r6, r4 * r2 + r6 * r3,
              r6 * r2 + r5 * r3};
    }
  return M;
}

std::vector<Coeffs> box_blur(const std::vector<Coeffs>& M, std::size_t H, std::size_t W,
                             std::size_t window) {
  const auto r = static_cast<std::ptrdiff_t>(window / 2);
  const double norm = 1.0 / static_cast<double>(window);
  std::vector<Coeffs> tmp(H * W), out(H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      Coeffs acc{};
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        const auto& m = M[clampi(static_cast<std::ptrdiff_t>(y) + k, H) * W + x];
        for (std::size_t c = 0; c < 5; ++c) acc[c] += m[c];
      }
      for (double& a : acc) a *= norm;
      tmp[y * W + x] = acc;
    }
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      Coeffs acc{};
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        const auto& m = tmp[y * W + clampi(static_cast<std::ptrdiff_t>(x) + k, W)];
        for (std::size_t c = 0; c < 5; ++c) acc[c] += m[c];
      }
      for (double& a : acc) a *= norm;
      out[y * W + x] = acc;
    }
  return out;
}

void solve_flow(const std::vector<Coeffs>& M, Grid2D& fx, Grid2D& fy) {
  for (std::size_t i = 0; i < M.size(); ++i) {
    const auto& m = M[i];
    const double g11 = m[0], g12 = m[1], g22 = m[2], h1 = m[3], h2 = m[4];
    const double idet = 1.0 / (g11 * g22 - g12 * g12 + 1e-3);
    fx.values[i] = (g11 * h2 - g12 * h1) * idet;
    fy.values[i] = (g22 * h1 - g12 * h2) * idet;
  }
}

Grid2D level_image(const Grid2D& img, double scale, std::size_t h, std::size_t w) {
  if (h == img.rows && w == img.cols) return img;
  const double sigma = (1.0 / scale - 1.0) * 0.5;
  const auto radius = static_cast<std::size_t>(std::max(1.0, std::round(sigma * 2.5)));
  return resize_bilinear(gaussian_blur(img, sigma, radius), h, w);
}

}  // namespace

FlowField farneback_flow(const Grid2D& prev, const Grid2D& next, const FarnebackParams& params) {
  params.validate();
  if (prev.rows != next.rows || prev.cols != next.cols) {
    throw Error(ErrorCode::ShapeMismatch, "flow frames differ in size");
  }
  if (std::min(prev.rows, prev.cols) < params.poly_window) {
    throw Error(ErrorCode::TooSmall, "frame " + std::to_string(prev.rows) + "x" +
                                         std::to_string(prev.cols) + " smaller than poly_window " +
                                         std::to_string(params.poly_window));
  }
  Grid2D a = prev, b = next;
  for (double& v : a.values) v *= kIntensityScale;
  for (double& v : b.values) v *= kIntensityScale;

  std::size_t top = 0;
  {
    double s = 1.0;
    while (top + 1 < params.pyramid_levels) {
      s *= params.pyramid_scale;
      if (static_cast<double>(std::min(prev.rows, prev.cols)) * s < kMinLevelSize) break;
      ++top;
    }
  }

  Grid2D fx, fy;
  for (std::size_t k = top + 1; k-- > 0;) {
    const double scale = std::pow(params.pyramid_scale, static_cast<double>(k));
    const auto h = static_cast<std::size_t>(std::lround(static_cast<double>(prev.rows) * scale));
    const auto w = static_cast<std::size_t>(std::lround(static_cast<double>(prev.cols) * scale));
    if (k == top) {
      fx = Grid2D(h, w);
      fy = Grid2D(h, w);
    } else {
      fx = resize_bilinear(fx, h, w);
      fy = resize_bilinear(fy, h, w);
      for (double& v : fx.values) v /= params.pyramid_scale;
      for (double& v : fy.values) v /= params.pyramid_scale;
    }
    const auto R0 = poly_expand(level_image(a, scale, h, w), params.poly_window, params.poly_sigma);
    const auto R1 = poly_expand(level_image(b, scale, h, w), params.poly_window, params.poly_sigma);
    auto M = update_matrices(R0, R1, fx, fy);
    for (std::size_t it = 0; it < params.iterations_per_level; ++it) {
      solve_flow(box_blur(M, h, w, params.smoothing_window), fx, fy);
      if (it + 1 < params.iterations_per_level) M = update_matrices(R0, R1, fx, fy);
    }
  }
  fx.resolution = fy.resolution = Resolution::Pixel;
  return {std::move(fx), std::move(fy)};
}

Grid2D motion_magnitude(const FlowField& flow) {
  if (flow.fx.rows != flow.fy.rows || flow.fx.cols != flow.fy.cols) {
    throw Error(ErrorCode::ShapeMismatch, "flow components differ in size");
  }
  Grid2D m(flow.fx.rows, flow.fx.cols, 0.0, flow.fx.resolution);
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = std::hypot(flow.fx.values[i], flow.fy.values[i]);
  return m;
}

}  // namespace tricd
