#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "tricd/flow.hpp"
#include "tricd/rng.hpp"

namespace testutil {

// Smooth textured pattern with seeded phases.
struct Pattern {
  double ph[4];
  explicit Pattern(std::uint64_t seed) {
    tricd::Rng rng(seed);
    for (double& p : ph) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  double operator()(double x, double y) const {
    const double tau = 2.0 * std::numbers::pi;
    return 0.5 + 0.15 * std::sin(tau * x / 19 + ph[0]) * std::cos(tau * y / 23 + ph[1]) +
           0.1 * std::sin(tau * (x + y) / 13 + ph[2]) + 0.1 * std::cos(tau * (x - y) / 29 + ph[3]);
  }
};

inline tricd::Grid2D render(const Pattern& p, double dx, double dy) {
  tricd::Grid2D g(64, 64);
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) g.at(y, x) = p(x - dx, y - dy);
  return g;
}

struct InteriorMean {
  double fx = 0, fy = 0, epe = 0;
};

inline InteriorMean interior(const tricd::FlowField& f, double ex, double ey) {
  InteriorMean m;
  int n = 0;
  for (std::size_t y = 8; y < 56; ++y)
    for (std::size_t x = 8; x < 56; ++x) {
      m.fx += f.fx.at(y, x);
      m.fy += f.fy.at(y, x);
      m.epe += std::hypot(f.fx.at(y, x) - ex, f.fy.at(y, x) - ey);
      ++n;
    }
  m.fx /= n;
  m.fy /= n;
  m.epe /= n;
  return m;
}

}  // namespace testutil
