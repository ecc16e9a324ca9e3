#pragma once

#include <cstddef>

#include "tricd/video.hpp"

namespace tricd {

struct FlowField {
  Grid2D fx;  // horizontal displacement, px/frame
  Grid2D fy;  // vertical displacement, px/frame
};

struct FarnebackParams {
  std::size_t pyramid_levels = 2;  // including the full-resolution level
  double pyramid_scale = 0.5;
  std::size_t poly_window = 5;
  double poly_sigma = 1.1;
  std::size_t iterations_per_level = 3;
  std::size_t smoothing_window = 13;

  void validate() const;
};

// Dense two-frame flow by polynomial expansion, coarse to fine, with box
// smoothing of the displacement constraints. Follows the convention
// prev(y, x) ~ next(y + fy, x + fx). Inputs are intensities in [0, 1].
// Throws ShapeMismatch, TooSmall (min(H, W) < poly_window).
FlowField farneback_flow(const Grid2D& prev, const Grid2D& next, const FarnebackParams& params = {});

Grid2D motion_magnitude(const FlowField& flow);

}  // namespace tricd
