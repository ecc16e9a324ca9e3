#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "flow_fixture.hpp"
#include "test_util.hpp"
#include "tricd/error.hpp"
#include "tricd/flow.hpp"
#include "tricd/saliency.hpp"
#include "tricd/vseq_io.hpp"

using namespace tricd;
using testutil::interior;
using testutil::Pattern;
using testutil::render;

namespace {

double max_abs(const FlowField& f) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.fx.size(); ++i) m = std::max({m, std::abs(f.fx.values[i]), std::abs(f.fy.values[i])});
  return m;
}

std::vector<Grid2D> window(std::initializer_list<double> values) {
  std::vector<Grid2D> out;
  for (double v : values) out.emplace_back(1, 1, v);
  return out;
}

// Per-pixel population mean/std oracle.
double oracle_bandpass(const std::vector<double>& w, double m, double lo, double hi) {
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / w.size();
  double var = 0.0;
  for (double v : w) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / w.size());
  return std::max(m - (mean + lo * sd), 0.0) * (m <= mean + hi * sd ? 1.0 : 0.0);
}

}  // namespace

TEST_CASE("farneback parameters validate") {
  FarnebackParams p;
  CHECK_NOTHROW(p.validate());
  p.poly_window = 4;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.pyramid_scale = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.pyramid_levels = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("flow of identical frames is zero") {
  Rng rng(3);
  Grid2D a(64, 64);
  for (double& v : a.values) v = rng.uniform();
  CHECK(max_abs(farneback_flow(a, a)) <= 1e-4);
  const Pattern p(7);
  const auto g = render(p, 0, 0);
  CHECK(max_abs(farneback_flow(g, g)) <= 1e-4);
}

TEST_CASE("flow recovers a one pixel translation") {
  const Pattern p(2025);
  const auto base = render(p, 0, 0);
  const auto right = interior(farneback_flow(base, render(p, 1, 0)), 1, 0);
  CHECK(right.fx >= 0.5);
  CHECK(right.fx <= 1.5);
  CHECK(std::abs(right.fy) <= 0.5);
  CHECK(right.epe <= 0.5);

  const auto down = interior(farneback_flow(base, render(p, 0, 1)), 0, 1);
  CHECK(down.fy > 0.0);
  CHECK(std::abs(down.fx) <= 0.5);
  CHECK(down.epe <= 0.5);

  const auto left = interior(farneback_flow(base, render(p, -1, 0)), -1, 0);
  CHECK(left.fx < -0.5);
}

TEST_CASE("flow input errors") {
  CHECK_THROWS_AS(farneback_flow(Grid2D(8, 8), Grid2D(8, 9)), Error);
  try {
    farneback_flow(Grid2D(4, 40), Grid2D(4, 40));
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooSmall);
  }
}

TEST_CASE("motion magnitude") {
  FlowField f{Grid2D(1, 2), Grid2D(1, 2)};
  f.fx.at(0, 0) = 3;
  f.fy.at(0, 0) = 4;
  const auto m = motion_magnitude(f);
  CHECK(m.at(0, 0) == 5.0);
  CHECK(m.at(0, 1) == 0.0);
  FlowField neg{f.fx, f.fy};
  for (double& v : neg.fx.values) v = -v;
  for (double& v : neg.fy.values) v = -v;
  CHECK(motion_magnitude(neg) == m);
}

TEST_CASE("band-pass response hand cases") {
  // window [0,0,0,0,10]: mean 2, population std 4
  CHECK(bandpass_response(10, 2, 4, 0.1, 0.9) == 0.0);
  CHECK(std::abs(bandpass_response(3, 2, 4, 0.1, 0.9) - 0.6) <= 1e-9);
  CHECK(bandpass_response(5, 5, 0, 0.1, 0.9) == 0.0);

  BandpassParams bp;
  const auto out = temporal_bandpass(window({0, 0, 0, 0, 10}), bp);
  REQUIRE(out.size() == 5);
  CHECK(out[4].at(0, 0) == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(out[i].at(0, 0) == 0.0);

  const auto flat = temporal_bandpass(window({2, 2, 2, 2, 2, 2, 2}), bp);
  for (const auto& g : flat) CHECK(g.at(0, 0) == 0.0);
}

TEST_CASE("band-pass matches a per-pixel oracle") {
  BandpassParams bp;
  Rng rng(17);
  for (std::size_t len : {1u, 3u, 5u, 9u}) {
    std::vector<double> series(len);
    for (double& v : series) v = rng.uniform(0.0, 4.0);
    std::vector<Grid2D> mags;
    for (double v : series) mags.emplace_back(1, 1, v);
    const auto out = temporal_bandpass(mags, bp);
    for (std::size_t i = 0; i < len; ++i) {
      // window of width W kept inside the sequence
      const std::size_t w = std::min<std::size_t>(bp.window_w, len);
      std::size_t start = i >= w / 2 ? i - w / 2 : 0;
      start = std::min(start, len - w);
      const std::vector<double> win(series.begin() + start, series.begin() + start + w);
      CHECK(out[i].at(0, 0) == doctest::Approx(oracle_bandpass(win, series[i], 0.1, 0.9)).epsilon(1e-12));
      CHECK(out[i].at(0, 0) >= 0.0);
    }
  }
}

TEST_CASE("motion saliency shape") {
  Rng rng(5);
  const auto seq = testutil::random_sequence(rng, 4, 32, 32, 3);
  const auto m = motion_saliency(seq);
  CHECK(m.size() == 3);
  for (const auto& g : m) {
    CHECK(g.rows == 32);
    CHECK(g.min() >= 0.0);
  }
  CHECK(motion_saliency(testutil::random_sequence(rng, 1, 32, 32, 1)).empty());
}

TEST_CASE("toy spatial extractor") {
  Rng rng(6);
  const auto seq = testutil::random_sequence(rng, 2, 64, 48, 3);
  ToySpatialExtractor ex(2025);
  const auto a = ex.compute(seq, 16);
  REQUIRE(a.size() == 2);
  for (const auto& g : a) {
    CHECK(g.rows == 4);
    CHECK(g.cols == 3);
    double sum = 0;
    for (double v : g.values) sum += v;
    CHECK(std::abs(sum - 1.0) <= 1e-5);
  }
  CHECK(ToySpatialExtractor(2025).compute(seq, 16) == a);
  CHECK(toy_spatial_saliency(seq, 2025, 16) == a);
  CHECK(ToySpatialExtractor(2026).compute(seq, 16) != a);

  // Identical patches give a uniform attention row.
  const auto flat = ToySpatialExtractor(1).compute(FrameSequence::filled(1, 32, 32, 3, 0.3f), 16);
  for (double v : flat[0].values) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  try {
    ex.compute(seq, 10);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IndivisibleDimensions);
  }
}

TEST_CASE("spatial maps from file") {
  testutil::TempDir dir("sal");
  std::vector<Grid2D> grids;
  Rng rng(8);
  for (int t = 0; t < 3; ++t) {
    Grid2D g(2, 2, 0.0, Resolution::Patch);
    for (double& v : g.values) v = static_cast<float>(rng.uniform());
    grids.push_back(g);
  }
  save_vseq(grids_to_sequence(grids), dir / "m.vseq");
  const auto back = load_spatial_saliency(dir / "m.vseq", 3, 2, 2);
  REQUIRE(back.size() == 3);
  for (int t = 0; t < 3; ++t) CHECK(back[t].values == grids[t].values);
  try {
    load_spatial_saliency(dir / "m.vseq", 4, 2, 2);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
  const FileSpatialSaliency provider(dir / "m.vseq");
  CHECK(provider.compute(FrameSequence::filled(3, 32, 32, 3, 0.f), 16).size() == 3);
}

TEST_CASE("normalize and align") {
  std::vector<Grid2D> spatial{Grid2D(2, 2, 2.0), Grid2D(2, 2, 6.0)};
  spatial[0].at(0, 0) = 4.0;
  std::vector<Grid2D> motion{Grid2D(2, 2, 3.0)};
  const auto pair = normalize_and_align(spatial, motion, 2, 2);
  CHECK(pair.spatial[0].at(0, 0) == 0.5);  // (4 - 2) / (6 - 2)
  CHECK(pair.spatial[0].at(1, 1) == 0.0);
  CHECK(pair.spatial[1].at(0, 0) == 1.0);
  REQUIRE(pair.motion.size() == 2);  // padded by repeating the first map
  for (const auto& g : pair.motion)
    for (double v : g.values) CHECK(v == 0.0);  // constant stream

  const auto resized = normalize_and_align(spatial, motion, 4, 3);
  for (const auto& g : resized.spatial) {
    CHECK(g.rows == 4);
    CHECK(g.cols == 3);
    CHECK(g.min() >= 0.0);
    CHECK(g.max() <= 1.0);
  }

  std::vector<Grid2D> three{Grid2D(2, 2), Grid2D(2, 2), Grid2D(2, 2)};
  try {
    normalize_and_align(spatial, three, 2, 2);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::FrameCountMismatch);
  }
}

TEST_CASE("fusion") {
  SaliencyPair p{{Grid2D(1, 1, 0.2)}, {Grid2D(1, 1, 0.8)}};
  CHECK(fuse(p, 1.0)[0].at(0, 0) == 0.2);
  CHECK(fuse(p, 0.0)[0].at(0, 0) == 0.8);
  CHECK(fuse(p, 0.5)[0].at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  try {
    fuse(p, 1.5);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BetaOutOfRange);
  }

  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    SaliencyPair q{{Grid2D(3, 3)}, {Grid2D(3, 3)}};
    for (double& v : q.spatial[0].values) v = rng.uniform();
    for (double& v : q.motion[0].values) v = rng.uniform();
    const double beta = rng.uniform();
    const auto f = fuse(q, beta)[0];
    for (std::size_t k = 0; k < 9; ++k) {
      CHECK(f.values[k] >= std::min(q.spatial[0].values[k], q.motion[0].values[k]));
      CHECK(f.values[k] <= std::max(q.spatial[0].values[k], q.motion[0].values[k]));
    }
  }
}

TEST_CASE("full saliency pipeline on a moving block") {
  std::vector<float> data;
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t y = 0; y < 64; ++y)
      for (std::size_t x = 0; x < 64; ++x) {
        const bool inside = y >= 24 && y < 40 && x >= 8 + 3 * t && x < 24 + 3 * t;
        data.push_back(inside ? 0.9f : 0.1f);
      }
  const FrameSequence seq(6, 64, 64, 1, data);
  const auto pair = compute_saliency(seq, ToySpatialExtractor(1), 16);
  REQUIRE(pair.spatial.size() == 6);
  REQUIRE(pair.motion.size() == 6);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(pair.motion[t].rows == 4);
    CHECK(pair.motion[t].min() >= 0.0);
    CHECK(pair.motion[t].max() <= 1.0);
  }
}
