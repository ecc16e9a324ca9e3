#include "tricd/perturbation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tricd/error.hpp"

namespace tricd {

ToolCategory category_of(Tool t) {
  switch (t) {
    case Tool::Sample:
    case Tool::Reverse:
    case Tool::Shuffle:
      return ToolCategory::Temporal;
    default:
      return ToolCategory::Spatial;
  }
}

std::string_view tool_name(Tool t) {
  switch (t) {
    case Tool::Sample: return "Sample";
    case Tool::Reverse: return "Reverse";
    case Tool::Shuffle: return "Shuffle";
    case Tool::Blur: return "Blur";
    case Tool::Noise: return "Noise";
    case Tool::Grayscale: return "Grayscale";
    case Tool::HorizontalMirror: return "HorizontalMirror";
    case Tool::VerticalMirror: return "VerticalMirror";
  }
  return "?";
}

Tool parse_tool(std::string_view name) {
  std::string key;
  for (char ch : name) {
    if (ch == '_' || ch == '-' || ch == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  for (Tool t : kAllTools) {
    std::string canonical;
    for (char ch : tool_name(t)) canonical.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (key == canonical) return t;
  }
  if (key == "hmirror" || key == "hflip") return Tool::HorizontalMirror;
  if (key == "vmirror" || key == "vflip") return Tool::VerticalMirror;
  if (key == "gray") return Tool::Grayscale;
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation tool '" + std::string(name) + "'");
}

void ToolConfig::validate() const {
  if (sample_keep_stride < 2) throw Error(ErrorCode::InvalidArgument, "sample stride must be >= 2");
  if (!(blur_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "blur sigma must be > 0");
  if (blur_kernel_radius < 1) throw Error(ErrorCode::InvalidArgument, "blur radius must be >= 1");
  if (!(noise_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be > 0");
}

namespace {

FrameSequence with_frames(const FrameSequence& seq, const std::vector<std::size_t>& order) {
  const std::size_t fs = seq.frame_size();
  std::vector<float> out;
  out.reserve(order.size() * fs);
  for (std::size_t t : order) {
    auto f = seq.frame(t);
    out.insert(out.end(), f.begin(), f.end());
  }
  return FrameSequence(order.size(), seq.height(), seq.width(), seq.channels(), std::move(out),
                       seq.frame_rate_hint());
}

// Half-sample symmetric extension (cba|abc|cba), periodic in 2n so any
// radius works on small frames. Preserves the sum under a symmetric kernel.
std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
  return static_cast<std::size_t>(m);
}

std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

FrameSequence blur(const FrameSequence& seq, const ToolConfig& cfg) {
  const auto kernel = gaussian_kernel(cfg.blur_sigma, cfg.blur_kernel_radius);
  const auto r = static_cast<std::ptrdiff_t>(cfg.blur_kernel_radius);
  const std::size_t H = seq.height(), W = seq.width(), C = seq.channels();
  std::vector<float> out(seq.data().size());
  std::vector<double> tmp(H * W);
  for (std::size_t t = 0; t < seq.frames(); ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          double acc = 0.0;
          for (std::ptrdiff_t k = -r; k <= r; ++k) {
            acc += kernel[k + r] * seq.at(t, y, reflect(static_cast<std::ptrdiff_t>(x) + k, W), c);
          }
          tmp[y * W + x] = acc;
        }
      }
      for (std::size_t y = 0; y < H; ++y) {
        for (std::size_t x = 0; x < W; ++x) {
          double acc = 0.0;
          for (std::ptrdiff_t k = -r; k <= r; ++k) {
            acc += kernel[k + r] * tmp[reflect(static_cast<std::ptrdiff_t>(y) + k, H) * W + x];
          }
          out[((t * H + y) * W + x) * C + c] = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
        }
      }
    }
  }
  return FrameSequence(seq.frames(), H, W, C, std::move(out), seq.frame_rate_hint());
}

FrameSequence add_noise(const FrameSequence& seq, const ToolConfig& cfg, Rng& rng) {
  std::vector<float> out = seq.to_vector();
  for (float& v : out) {
    const double noisy = static_cast<double>(v) + cfg.noise_sigma * rng.normal();
    v = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
  }
  return FrameSequence(seq.frames(), seq.height(), seq.width(), seq.channels(), std::move(out),
                       seq.frame_rate_hint());
}

FrameSequence grayscale_replicated(const FrameSequence& seq) {
  if (seq.channels() == 1) return seq;
  const FrameSequence gray = to_grayscale(seq);
  std::vector<float> out(seq.data().size());
  auto g = gray.data();
  for (std::size_t p = 0; p < g.size(); ++p) out[3 * p] = out[3 * p + 1] = out[3 * p + 2] = g[p];
  return FrameSequence(seq.frames(), seq.height(), seq.width(), 3, std::move(out),
                       seq.frame_rate_hint());
}

FrameSequence mirror(const FrameSequence& seq, bool horizontal) {
  const std::size_t H = seq.height(), W = seq.width(), C = seq.channels();
  std::vector<float> out(seq.data().size());
  for (std::size_t t = 0; t < seq.frames(); ++t)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const std::size_t sy = horizontal ? y : H - 1 - y;
        const std::size_t sx = horizontal ? W - 1 - x : x;
        for (std::size_t c = 0; c < C; ++c) out[((t * H + y) * W + x) * C + c] = seq.at(t, sy, sx, c);
      }
  return FrameSequence(seq.frames(), H, W, C, std::move(out), seq.frame_rate_hint());
}

std::vector<std::size_t> fisher_yates(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

bool is_identity(const std::vector<std::size_t>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (perm[i] != i) return false;
  return true;
}

}  // namespace

FrameSequence apply_tool(const FrameSequence& seq, Tool tool, const ToolConfig& cfg, Rng& rng,
                         bool* degenerate) {
  cfg.validate();
  if (degenerate) *degenerate = false;
  switch (tool) {
    case Tool::Sample: {
      if (seq.frames() == 1) {
        if (degenerate) *degenerate = true;
        return seq;
      }
      std::vector<std::size_t> keep;
      for (std::size_t t = 0; t < seq.frames(); t += cfg.sample_keep_stride) keep.push_back(t);
      return with_frames(seq, keep);
    }
    case Tool::Reverse: {
      std::vector<std::size_t> order(seq.frames());
      for (std::size_t t = 0; t < order.size(); ++t) order[t] = order.size() - 1 - t;
      return with_frames(seq, order);
    }
    case Tool::Shuffle: {
      auto perm = fisher_yates(seq.frames(), rng);
      // One redraw if the permutation left the order intact.
      if (seq.frames() >= 2 && is_identity(perm)) perm = fisher_yates(seq.frames(), rng);
      return with_frames(seq, perm);
    }
    case Tool::Blur:
      return blur(seq, cfg);
    case Tool::Noise:
      return add_noise(seq, cfg, rng);
    case Tool::Grayscale:
      return grayscale_replicated(seq);
    case Tool::HorizontalMirror:
      return mirror(seq, true);
    case Tool::VerticalMirror:
      return mirror(seq, false);
  }
  return seq;
}

FrameSequence apply_temporal_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                   Rng& rng) {
  FrameSequence out = seq;
  for (Tool t : kAllTools)
    if (tools.test(index_of(t)) && category_of(t) == ToolCategory::Temporal)
      out = apply_tool(out, t, cfg, rng);
  return out;
}

FrameSequence apply_spatial_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                  Rng& rng) {
  FrameSequence out = seq;
  for (Tool t : kAllTools)
    if (tools.test(index_of(t)) && category_of(t) == ToolCategory::Spatial)
      out = apply_tool(out, t, cfg, rng);
  return out;
}

FrameSequence compose_dual_stage(const FrameSequence& seq, ToolSet tools, const ToolConfig& cfg,
                                 Rng& rng) {
  if (tools.none()) throw Error(ErrorCode::EmptyToolSet, "at least one tool is required");
  return apply_spatial_stage(apply_temporal_stage(seq, tools, cfg, rng), tools, cfg, rng);
}

namespace {

struct ToolText {
  const char* description;
  const char* explanation;
};

ToolText tool_text(Tool t) {
  switch (t) {
    case Tool::Sample:
      return {"Performs uniform downsampling at a specific ratio to compress and omit intermediate "
              "continuous dynamic transitions.",
              "Disrupts action continuity, forcing the model to reason with sparse temporal evidence."};
    case Tool::Reverse:
      return {"Fully reverses the frame sequence chronologically, inverting the causal order while "
              "preserving individual frame content.",
              "Penalizes models that rely on static cues rather than true temporal progression "
              "(e.g., misidentifying “sitting” vs. “standing”)."};
    case Tool::Shuffle:
      return {"Randomly permutes the frame order to thoroughly destroy local temporal consistency.",
              "Breaks the logical event chain, exposing models that over-rely on global scene "
              "context rather than sequential coherence."};
    case Tool::Blur:
      return {"Applies a Gaussian kernel to systematically weaken high-frequency textures, edges, "
              "and fine-grained local details.",
              "Challenges the model’s ability to recognize object categories and existence "
              "when fine-grained visual evidence is degraded."};
    case Tool::Noise:
      return {"Injects stochastic Gaussian noise to perturb pixel-level consistency while "
              "maintaining the global structure.",
              "Exposes vulnerabilities in identifying textures, materials, and surface states that "
              "rely on pixel-level statistical accuracy."};
    case Tool::Grayscale:
      return {"Strips all chromatic information by converting RGB frames into a unified "
              "luminance-based grayscale format.",
              "Exposes reliance on color-based shortcuts for judging scene attributes, time of day, "
              "or specific material properties."};
    case Tool::HorizontalMirror:
      return {"Flips frames horizontally, preserving object identities while altering lateral "
              "spatial relationships.",
              "Targets errors in judging camera panning and directional spatial relations (e.g., "
              "“left-to-right” vs. “right-to-left” motion)."};
    case Tool::VerticalMirror:
      return {"Flips frames vertically, inverting top-bottom relationships while maintaining "
              "visual consistency.",
              "Penalizes misinterpretations of camera angles (e.g., high vs. low-angle shots) and "
              "gravity-based spatial priors (e.g., “above” vs. “below”)."};
  }
  return {"", ""};
}

}  // namespace

std::string tool_description(Tool tool) {
  const ToolText text = tool_text(tool);
  std::string description = text.description;
  if (!description.empty() && description.back() == '.') description.pop_back();
  const char* type = category_of(tool) == ToolCategory::Temporal ? "Temporal" : "Spatial";
  return std::string("This ") + type + " perturbation, specifically " + description +
         ", which effectively " + text.explanation;
}

}  // namespace tricd
