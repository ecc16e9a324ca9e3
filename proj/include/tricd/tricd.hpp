#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tricd/autograd.hpp"
#include "tricd/backbone.hpp"
#include "tricd/flow.hpp"
#include "tricd/perturbation.hpp"
#include "tricd/policy.hpp"
#include "tricd/rng.hpp"
#include "tricd/saliency.hpp"

namespace tricd {

struct LogitTriple {
  std::vector<double> q_o, q_p, q_n;
};

// q_o + alpha1 (q_p - q_o) + alpha2 (q_o - q_n)
std::vector<double> calibrate(const LogitTriple& triple, double alpha1, double alpha2);

// Index of the largest entry, lowest index on ties.
std::size_t greedy_argmax(const std::vector<double>& logits);

// Scales each token row by its patch weight. Throws ShapeMismatch.
VisionTokens reweight_tokens(const VisionTokens& tokens, const std::vector<Grid2D>& w_sal);

struct RunConfig {
  double gamma = 0.4;
  double alpha1 = 0.8;
  double alpha2 = 0.4;
  std::size_t max_steps = 1;
  double sge_sigma = 0.1;
  ToolConfig tools;
  FarnebackParams flow;
  BandpassParams band;
  // Test hooks: V- = V and w_sal = 1 respectively.
  bool force_identity_negative = false;
  bool force_unit_saliency = false;
};

// Per-video work that does not depend on the question or the policy.
struct PreparedVideo {
  FrameSequence frames;
  VisionTokens tokens;
  SaliencyPair saliency;
};

PreparedVideo prepare_video(const Backbone& backbone, const FrameSequence& frames,
                            const SpatialSaliencyProvider& spatial, const RunConfig& cfg);

// Question text as the backbone sees it: BOS followed by the tokenized text.
TokenSequence encode_prompt(const Backbone& backbone, const std::string& question);

struct GenerationTrace {
  ToolSet tools;
  ToolLogits tool_probs{};
  double mu = 0.0;
  double beta = 0.0;
  std::vector<LogitTriple> steps;
};

struct Generation {
  std::string text;
  TokenSequence tokens;
  GenerationTrace trace;
};

// Plain greedy decoding of the original pass.
Generation greedy_generate(const Backbone& backbone, const VisionTokens& vision,
                           const TokenSequence& prompt, std::size_t max_steps);

// Inference-mode three-pass decoding: softmax/threshold tool selection and
// deterministic gate. `rng` drives the stochastic perturbation tools.
Generation tricd_generate(const Backbone& backbone, const PreparedVideo& video,
                          const std::string& question, const Tensor& tool_desc,
                          const PolicyParams& policy, const RunConfig& cfg, Rng& rng);

struct Rollout {
  Generation generation;
  Var log_prob_apc;
  Var log_prob_sge;
};

// Training-mode decoding: Bernoulli tool mask and Normal gate draw, with
// their log-probabilities recorded on `tape` against `params`.
Rollout tricd_rollout(Tape& tape, const PolicyVars& params, const PolicyDims& dims,
                      const Backbone& backbone, const PreparedVideo& video,
                      const std::string& question, const Tensor& tool_desc, const RunConfig& cfg,
                      Rng& rng);

}  // namespace tricd
