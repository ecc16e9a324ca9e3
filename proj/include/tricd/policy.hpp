#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tricd/autograd.hpp"
#include "tricd/perturbation.hpp"
#include "tricd/rng.hpp"

namespace tricd {

struct PolicyDims {
  std::size_t d_model = 64;
  std::size_t d = 64;
  std::size_t d_g = 32;
  std::size_t n_q = 4;

  bool operator==(const PolicyDims&) const = default;
};

// Learnable weights of the perturbation controller (apc.*) and the saliency
// gate (sge.*). Row-vector convention: y = x W + b.
struct PolicyParams {
  PolicyDims dims;
  Tensor proj_vq_w, proj_vq_b;
  Tensor proj_tool_w, proj_tool_b;
  Tensor query_tokens;
  Tensor type_emb_vq, type_emb_tool;
  Tensor id_emb;
  Tensor a_wq, a_wk, a_wv;
  Tensor b_wq, b_wk, b_wv;
  Tensor score_w, score_b;
  Tensor gate_w1, gate_b1, gate_w2, gate_b2;

  // Stable (name, tensor) enumeration used by checkpoints and optimizers.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  void zero_grad();
};

// Xavier-uniform weights (fans = rows, cols), zero biases.
PolicyParams init_params(std::uint64_t seed, const PolicyDims& dims = {});

// Tape handles for every parameter, bound either as trainable or constant.
struct PolicyVars {
  Var proj_vq_w, proj_vq_b, proj_tool_w, proj_tool_b, query_tokens, type_emb_vq, type_emb_tool,
      id_emb, a_wq, a_wk, a_wv, b_wq, b_wk, b_wv, score_w, score_b, gate_w1, gate_b1, gate_w2,
      gate_b2;
};
PolicyVars bind_params(Tape& tape, PolicyParams& params);
PolicyVars bind_constants(Tape& tape, const PolicyParams& params);

// Tool logits (8 x 1) from hidden states (L x d_model) and tool description
// embeddings (8 x d_model). Each cross-attention block adds its attended
// values to the queries; tool routing is aggregated by mean(relu(.)).
Var apc_score_graph(Tape& tape, const PolicyVars& p, Var hidden, Var tool_desc, std::size_t d);

using ToolLogits = std::array<double, kNumTools>;

ToolLogits apc_score(const Tensor& hidden, const Tensor& tool_desc, const PolicyParams& params);

struct ApcDecision {
  ToolLogits tool_probs{};
  ToolSet selected_mask;
  double log_prob = 0.0;
  Var log_prob_var;  // valid for training decisions only
};

// Softmax + cumulative threshold. Throws BadGamma unless 0 < gamma <= 1.
ApcDecision apc_select_inference(const ToolLogits& logits, double gamma);

// sum_i m_i log p_i + (1 - m_i) log(1 - p_i) with p = sigmoid(logits).
Var bernoulli_log_prob(Tape& tape, Var logits, ToolSet mask);

// Independent Bernoulli draws per tool. An empty mask is redrawn once, then
// replaced by the single most probable tool.
ApcDecision apc_sample_training(Tape& tape, Var logits, Rng& rng);

enum class PolicyMode { Inference, Training };

struct SgeDecision {
  double mu = 0.5;
  double beta = 0.5;
  double beta_raw = 0.5;
  double log_prob = 0.0;
  Var log_prob_var;  // valid in training mode only
};

// mu = sigmoid(MLP(mean over rows of hidden)) as a 1x1 node.
Var sge_mu_graph(Tape& tape, const PolicyVars& p, Var hidden);

// log N(beta_raw; mu, sigma^2) with beta_raw held constant.
Var normal_log_prob(Tape& tape, Var mu, double beta_raw, double sigma);

SgeDecision sge_gate(Tape& tape, const PolicyVars& p, Var hidden, PolicyMode mode, Rng& rng,
                     double sigma = 0.1);

double sge_mu(const Tensor& hidden, const PolicyParams& params);

}  // namespace tricd
