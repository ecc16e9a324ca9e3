#include "tricd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "tricd/error.hpp"

namespace tricd {

std::vector<std::pair<std::string, Tensor*>> PolicyParams::named() {
  return {{"apc.proj_vq.weight", &proj_vq_w},
          {"apc.proj_vq.bias", &proj_vq_b},
          {"apc.proj_tool.weight", &proj_tool_w},
          {"apc.proj_tool.bias", &proj_tool_b},
          {"apc.query_tokens", &query_tokens},
          {"apc.type_emb_vq", &type_emb_vq},
          {"apc.type_emb_tool", &type_emb_tool},
          {"apc.id_emb", &id_emb},
          {"apc.stage_a.wq", &a_wq},
          {"apc.stage_a.wk", &a_wk},
          {"apc.stage_a.wv", &a_wv},
          {"apc.stage_b.wq", &b_wq},
          {"apc.stage_b.wk", &b_wk},
          {"apc.stage_b.wv", &b_wv},
          {"apc.score.weight", &score_w},
          {"apc.score.bias", &score_b},
          {"sge.gate.w1", &gate_w1},
          {"sge.gate.b1", &gate_b1},
          {"sge.gate.w2", &gate_w2},
          {"sge.gate.b2", &gate_b2}};
}

std::vector<std::pair<std::string, const Tensor*>> PolicyParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<PolicyParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

void PolicyParams::zero_grad() {
  for (auto& [name, t] : named()) t->zero_grad();
}

PolicyParams init_params(std::uint64_t seed, const PolicyDims& dims) {
  if (dims.d_model == 0 || dims.d == 0 || dims.d_g == 0 || dims.n_q == 0) {
    throw Error(ErrorCode::InvalidArgument, "policy dimensions must be >= 1");
  }
  PolicyParams p;
  p.dims = dims;
  const std::size_t dm = dims.d_model, d = dims.d, dg = dims.d_g, nq = dims.n_q;
  p.proj_vq_w = Tensor(dm, d);
  p.proj_vq_b = Tensor(1, d);
  p.proj_tool_w = Tensor(dm, d);
  p.proj_tool_b = Tensor(1, d);
  p.query_tokens = Tensor(nq, d);
  p.type_emb_vq = Tensor(1, d);
  p.type_emb_tool = Tensor(1, d);
  p.id_emb = Tensor(kNumTools, d);
  for (Tensor* t : {&p.a_wq, &p.a_wk, &p.a_wv, &p.b_wq, &p.b_wk, &p.b_wv}) *t = Tensor(d, d);
  p.score_w = Tensor(d, 1);
  p.score_b = Tensor(1, 1);
  p.gate_w1 = Tensor(dm, dg);
  p.gate_b1 = Tensor(1, dg);
  p.gate_w2 = Tensor(dg, 1);
  p.gate_b2 = Tensor(1, 1);

  Rng rng(seed);
  for (auto& [name, t] : p.named()) {
    const bool bias = name.ends_with(".bias") || name == "sge.gate.b1" || name == "sge.gate.b2";
    if (!bias) {
      const double a = std::sqrt(6.0 / static_cast<double>(t->rows + t->cols));
      for (double& v : t->data) v = rng.uniform(-a, a);
    }
    t->requires_grad = true;
    t->zero_grad();
  }
  return p;
}

PolicyVars bind_params(Tape& tape, PolicyParams& p) {
  return {tape.param(p.proj_vq_w),   tape.param(p.proj_vq_b),   tape.param(p.proj_tool_w),
          tape.param(p.proj_tool_b), tape.param(p.query_tokens), tape.param(p.type_emb_vq),
          tape.param(p.type_emb_tool), tape.param(p.id_emb),    tape.param(p.a_wq),
          tape.param(p.a_wk),        tape.param(p.a_wv),        tape.param(p.b_wq),
          tape.param(p.b_wk),        tape.param(p.b_wv),        tape.param(p.score_w),
          tape.param(p.score_b),     tape.param(p.gate_w1),     tape.param(p.gate_b1),
          tape.param(p.gate_w2),     tape.param(p.gate_b2)};
}

PolicyVars bind_constants(Tape& tape, const PolicyParams& p) {
  return {tape.constant(p.proj_vq_w),   tape.constant(p.proj_vq_b),   tape.constant(p.proj_tool_w),
          tape.constant(p.proj_tool_b), tape.constant(p.query_tokens), tape.constant(p.type_emb_vq),
          tape.constant(p.type_emb_tool), tape.constant(p.id_emb),    tape.constant(p.a_wq),
          tape.constant(p.a_wk),        tape.constant(p.a_wv),        tape.constant(p.b_wq),
          tape.constant(p.b_wk),        tape.constant(p.b_wv),        tape.constant(p.score_w),
          tape.constant(p.score_b),     tape.constant(p.gate_w1),     tape.constant(p.gate_b1),
          tape.constant(p.gate_w2),     tape.constant(p.gate_b2)};
}

namespace {

// queries + softmax((queries Wq)(keys Wk)^T / sqrt(d)) (keys Wv)
Var cross_attend(Tape& tape, Var queries, Var keys, Var wq, Var wk, Var wv, std::size_t d) {
  const Var q = tape.matmul(queries, wq);
  const Var k = tape.matmul(keys, wk);
  const Var v = tape.matmul(keys, wv);
  const Var attn =
      tape.softmax_rows(tape.scale(tape.matmul(q, k, true), 1.0 / std::sqrt(static_cast<double>(d))));
  return tape.add(queries, tape.matmul(attn, v));
}

}  // namespace

Var apc_score_graph(Tape& tape, const PolicyVars& p, Var hidden, Var tool_desc, std::size_t d) {
  if (tape.value(tool_desc).rows != kNumTools) {
    throw Error(ErrorCode::ShapeMismatch, "tool description matrix must have 8 rows");
  }
  if (tape.value(hidden).rows == 0) throw Error(ErrorCode::ShapeMismatch, "empty hidden states");
  const Var h = tape.add(tape.add(tape.matmul(hidden, p.proj_vq_w), p.proj_vq_b), p.type_emb_vq);
  const Var tools = tape.add(
      tape.add(tape.add(tape.matmul(tool_desc, p.proj_tool_w), p.proj_tool_b), p.type_emb_tool),
      p.id_emb);
  const Var q_cond = cross_attend(tape, p.query_tokens, h, p.a_wq, p.a_wk, p.a_wv, d);
  std::vector<Var> routed;
  routed.reserve(kNumTools);
  for (std::size_t i = 0; i < kNumTools; ++i) {
    const Var tool = tape.row_select(tools, i);
    const Var q_route = cross_attend(tape, q_cond, tool, p.b_wq, p.b_wk, p.b_wv, d);
    routed.push_back(tape.mean_rows(tape.relu(q_route)));
  }
  return tape.add(tape.matmul(tape.concat_rows(routed), p.score_w), p.score_b);
}

ToolLogits apc_score(const Tensor& hidden, const Tensor& tool_desc, const PolicyParams& params) {
  Tape tape;
  const PolicyVars p = bind_constants(tape, params);
  const Var logits =
      apc_score_graph(tape, p, tape.constant(hidden), tape.constant(tool_desc), params.dims.d);
  ToolLogits out{};
  std::copy_n(tape.value(logits).data.begin(), kNumTools, out.begin());
  return out;
}

ApcDecision apc_select_inference(const ToolLogits& logits, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::BadGamma, "gamma = " + std::to_string(gamma));
  }
  ApcDecision d;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < kNumTools; ++i) z += (d.tool_probs[i] = std::exp(logits[i] - mx));
  for (double& p : d.tool_probs) p /= z;

  std::array<std::size_t, kNumTools> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d.tool_probs[a] > d.tool_probs[b]; });
  double cum = 0.0;
  bool reached = false;
  for (std::size_t i : order) {
    d.selected_mask.set(i);
    cum += d.tool_probs[i];
    if (cum >= gamma) {
      reached = true;
      break;
    }
  }
  // Rounding can leave the full sum a hair under gamma = 1.
  if (!reached) d.selected_mask.set();
  return d;
}

Var bernoulli_log_prob(Tape& tape, Var logits, ToolSet mask) {
  const Tensor& l = tape.value(logits);
  if (l.size() != kNumTools) throw Error(ErrorCode::ShapeMismatch, "expected 8 tool logits");
  std::vector<double> sign(kNumTools);
  for (std::size_t i = 0; i < kNumTools; ++i) sign[i] = mask.test(i) ? 1.0 : -1.0;
  // log p = log sigmoid(x), log(1 - p) = log sigmoid(-x)
  const Var signed_logits = tape.mul(logits, tape.constant(l.rows, l.cols, sign));
  return tape.scale(tape.mean_all(tape.log_sigmoid(signed_logits)), static_cast<double>(kNumTools));
}

ApcDecision apc_sample_training(Tape& tape, Var logits, Rng& rng) {
  const Tensor& l = tape.value(logits);
  if (l.size() != kNumTools) throw Error(ErrorCode::ShapeMismatch, "expected 8 tool logits");
  ApcDecision d;
  for (std::size_t i = 0; i < kNumTools; ++i) {
    const double x = l.data[i];
    d.tool_probs[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  for (int attempt = 0; attempt < 2 && d.selected_mask.none(); ++attempt) {
    d.selected_mask.reset();
    for (std::size_t i = 0; i < kNumTools; ++i) d.selected_mask[i] = rng.bernoulli(d.tool_probs[i]);
  }
  if (d.selected_mask.none()) {
    const auto best = std::max_element(l.data.begin(), l.data.end()) - l.data.begin();
    d.selected_mask.set(static_cast<std::size_t>(best));
  }
  d.log_prob_var = bernoulli_log_prob(tape, logits, d.selected_mask);
  d.log_prob = tape.scalar(d.log_prob_var);
  return d;
}

Var sge_mu_graph(Tape& tape, const PolicyVars& p, Var hidden) {
  if (tape.value(hidden).rows == 0) throw Error(ErrorCode::ShapeMismatch, "empty hidden states");
  const Var pooled = tape.mean_rows(hidden);
  const Var h1 = tape.relu(tape.add(tape.matmul(pooled, p.gate_w1), p.gate_b1));
  return tape.sigmoid(tape.add(tape.matmul(h1, p.gate_w2), p.gate_b2));
}

Var normal_log_prob(Tape& tape, Var mu, double beta_raw, double sigma) {
  const Var diff = tape.add(mu, tape.constant(1, 1, {-beta_raw}));
  const Var quad = tape.scale(tape.mul(diff, diff), -0.5 / (sigma * sigma));
  const double norm = -std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  return tape.add(quad, tape.constant(1, 1, {norm}));
}

SgeDecision sge_gate(Tape& tape, const PolicyVars& p, Var hidden, PolicyMode mode, Rng& rng,
                     double sigma) {
  const Var mu = sge_mu_graph(tape, p, hidden);
  SgeDecision d;
  d.mu = tape.scalar(mu);
  if (mode == PolicyMode::Inference) {
    d.beta = d.beta_raw = d.mu;
    return d;
  }
  d.beta_raw = d.mu + sigma * rng.normal();
  d.beta = std::clamp(d.beta_raw, 0.0, 1.0);
  d.log_prob_var = normal_log_prob(tape, mu, d.beta_raw, sigma);
  d.log_prob = tape.scalar(d.log_prob_var);
  return d;
}

double sge_mu(const Tensor& hidden, const PolicyParams& params) {
  Tape tape;
  const PolicyVars p = bind_constants(tape, params);
  return tape.scalar(sge_mu_graph(tape, p, tape.constant(hidden)));
}

}  // namespace tricd
