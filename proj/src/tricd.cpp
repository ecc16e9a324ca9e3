#include "tricd/tricd.hpp"

#include <algorithm>
#include <string>

#include "tricd/error.hpp"

namespace tricd {

std::vector<double> calibrate(const LogitTriple& t, double alpha1, double alpha2) {
  if (t.q_p.size() != t.q_o.size() || t.q_n.size() != t.q_o.size()) {
    throw Error(ErrorCode::ShapeMismatch, "logit streams differ in length");
  }
  std::vector<double> q(t.q_o.size());
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = t.q_o[i] + alpha1 * (t.q_p[i] - t.q_o[i]) + alpha2 * (t.q_o[i] - t.q_n[i]);
  return q;
}

std::size_t greedy_argmax(const std::vector<double>& logits) {
  if (logits.empty()) throw Error(ErrorCode::InvalidArgument, "empty logits");
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

VisionTokens reweight_tokens(const VisionTokens& tokens, const std::vector<Grid2D>& w_sal) {
  if (w_sal.size() != tokens.frames) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(w_sal.size()) + " weight grids for " +
                                              std::to_string(tokens.frames) + " frames");
  }
  VisionTokens out = tokens;
  const std::size_t d = tokens.embeddings.cols;
  std::size_t row = 0;
  for (const Grid2D& g : w_sal) {
    if (g.rows != tokens.grid_h || g.cols != tokens.grid_w) {
      throw Error(ErrorCode::ShapeMismatch, "weight grid does not match the patch grid");
    }
    for (double w : g.values) {
      for (std::size_t c = 0; c < d; ++c) out.embeddings.data[row * d + c] *= w;
      ++row;
    }
  }
  return out;
}

PreparedVideo prepare_video(const Backbone& backbone, const FrameSequence& frames,
                            const SpatialSaliencyProvider& spatial, const RunConfig& cfg) {
  VisionTokens tokens = backbone.embed_video(frames);
  SaliencyPair sal = compute_saliency(frames, spatial, backbone.patch_size(), cfg.flow, cfg.band);
  return {frames, std::move(tokens), std::move(sal)};
}

TokenSequence encode_prompt(const Backbone& backbone, const std::string& question) {
  TokenSequence ids{backbone.bos_id()};
  const auto words = backbone.tokenize(question);
  ids.insert(ids.end(), words.begin(), words.end());
  return ids;
}

Generation greedy_generate(const Backbone& backbone, const VisionTokens& vision,
                           const TokenSequence& prompt, std::size_t max_steps) {
  Generation g;
  for (std::size_t step = 0; step < max_steps; ++step) {
    const auto out = backbone.forward(vision, prompt, g.tokens);
    const auto next = static_cast<TokenId>(greedy_argmax(out.logits));
    g.tokens.push_back(next);
    if (next == backbone.eos_id()) break;
  }
  g.text = backbone.detokenize(g.tokens);
  return g;
}

namespace {

Rollout run(Tape& tape, const PolicyVars& vars, const PolicyDims& dims, PolicyMode mode,
            const Backbone& backbone, const PreparedVideo& video, const std::string& question,
            const Tensor& tool_desc, const RunConfig& cfg, Rng& rng) {
  const TokenSequence prompt = encode_prompt(backbone, question);
  BackboneOutput first = backbone.forward(video.tokens, prompt, {});

  Rollout r;
  GenerationTrace& trace = r.generation.trace;
  const Var hidden = tape.constant(first.hidden);
  const Var logits = apc_score_graph(tape, vars, hidden, tape.constant(tool_desc), dims.d);
  ApcDecision apc;
  if (mode == PolicyMode::Inference) {
    ToolLogits l{};
    std::copy_n(tape.value(logits).data.begin(), kNumTools, l.begin());
    apc = apc_select_inference(l, cfg.gamma);
  } else {
    apc = apc_sample_training(tape, logits, rng);
    r.log_prob_apc = apc.log_prob_var;
  }
  const SgeDecision sge = sge_gate(tape, vars, hidden, mode, rng, cfg.sge_sigma);
  if (mode == PolicyMode::Training) r.log_prob_sge = sge.log_prob_var;
  trace.tools = apc.selected_mask;
  trace.tool_probs = apc.tool_probs;
  trace.mu = sge.mu;
  trace.beta = sge.beta;

  VisionTokens negative = video.tokens;
  if (!cfg.force_identity_negative) {
    negative = backbone.embed_video(compose_dual_stage(video.frames, apc.selected_mask, cfg.tools, rng));
  }
  VisionTokens positive = video.tokens;
  if (!cfg.force_unit_saliency) positive = reweight_tokens(video.tokens, fuse(video.saliency, sge.beta));

  TokenSequence& out = r.generation.tokens;
  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    LogitTriple triple;
    triple.q_o = step == 0 ? std::move(first.logits) : backbone.forward(video.tokens, prompt, out).logits;
    triple.q_p = backbone.forward(positive, prompt, out).logits;
    triple.q_n = backbone.forward(negative, prompt, out).logits;
    const auto next = static_cast<TokenId>(greedy_argmax(calibrate(triple, cfg.alpha1, cfg.alpha2)));
    trace.steps.push_back(std::move(triple));
    out.push_back(next);
    if (next == backbone.eos_id()) break;
  }
  r.generation.text = backbone.detokenize(out);
  return r;
}

}  // namespace

Generation tricd_generate(const Backbone& backbone, const PreparedVideo& video,
                          const std::string& question, const Tensor& tool_desc,
                          const PolicyParams& policy, const RunConfig& cfg, Rng& rng) {
  Tape tape;
  const PolicyVars vars = bind_constants(tape, policy);
  return run(tape, vars, policy.dims, PolicyMode::Inference, backbone, video, question, tool_desc,
             cfg, rng)
      .generation;
}

Rollout tricd_rollout(Tape& tape, const PolicyVars& params, const PolicyDims& dims,
                      const Backbone& backbone, const PreparedVideo& video,
                      const std::string& question, const Tensor& tool_desc, const RunConfig& cfg,
                      Rng& rng) {
  return run(tape, params, dims, PolicyMode::Training, backbone, video, question, tool_desc, cfg, rng);
}

}  // namespace tricd
