#include "tricd/trainer.hpp"

#include <cmath>
#include <numeric>

#include "tricd/error.hpp"

namespace tricd {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "lr must be > 0");
  if (accum < 1) throw Error(ErrorCode::InvalidArgument, "accum must be >= 1");
  if (!(clip > 0.0)) throw Error(ErrorCode::InvalidArgument, "clip must be > 0");
  if (!(decay > 0.0 && decay < 1.0)) throw Error(ErrorCode::InvalidArgument, "decay must be in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::BadGamma, "gamma must be in (0, 1]");
  if (!(sge_sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sge_sigma must be > 0");
}

double compute_reward(Label pred, Label gt) {
  return pred != Label::Unparsed && pred == gt ? 1.0 : -1.0;
}

double update_baseline(double baseline, double reward, double phi) {
  return phi * baseline + (1.0 - phi) * reward;
}

Var reinforce_loss(Tape& tape, Var logp_apc, Var logp_sge, double reward, double baseline) {
  return tape.scale(tape.add(logp_apc, logp_sge), -(reward - baseline));
}

double grad_global_norm(const PolicyParams& params) {
  double sq = 0.0;
  for (const auto& [name, t] : params.named())
    for (double g : t->grad) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_global_norm(PolicyParams& params, double max_norm) {
  const double norm = grad_global_norm(params);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, t] : params.named())
      for (double& g : t->grad) g *= s;
  }
  return norm;
}

void sgd_step(PolicyParams& params, double lr) {
  for (auto& [name, t] : params.named()) {
    if (t->grad.size() != t->data.size()) continue;
    for (std::size_t i = 0; i < t->size(); ++i) t->data[i] -= lr * t->grad[i];
  }
}

TrainResult train(const RolloutEnv& env, PolicyParams& params, const TrainConfig& cfg,
                  TrainerState state, const StepCallback& on_step) {
  cfg.validate();
  const std::size_t n = env.size();
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "no training episodes");
  TrainResult result;
  params.zero_grad();
  std::size_t in_block = 0;
  const double inv_b = 1.0 / static_cast<double>(cfg.accum);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::derive(cfg.seed ^ 0x5eed5eed5eed5eedULL, epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    for (std::size_t idx : order) {
      Rng rng = Rng::derive(cfg.seed, state.samples);
      Tape tape;
      const PolicyVars vars = bind_params(tape, params);
      const EnvStep ep = env.rollout(idx, tape, vars, params.dims, rng);
      state.baseline = update_baseline(state.baseline, ep.reward, cfg.decay);
      const Var loss = reinforce_loss(tape, ep.log_prob_apc, ep.log_prob_sge, ep.reward, state.baseline);
      result.history.push_back({ep.reward, state.baseline, tape.scalar(loss)});
      tape.backward(tape.scale(loss, inv_b));
      ++state.samples;

      if (++in_block == cfg.accum) {
        clip_grad_global_norm(params, cfg.clip);
        sgd_step(params, cfg.lr);
        params.zero_grad();
        in_block = 0;
        ++state.step;
        if (on_step) on_step(state, params);
      }
    }
  }
  params.zero_grad();
  result.state = state;
  return result;
}

}  // namespace tricd
