#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "tricd/answer.hpp"
#include "tricd/autograd.hpp"
#include "tricd/policy.hpp"
#include "tricd/rng.hpp"

namespace tricd {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t accum = 32;
  double clip = 1.0;
  double decay = 0.95;
  double gamma = 0.4;
  double alpha1 = 0.8;
  double alpha2 = 0.4;
  double sge_sigma = 0.1;
  std::size_t epochs = 1;
  std::uint64_t seed = 2025;

  void validate() const;
};

// +1 on an exact label match, -1 otherwise (Unparsed never matches).
double compute_reward(Label pred, Label gt);

// phi * B + (1 - phi) * R
double update_baseline(double baseline, double reward, double phi);

// -(logp_apc + logp_sge) * (R - B); the advantage is a constant.
Var reinforce_loss(Tape& tape, Var logp_apc, Var logp_sge, double reward, double baseline);

double grad_global_norm(const PolicyParams& params);
// Rescales all gradients so their global norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_global_norm(PolicyParams& params, double max_norm);
void sgd_step(PolicyParams& params, double lr);

// One sampled episode: the reward and the log-probabilities of the actions
// that produced it, recorded on the caller's tape.
struct EnvStep {
  double reward = 0.0;
  Var log_prob_apc;
  Var log_prob_sge;
};

class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual std::size_t size() const = 0;
  virtual EnvStep rollout(std::size_t index, Tape& tape, const PolicyVars& vars,
                          const PolicyDims& dims, Rng& rng) const = 0;
};

struct TrainerState {
  double baseline = 0.0;
  std::size_t step = 0;     // optimizer updates applied
  std::size_t samples = 0;  // episodes consumed
};

struct HistoryEntry {
  double reward = 0.0;
  double baseline = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  TrainerState state;
  std::vector<HistoryEntry> history;
};

using StepCallback = std::function<void(const TrainerState&, const PolicyParams&)>;

// REINFORCE with an EMA baseline. Each episode updates B before the
// advantage is formed, adds grad(loss)/accum to the accumulator, and every
// `accum` episodes the accumulator is clipped to `clip` in global norm and
// applied by plain gradient descent. A trailing partial block is discarded.
// Episodes are visited in a seeded per-epoch shuffled order. Throws EmptyDataset.
TrainResult train(const RolloutEnv& env, PolicyParams& params, const TrainConfig& cfg,
                  TrainerState state = {}, const StepCallback& on_step = {});

}  // namespace tricd
