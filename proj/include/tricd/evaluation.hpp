#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "tricd/backbone.hpp"
#include "tricd/dataset.hpp"
#include "tricd/metrics.hpp"
#include "tricd/policy.hpp"
#include "tricd/saliency.hpp"
#include "tricd/trainer.hpp"
#include "tricd/tricd.hpp"

namespace tricd {

enum class EvalMode { Baseline, TriCD };

std::string_view mode_name(EvalMode mode);

// Loads and prepares each distinct video of `samples` once (in parallel).
class VideoStore {
 public:
  VideoStore(const std::vector<QASample>& samples, const Backbone& backbone,
             const SpatialSaliencyProvider& spatial, const RunConfig& cfg, std::size_t threads = 1);
  const PreparedVideo& get(const std::filesystem::path& video) const;
  std::size_t size() const { return videos_.size(); }

 private:
  std::map<std::string, PreparedVideo> videos_;
};

struct EvalOptions {
  EvalMode mode = EvalMode::Baseline;
  RunConfig run;
  std::uint64_t seed = 2025;
  std::size_t threads = 1;
};

struct EvalOutput {
  EvalReport report;
  std::vector<Prediction> predictions;
  std::vector<std::string> answers;
};

// Answers every sample (plain greedy for Baseline, inference-mode TriCD
// otherwise) and scores the labels. `policy` is required for TriCD.
EvalOutput run_eval(const std::vector<QASample>& samples, const VideoStore& store,
                    const Backbone& backbone, const PolicyParams* policy, const EvalOptions& opts);

// Report as canonical JSON (fixed key order) with the given config echo.
nlohmann::ordered_json report_to_json(const EvalReport& report, const nlohmann::ordered_json& config);

// Training episodes over QA samples: one TriCD rollout scored by exact-match
// reward against the label.
class QaEnv : public RolloutEnv {
 public:
  QaEnv(const std::vector<QASample>& samples, const VideoStore& store, const Backbone& backbone,
        const RunConfig& cfg);
  std::size_t size() const override { return samples_.size(); }
  EnvStep rollout(std::size_t index, Tape& tape, const PolicyVars& vars, const PolicyDims& dims,
                  Rng& rng) const override;

 private:
  std::vector<QASample> samples_;
  const VideoStore& store_;
  const Backbone& backbone_;
  RunConfig cfg_;
  Tensor tool_desc_;
};

}  // namespace tricd
