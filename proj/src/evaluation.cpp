#include "tricd/evaluation.hpp"

#include "tricd/error.hpp"
#include "tricd/parallel.hpp"
#include "tricd/vseq_io.hpp"

namespace tricd {

std::string_view mode_name(EvalMode mode) { return mode == EvalMode::Baseline ? "baseline" : "tricd"; }

namespace {
std::string video_key(const std::filesystem::path& p) { return p.lexically_normal().string(); }
}  // namespace

VideoStore::VideoStore(const std::vector<QASample>& samples, const Backbone& backbone,
                       const SpatialSaliencyProvider& spatial, const RunConfig& cfg, std::size_t threads) {
  std::vector<std::string> keys;
  for (const auto& s : samples) {
    const auto k = video_key(s.video);
    if (!videos_.contains(k)) {
      keys.push_back(k);
      videos_.emplace(k, PreparedVideo{FrameSequence::filled(1, 1, 1, 1, 0.0f), {}, {}});
    }
  }
  std::vector<PreparedVideo*> slots;
  for (const auto& k : keys) slots.push_back(&videos_.at(k));
  parallel_for(keys.size(), threads, [&](std::size_t i) {
    *slots[i] = prepare_video(backbone, load_vseq(keys[i]), spatial, cfg);
  });
}

const PreparedVideo& VideoStore::get(const std::filesystem::path& video) const {
  const auto it = videos_.find(video_key(video));
  if (it == videos_.end()) throw Error(ErrorCode::MissingFile, "video not prepared: " + video.string());
  return it->second;
}

EvalOutput run_eval(const std::vector<QASample>& samples, const VideoStore& store,
                    const Backbone& backbone, const PolicyParams* policy, const EvalOptions& opts) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  if (opts.mode == EvalMode::TriCD && policy == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "TriCD evaluation needs policy parameters");
  }
  const Tensor tool_desc = opts.mode == EvalMode::TriCD ? tool_description_embeddings(backbone) : Tensor();
  EvalOutput out;
  out.answers.resize(samples.size());
  out.predictions.resize(samples.size());
  parallel_for(samples.size(), opts.threads, [&](std::size_t i) {
    const QASample& s = samples[i];
    const PreparedVideo& video = store.get(s.video);
    const std::string prompt = format_prompt(s);
    Generation g;
    if (opts.mode == EvalMode::Baseline) {
      g = greedy_generate(backbone, video.tokens, encode_prompt(backbone, prompt), opts.run.max_steps);
    } else {
      Rng rng = Rng::derive(opts.seed, i);
      g = tricd_generate(backbone, video, prompt, tool_desc, *policy, opts.run, rng);
    }
    out.answers[i] = g.text;
    out.predictions[i] = {extract_answer(g.text, format_of(s.task)), s.answer, s.task, s.types,
                          s.options.size()};
  });
  out.report = compute_metrics(out.predictions);
  out.report.mode = std::string(mode_name(opts.mode));
  return out;
}

nlohmann::ordered_json report_to_json(const EvalReport& r, const nlohmann::ordered_json& config) {
  using nlohmann::ordered_json;
  auto rate = [](const Tally& t) -> ordered_json {
    const auto v = t.rate();
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };
  auto tally = [&](const Tally& t) {
    ordered_json j;
    j["accuracy"] = rate(t);
    j["correct"] = t.correct;
    j["total"] = t.total;
    return j;
  };
  auto lookup = [](const auto& m, const auto& key) {
    const auto it = m.find(key);
    return it == m.end() ? Tally{} : it->second;
  };

  ordered_json j;
  j["mode"] = r.mode;
  j["config"] = config;
  j["total"] = r.overall.total;
  j["correct"] = r.overall.correct;
  j["unparsed"] = r.unparsed;
  j["accuracy"] = rate(r.overall);
  ordered_json tasks = ordered_json::object();
  for (Task t : kAllTasks) tasks[std::string(task_name(t))] = tally(lookup(r.per_task, t));
  j["per_task"] = tasks;
  j["yes_acc"] = rate(r.yes);
  j["no_acc"] = rate(r.no);
  ordered_json yn = ordered_json::object();
  for (Task t : {Task::S_YNQA, Task::C_YNQA}) {
    ordered_json e;
    e["yes_acc"] = rate(lookup(r.yes_per_task, t));
    e["no_acc"] = rate(lookup(r.no_per_task, t));
    yn[std::string(task_name(t))] = e;
  }
  j["yes_no_per_task"] = yn;
  ordered_json macro = ordered_json::object();
  for (Task t : {Task::S_MCQA, Task::C_MCQA}) {
    const auto it = r.macro.find(t);
    if (it == r.macro.end()) {
      macro[std::string(task_name(t))] = nullptr;
      continue;
    }
    ordered_json e;
    e["precision"] = it->second.precision;
    e["recall"] = it->second.recall;
    e["f1"] = it->second.f1;
    e["classes"] = it->second.classes;
    macro[std::string(task_name(t))] = e;
  }
  j["macro"] = macro;
  ordered_json types = ordered_json::object();
  for (HallucinationType t : kAllTypes) types[std::string(type_name(t))] = tally(lookup(r.per_type, t));
  j["per_type"] = types;
  return j;
}

QaEnv::QaEnv(const std::vector<QASample>& samples, const VideoStore& store, const Backbone& backbone,
             const RunConfig& cfg)
    : samples_(samples), store_(store), backbone_(backbone), cfg_(cfg),
      tool_desc_(tool_description_embeddings(backbone)) {}

EnvStep QaEnv::rollout(std::size_t index, Tape& tape, const PolicyVars& vars, const PolicyDims& dims,
                       Rng& rng) const {
  const QASample& s = samples_.at(index);
  Rollout r = tricd_rollout(tape, vars, dims, backbone_, store_.get(s.video), format_prompt(s), tool_desc_,
                            cfg_, rng);
  const Label pred = extract_answer(r.generation.text, format_of(s.task));
  return {compute_reward(pred, s.answer), r.log_prob_apc, r.log_prob_sge};
}

}  // namespace tricd
