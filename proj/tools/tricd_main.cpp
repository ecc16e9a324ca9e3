#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tricd/checkpoint.hpp"
#include "tricd/dataset.hpp"
#include "tricd/error.hpp"
#include "tricd/evaluation.hpp"
#include "tricd/perturbation.hpp"
#include "tricd/saliency.hpp"
#include "tricd/synthetic.hpp"
#include "tricd/toy_backbone.hpp"
#include "tricd/trainer.hpp"
#include "tricd/vseq_io.hpp"

namespace fs = std::filesystem;
using namespace tricd;

namespace {

FrameSequence read_video(const fs::path& p) {
  return fs::is_directory(p) ? import_ppm_dir(p) : load_vseq(p);
}

ToolSet parse_tool_list(const std::string& list) {
  ToolSet set;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) set.set(index_of(parse_tool(item)));
  }
  return set;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + p.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + p.string());
}

const std::vector<QASample>& pick_split(const DatasetSplit& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.val;
  return s.test;
}

struct Common {
  std::size_t threads = 1;
  std::uint64_t backbone_seed = 2025;
  std::uint64_t extractor_seed = 2025;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triple-pathway contrastive decoding toolkit"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Build a perturbed video from a tool list");
  std::string p_input, p_output, p_tools;
  std::uint64_t p_seed = 2025;
  ToolConfig tool_cfg;
  perturb->add_option("--input", p_input, "VSEQ file or directory of P6 frames")->required();
  perturb->add_option("--tools", p_tools, "Comma-separated tool names")->required();
  perturb->add_option("--seed", p_seed);
  perturb->add_option("--output", p_output)->required();
  perturb->add_option("--sample-stride", tool_cfg.sample_keep_stride);
  perturb->add_option("--blur-sigma", tool_cfg.blur_sigma);
  perturb->add_option("--blur-radius", tool_cfg.blur_kernel_radius);
  perturb->add_option("--noise-sigma", tool_cfg.noise_sigma);

  // saliency
  auto* saliency = app.add_subcommand("saliency", "Write patch-level saliency maps");
  std::string s_input, s_out, s_mode = "fused", s_spatial_file;
  double s_beta = 0.5;
  std::size_t s_patch = 16;
  saliency->add_option("--input", s_input)->required();
  saliency->add_option("--mode", s_mode)->check(CLI::IsMember({"motion", "spatial", "fused"}));
  saliency->add_option("--beta", s_beta);
  saliency->add_option("--patch", s_patch)->check(CLI::PositiveNumber);
  saliency->add_option("--out", s_out)->required();
  saliency->add_option("--spatial-file", s_spatial_file, "Precomputed spatial maps (VSEQ, C=1)");
  saliency->add_option("--extractor-seed", common.extractor_seed);

  // train
  auto* train_cmd = app.add_subcommand("train", "Optimize the policy with REINFORCE");
  std::string t_dataset, t_out;
  TrainConfig tcfg;
  std::uint64_t split_seed = 2025;
  train_cmd->add_option("--dataset", t_dataset)->required();
  train_cmd->add_option("--epochs", tcfg.epochs);
  train_cmd->add_option("--lr", tcfg.lr);
  train_cmd->add_option("--accum", tcfg.accum);
  train_cmd->add_option("--clip", tcfg.clip);
  train_cmd->add_option("--gamma", tcfg.gamma);
  train_cmd->add_option("--alpha1", tcfg.alpha1);
  train_cmd->add_option("--alpha2", tcfg.alpha2);
  train_cmd->add_option("--sigma", tcfg.sge_sigma, "Gate sampling std");
  train_cmd->add_option("--seed", tcfg.seed);
  train_cmd->add_option("--split-seed", split_seed);
  train_cmd->add_option("--out", t_out)->required();
  train_cmd->add_option("--backbone-seed", common.backbone_seed);
  train_cmd->add_option("--extractor-seed", common.extractor_seed);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a dataset split");
  std::string e_dataset, e_split = "test", e_mode = "baseline", e_checkpoint, e_report;
  EvalOptions eopts;
  eval_cmd->add_option("--dataset", e_dataset)->required();
  eval_cmd->add_option("--split", e_split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--mode", e_mode)->check(CLI::IsMember({"baseline", "tricd"}));
  eval_cmd->add_option("--checkpoint", e_checkpoint);
  eval_cmd->add_option("--alpha1", eopts.run.alpha1);
  eval_cmd->add_option("--alpha2", eopts.run.alpha2);
  eval_cmd->add_option("--gamma", eopts.run.gamma);
  eval_cmd->add_option("--seed", eopts.seed);
  eval_cmd->add_option("--split-seed", split_seed);
  eval_cmd->add_option("--report", e_report);
  eval_cmd->add_option("--backbone-seed", common.backbone_seed);
  eval_cmd->add_option("--extractor-seed", common.extractor_seed);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Write the synthetic QA corpus");
  std::string g_out;
  std::size_t g_n = 200;
  std::uint64_t g_seed = 2025;
  gen->add_option("--out", g_out)->required();
  gen->add_option("--n", g_n);
  gen->add_option("--seed", g_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*perturb) {
      tool_cfg.validate();
      const FrameSequence in = read_video(p_input);
      Rng rng(p_seed);
      save_vseq(compose_dual_stage(in, parse_tool_list(p_tools), tool_cfg, rng), p_output);
    } else if (*saliency) {
      const FrameSequence in = read_video(s_input);
      SaliencyPair pair;
      if (s_spatial_file.empty()) {
        pair = compute_saliency(in, ToySpatialExtractor(common.extractor_seed), s_patch);
      } else {
        pair = compute_saliency(in, FileSpatialSaliency(s_spatial_file), s_patch);
      }
      std::vector<Grid2D> maps;
      if (s_mode == "motion") maps = pair.motion;
      else if (s_mode == "spatial") maps = pair.spatial;
      else maps = fuse(pair, s_beta);
      save_vseq(grids_to_sequence(maps), s_out);
    } else if (*train_cmd) {
      tcfg.validate();
      const auto samples = load_dataset(t_dataset);
      const DatasetSplit split = split_dataset(samples, split_seed);
      if (split.train.empty()) throw Error(ErrorCode::EmptyDataset, "train split is empty");
      ToyBackbone backbone(common.backbone_seed);
      ToySpatialExtractor extractor(common.extractor_seed);
      RunConfig run;
      run.gamma = tcfg.gamma;
      run.alpha1 = tcfg.alpha1;
      run.alpha2 = tcfg.alpha2;
      run.sge_sigma = tcfg.sge_sigma;
      VideoStore store(split.train, backbone, extractor, run, common.threads);
      QaEnv env(split.train, store, backbone, run);
      PolicyParams params = init_params(tcfg.seed);
      const TrainResult result = train(env, params, tcfg);
      save_checkpoint(t_out, params, result.state, tcfg.seed);
      double mean_reward = 0.0;
      for (const auto& h : result.history) mean_reward += h.reward;
      if (!result.history.empty()) mean_reward /= static_cast<double>(result.history.size());
      std::printf("episodes %zu  updates %zu  mean reward %.4f  baseline %.4f\n", result.state.samples,
                  result.state.step, mean_reward, result.state.baseline);
    } else if (*eval_cmd) {
      eopts.mode = e_mode == "tricd" ? EvalMode::TriCD : EvalMode::Baseline;
      eopts.threads = common.threads;
      const auto samples = load_dataset(e_dataset);
      const DatasetSplit split = split_dataset(samples, split_seed);
      const auto& subset = pick_split(split, e_split);
      ToyBackbone backbone(common.backbone_seed);
      ToySpatialExtractor extractor(common.extractor_seed);
      PolicyParams policy;
      if (eopts.mode == EvalMode::TriCD) {
        if (e_checkpoint.empty()) throw Error(ErrorCode::InvalidArgument, "--mode tricd needs --checkpoint");
        policy = load_checkpoint(e_checkpoint).params;
      }
      VideoStore store(subset, backbone, extractor, eopts.run, common.threads);
      const EvalOutput out = run_eval(subset, store, backbone, &policy, eopts);

      nlohmann::ordered_json config;
      config["dataset"] = fs::path(e_dataset).filename().string();
      config["split"] = e_split;
      config["checkpoint"] = e_checkpoint.empty() ? nlohmann::ordered_json(nullptr)
                                                  : nlohmann::ordered_json(fs::path(e_checkpoint).filename().string());
      config["alpha1"] = eopts.run.alpha1;
      config["alpha2"] = eopts.run.alpha2;
      config["gamma"] = eopts.run.gamma;
      config["seed"] = eopts.seed;
      config["split_seed"] = split_seed;
      config["backbone_seed"] = common.backbone_seed;
      const std::string text = report_to_json(out.report, config).dump(2) + "\n";
      if (e_report.empty()) std::cout << text;
      else write_text(e_report, text);
      if (out.report.overall.rate()) {
        std::fprintf(stderr, "%s accuracy %.4f (%zu/%zu)\n", e_mode.c_str(), *out.report.overall.rate(),
                     out.report.overall.correct, out.report.overall.total);
      }
    } else if (*gen) {
      const auto samples = gen_synthetic(g_out, g_n, g_seed);
      std::printf("%zu videos, %zu questions -> %s\n", g_n, samples.size(), g_out.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
