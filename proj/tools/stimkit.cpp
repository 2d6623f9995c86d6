// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

// stimkit command-line entry point.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stimkit/cli/commands.hpp"
#include "stimkit/cli/config.hpp"

namespace {

namespace cli = stimkit::cli;

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string dataset;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config, "run config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override a config field, e.g. train.epochs=5 (repeatable)");
  cmd->add_option("--seed", f.seed, "run seed (overrides the config)");
  cmd->add_option("-o,--out", f.out, "output directory (overrides output_dir)");
  cmd->add_option("--dataset", f.dataset, "manifest path (overrides dataset)");
}

cli::RunConfig resolve(const RunFlags& f) {
  std::vector<std::string> overrides = f.sets;
  if (f.seed) overrides.push_back("seed=" + std::to_string(*f.seed));
  std::optional<std::filesystem::path> path;
  if (!f.config.empty()) path = f.config;
  cli::RunConfig config = cli::load_run_config(path, overrides);
  if (!f.out.empty()) config.output_dir = f.out;
  if (!f.dataset.empty()) config.dataset = f.dataset;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stimkit: pose-based stereotyped head motion classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stimkit 0.1.0");

  cli::ImportOptions import_opts;
  std::string import_dir, import_manifest;
  CLI::App* import_cmd = app.add_subcommand("import", "consolidate per-frame OpenPose JSON into a manifest");
  import_cmd->add_option("openpose_dir", import_dir, "directory with one subdirectory per clip")->required();
  import_cmd->add_option("manifest_out", import_manifest, "manifest to write")->required();
  import_cmd->add_option("--frame-width", import_opts.frame_width, "source video width in pixels")->required();
  import_cmd->add_option("--frame-height", import_opts.frame_height, "source video height in pixels")->required();
  import_cmd->add_option("--fps", import_opts.fps, "frame rate")->capture_default_str();

  cli::FlowvizOptions flow_opts;
  std::vector<std::string> flow_frames;
  std::string flow_method = "dense", flow_out;
  bool flow_ppm = false;
  CLI::App* flow_cmd = app.add_subcommand("flowviz", "render optical flow between consecutive frames");
  flow_cmd->add_option("frames", flow_frames, "image files (PNG, PGM or PPM) in order")->required();
  flow_cmd->add_option("-m,--method", flow_method, "lk or dense")
      ->check(CLI::IsMember({"lk", "dense"}))
      ->capture_default_str();
  flow_cmd->add_option("-o,--out", flow_out, "output directory")->required();
  flow_cmd->add_flag("--ppm", flow_ppm, "write PPM instead of PNG");
  flow_cmd->add_flag("--isolation", flow_opts.isolation, "lk: draw arrows on black");
  flow_cmd->add_flag("--json", flow_opts.dump_json, "also dump the raw flow field");
  flow_cmd->add_option("--spacing", flow_opts.spacing, "lk lattice spacing")->capture_default_str();
  flow_cmd->add_option("--arrow-scale", flow_opts.arrow_scale, "lk arrow length factor")->capture_default_str();

  RunFlags synth_flags, train_flags, cv_flags;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate the synthetic dataset");
  add_run_flags(synth_cmd, synth_flags);
  CLI::App* train_cmd = app.add_subcommand("train", "fit one model");
  add_run_flags(train_cmd, train_flags);
  CLI::App* cv_cmd = app.add_subcommand("cv", "subject-disjoint k-fold cross-validation");
  add_run_flags(cv_cmd, cv_flags);

  cli::PredictOptions pred_opts;
  std::string pred_ckpt, pred_manifest, pred_keypoints;
  std::vector<int> pred_window;
  CLI::App* pred_cmd = app.add_subcommand("predict", "per-window probabilities as JSON lines");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "model checkpoint")->required();
  auto* man = pred_cmd->add_option("--manifest", pred_manifest, "manifest holding the clip");
  pred_cmd->add_option("--clip", pred_opts.clip_id, "clip id (with --manifest)");
  auto* kp = pred_cmd->add_option("--keypoints", pred_keypoints, "consolidated file or OpenPose frame directory");
  man->excludes(kp);
  pred_cmd->add_option("--frame-width", pred_opts.frame_width, "source width (with --keypoints)");
  pred_cmd->add_option("--frame-height", pred_opts.frame_height, "source height (with --keypoints)");
  pred_cmd->add_option("--window", pred_window, "length,stride,hop (default: from the checkpoint)")
      ->expected(3)
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitUsage;
  }

  cli::Io io{std::cout, std::cerr};
  try {
    if (*import_cmd) {
      import_opts.openpose_dir = import_dir;
      import_opts.manifest_out = import_manifest;
      cli::cmd_import(import_opts, io);
    } else if (*flow_cmd) {
      for (const auto& f : flow_frames) flow_opts.frames.emplace_back(f);
      flow_opts.method = flow_method == "lk" ? cli::FlowMethod::kLucasKanade : cli::FlowMethod::kDense;
      flow_opts.out_dir = flow_out;
      flow_opts.png = !flow_ppm;
      cli::cmd_flowviz(flow_opts, io);
    } else if (*synth_cmd) {
      cli::cmd_synth(resolve(synth_flags), io);
    } else if (*train_cmd) {
      cli::cmd_train(resolve(train_flags), io);
    } else if (*cv_cmd) {
      cli::cmd_cv(resolve(cv_flags), io);
    } else if (*pred_cmd) {
      pred_opts.checkpoint = pred_ckpt;
      if (!pred_manifest.empty()) pred_opts.manifest = pred_manifest;
      if (!pred_keypoints.empty()) pred_opts.keypoints = pred_keypoints;
      if (!pred_window.empty()) pred_opts.window = stimkit::pose::WindowParams{pred_window[0], pred_window[1], pred_window[2]};
      cli::cmd_predict(pred_opts, io);
    }
  } catch (const stimkit::Error& e) {
    std::cerr << "stimkit: " << stimkit::to_string(e.kind()) << ": " << e.what() << "\n";
    return cli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "stimkit: " << e.what() << "\n";
    return cli::kExitIo;
  }
  return cli::kExitOk;
}
