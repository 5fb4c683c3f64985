#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "poseadapt/harness.hpp"
#include "poseadapt/trainer.hpp"

using namespace poseadapt;

namespace {

KeyValues load_config(const std::string& path, const std::vector<std::string>& overrides) {
  KeyValues kv = path.empty() ? KeyValues{} : parse_kv_file(path);
  for (const auto& o : overrides) apply_override(kv, o);
  return kv;
}

SkeletonGraph skeleton_from(const KeyValues& kv) {
  if (kv.has("skeleton")) return load_skeleton(kv.get("skeleton"));
  return default_skeleton16();
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
  std::vector<uint64_t> seeds;
  std::string tok;
  std::istringstream in(spec);
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  }
  return seeds;
}

std::vector<int> eval_indices(const Dataset& ds, const std::string& split) {
  if (split == "tu") return ds.target_unlabeled_indices();
  if (split == "tl") return ds.target_labeled_indices();
  if (split == "source") return ds.source_indices();
  if (split == "target" || split == "all") {
    auto idx = ds.target_labeled_indices();
    auto tu = ds.target_unlabeled_indices();
    idx.insert(idx.end(), tu.begin(), tu.end());
    if (split == "all") {
      auto src = ds.source_indices();
      idx.insert(idx.begin(), src.begin(), src.end());
    }
    return idx;
  }
  throw std::invalid_argument("eval: unknown split " + split);
}

double parse_metric_threshold(const std::string& metric) {
  // "pck@0.2" style
  if (metric.rfind("pck@", 0) != 0) {
    throw std::invalid_argument("eval: metric must look like pck@0.2, got " + metric);
  }
  return std::stod(metric.substr(4));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic cross-domain pose estimation workbench"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_path, ckpt_path, resume_path;
  std::string metric = "pck@0.2", normalizer = "bbox_diag", split = "tu";
  std::string seeds_spec = "1,2,3,4,5", param = "alpha", grid = "0.3:0.9:0.1";
  std::string kind = "line", in_path;
  std::vector<std::string> overrides;
  int jobs = 1;
  bool quiet = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "plain-text key = value config file");
    cmd->add_option("--set", overrides, "override a config key, e.g. --set seed=7")
        ->take_all();
  };

  auto* gen = app.add_subcommand("gen", "generate a synthetic cross-domain dataset");
  add_common(gen);
  gen->add_option("--out", out_path, "output dataset directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
  add_common(train_cmd);
  train_cmd->add_option("--data", data_dir, "dataset directory")->required();
  train_cmd->add_option("--out", ckpt_path, "checkpoint output path")->required();
  train_cmd->add_option("--resume", resume_path, "resume from a checkpoint");
  train_cmd->add_flag("--quiet", quiet, "suppress per-epoch output");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  eval_cmd->add_option("--data", data_dir, "dataset directory")->required();
  eval_cmd->add_option("--metric", metric, "pck@<threshold> (default pck@0.2)");
  eval_cmd->add_option("--normalizer", normalizer, "bbox_diag or head");
  eval_cmd->add_option("--split", split, "tu, tl, source, target, or all");

  auto* ablate = app.add_subcommand("ablate", "run the component ablation table");
  add_common(ablate);
  ablate->add_option("--data", data_dir, "dataset directory")->required();
  ablate->add_option("--out", out_path, "output CSV path")->required();
  ablate->add_option("--seeds", seeds_spec, "comma-separated seeds (>= 3)");
  ablate->add_option("--jobs", jobs, "parallel runs (each run stays single-threaded)");
  ablate->add_option("--metric", metric, "pck@<threshold>");
  ablate->add_option("--normalizer", normalizer, "bbox_diag or head");

  auto* sweep = app.add_subcommand("sweep", "sweep a loss-weight hyperparameter");
  add_common(sweep);
  sweep->add_option("--data", data_dir, "dataset directory")->required();
  sweep->add_option("--out", out_path, "output CSV path")->required();
  sweep->add_option("--param", param, "alpha or beta");
  sweep->add_option("--grid", grid, "lo:hi:step or comma list (default 0.3:0.9:0.1)");
  sweep->add_option("--jobs", jobs, "parallel runs");
  sweep->add_option("--metric", metric, "pck@<threshold>");

  auto* plot = app.add_subcommand("plot", "render a CSV table as an SVG chart");
  plot->add_option("--in", in_path, "input CSV path")->required();
  plot->add_option("--kind", kind, "line or bar");
  plot->add_option("--out", out_path, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      auto kv = load_config(config_path, overrides);
      auto cfg = gen_config_from_kv(kv);
      auto skeleton = skeleton_from(kv);
      auto ds = generate_dataset(cfg, skeleton);
      write_dataset(ds, out_path);
      std::printf("wrote %d samples (m=%d n1=%d n2=%d) to %s\n",
                  static_cast<int>(ds.samples.size()), cfg.m, cfg.n1, cfg.n2,
                  out_path.c_str());
    } else if (train_cmd->parsed()) {
      auto ds = read_dataset(data_dir);
      TrainerState state = [&] {
        if (!resume_path.empty()) {
          auto resumed = load_trainer_checkpoint(resume_path);
          if (!config_path.empty() || !overrides.empty()) {
            auto kv = load_config(config_path, overrides);
            auto want = TrainConfig::from_kv(kv).to_kv().serialize();
            if (want != resumed.config.to_kv().serialize()) {
              throw std::runtime_error("train: config does not match the checkpoint echo");
            }
          }
          return resumed;
        }
        auto kv = load_config(config_path, overrides);
        return init_trainer(TrainConfig::from_kv(kv), skeleton_from(kv));
      }();
      train(state, ds, [&](int epoch, const LossLedger& ledger) {
        if (!quiet) {
          std::printf("epoch %3d/%d  total %.6f  pose_s %.6f  da %.6f  ent %.6f\n", epoch,
                      state.config.epochs, ledger.total, ledger.pose_s, ledger.da,
                      ledger.ent);
          std::fflush(stdout);
        }
      });
      save_trainer_checkpoint(state, ckpt_path);
      std::printf("saved checkpoint to %s\n", ckpt_path.c_str());
    } else if (eval_cmd->parsed()) {
      auto ds = read_dataset(data_dir);
      auto state = load_trainer_checkpoint(ckpt_path);
      const double threshold = parse_metric_threshold(metric);
      auto report = evaluate_pck(state, ds, eval_indices(ds, split), threshold, normalizer);
      std::printf("pck@%g (%s, %s split): %.4f\n", threshold, normalizer.c_str(),
                  split.c_str(), 100.0 * report.total);
      for (size_t i = 0; i < report.per_joint.size(); ++i) {
        const std::string name = state.skeleton.joint_names.empty()
                                     ? "joint" + std::to_string(i)
                                     : state.skeleton.joint_names[i];
        std::printf("  %-16s %.4f (%d evaluated)\n", name.c_str(),
                    100.0 * report.per_joint[i], report.evaluated[i]);
      }
      if (report.skipped > 0) {
        std::printf("  (skipped %d samples with a zero normalizer)\n", report.skipped);
      }
    } else if (ablate->parsed()) {
      auto kv = load_config(config_path, overrides);
      auto base = TrainConfig::from_kv(kv);
      auto ds = read_dataset(data_dir);
      auto outcomes = run_ablation(base, ds, parse_seeds(seeds_spec), jobs,
                                   parse_metric_threshold(metric), normalizer);
      write_csv(ablation_csv(outcomes), out_path);
      std::printf("wrote ablation table to %s\n", out_path.c_str());
    } else if (sweep->parsed()) {
      auto kv = load_config(config_path, overrides);
      auto base = TrainConfig::from_kv(kv);
      auto ds = read_dataset(data_dir);
      auto outcomes = sweep_weights(param, parse_grid(grid), base, ds, jobs,
                                    parse_metric_threshold(metric), normalizer);
      write_csv(sweep_csv(outcomes), out_path);
      std::printf("wrote sweep table to %s\n", out_path.c_str());
    } else if (plot->parsed()) {
      emit_plot(in_path, kind, out_path);
      std::printf("wrote %s\n", out_path.c_str());
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '"') c = '\'';
      if (c == '\n') c = ' ';
    }
    std::fprintf(stderr, "{\"error\":\"%s\"}\n", msg.c_str());
    return 1;
  }
  return 0;
}
