#pragma once

#include <functional>
#include <string>
#include <vector>

#include "poseadapt/augment.hpp"
#include "poseadapt/cafa.hpp"
#include "poseadapt/config.hpp"
#include "poseadapt/dataset.hpp"
#include "poseadapt/ihta.hpp"
#include "poseadapt/metrics.hpp"
#include "poseadapt/optim.hpp"
#include "poseadapt/posenet.hpp"
#include "poseadapt/skeleton.hpp"

namespace poseadapt {

enum class Mode { kDt, kUda, kSsda };

std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);

struct ModuleToggles {
  bool cafa = true;
  bool isa = true;
  bool ihta = true;
  bool entropy = true;
};

struct LossWeights {
  double beta_sup = 1.0;
  double beta_da = 0.5;   // the "beta" swept in the sensitivity table
  double alpha_tl = 0.5;
  double alpha_sa = 0.5;  // alpha_{sa,sm,fd} are the swept "alpha"
  double alpha_sm = 0.5;
  double alpha_fd = 0.5;
  double entropy = 0.1;
};

// Per-step (or per-epoch average) named loss components. The identities
//   sup   = alpha_tl * pose_tl + pose_s
//   da    = alpha_sa * sa + alpha_sm * sm + alpha_fd * fd
//   total = beta_sup * sup + beta_da * da + entropy_weight * ent
// hold exactly; disabled components are exactly zero.
struct LossLedger {
  double pose_s = 0, pose_tl = 0, sa = 0, sm = 0, fd = 0, ent = 0;
  double sup = 0, da = 0, total = 0;
};

struct TrainConfig {
  Mode mode = Mode::kUda;
  ModuleToggles modules;
  uint64_t seed = 1;
  int epochs = 40;
  int batch_source = 8;
  int batch_tu = -1;  // -1: 8 in uda, 4 in ssda (equal per-domain totals)
  int batch_tl = 4;
  AdamConfig adam;
  LossWeights weights;
  PoseNetConfig model;
  int cafa_proj_channels = -1;  // -1: model.channels / 2
  GcnConfig gcn;                // in_channels/out_channels track model.channels
  double tau = 0.7;
  AugmentConfig aug;

  static TrainConfig from_kv(const KeyValues& kv);
  KeyValues to_kv() const;  // the full effective config, echoed everywhere

  int effective_batch_tu() const;
  // mode gating: DT disables everything, UDA disables ISA
  ModuleToggles effective_modules() const;
  CafaConfig cafa_config() const;
};

// Graph nodes for the per-mode loss components; undefined tensors mean the
// component is disabled for this step.
struct LossTerms {
  Tensor pose_s, pose_tl, sa, sm, fd, ent;
};

// Assembles the weighted total and fills the ledger from the same
// arithmetic. Throws if a component required by (mode, toggles) is missing.
Tensor total_loss(const LossTerms& terms, const LossWeights& weights, Mode mode,
                  const ModuleToggles& toggles, LossLedger* ledger);

struct TrainerState {
  TrainConfig config;
  SkeletonGraph skeleton;
  ParamSet params;
  AdamState adam;
  int epoch = 0;
  Rng data_rng;
};

TrainerState init_trainer(const TrainConfig& cfg, const SkeletonGraph& skeleton);

// One full pass over the source split with per-step Adam updates; returns
// the epoch-averaged ledger. Aborts (throws) on a non-finite loss component,
// naming it.
LossLedger train_epoch(TrainerState& state, const Dataset& ds);

// Runs epochs up to config.epochs; invokes on_epoch (may be empty) with the
// averaged ledger after each epoch.
void train(TrainerState& state, const Dataset& ds,
           const std::function<void(int, const LossLedger&)>& on_epoch = {});

void save_trainer_checkpoint(const TrainerState& state, const std::string& path);
TrainerState load_trainer_checkpoint(const std::string& path);

// Inference-path PCK over the given sample indices (no augmentation, raw
// features into the decoder).
PckReport evaluate_pck(const TrainerState& state, const Dataset& ds,
                       const std::vector<int>& indices, double threshold,
                       const std::string& normalizer);

}  // namespace poseadapt
