#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poseadapt/report.hpp"
#include "poseadapt/synth.hpp"
#include "poseadapt/trainer.hpp"

namespace poseadapt {

// One training-plus-evaluation run inside the ablation or sweep harness.
// metric is the target-unlabeled PCK total in percent. Runs that abort keep
// their error text in status instead of being dropped.
struct RunOutcome {
  std::string label;
  std::string mode;
  uint64_t seed = 0;
  double value = 0.0;  // swept weight value (sweep only)
  double metric = 0.0;
  double runtime_s = 0.0;
  std::string status = "ok";
};

// The fixed ablation set: DT, DT+CAFA, DT+ISA, DT+IHTA, UDA (full objective
// without ISA), Ours (SSDA with everything).
const std::vector<std::string>& ablation_labels();

// Applies a labeled ablation configuration (mode + module toggles) on top of
// the base config.
TrainConfig ablation_config(const TrainConfig& base, const std::string& label);

std::vector<RunOutcome> run_ablation(const TrainConfig& base, const Dataset& ds,
                                     const std::vector<uint64_t>& seeds, int jobs = 1,
                                     double threshold = 0.2,
                                     const std::string& normalizer = "bbox_diag");

// Per-seed rows plus one mean row per label: label,seed,metric,runtime_s,status.
CsvTable ablation_csv(const std::vector<RunOutcome>& outcomes);

// Sweeps "alpha" (alpha_sa = alpha_sm = alpha_fd jointly) or "beta"
// (beta_da, with beta_sup fixed) over the given values; one run per value
// using the base config's seed and mode.
std::vector<RunOutcome> sweep_weights(const std::string& param,
                                      const std::vector<double>& values,
                                      const TrainConfig& base, const Dataset& ds,
                                      int jobs = 1, double threshold = 0.2,
                                      const std::string& normalizer = "bbox_diag");

// One row per value: param,value,mode,seed,metric (no wall-clock column, so
// reruns are byte-identical).
CsvTable sweep_csv(const std::vector<RunOutcome>& outcomes);

// "lo:hi:step" (inclusive) or a comma-separated list; values must be >= 0.
std::vector<double> parse_grid(const std::string& spec);

}  // namespace poseadapt
