#pragma once

#include <string>
#include <vector>

#include "poseadapt/dataset.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/skeleton.hpp"

namespace poseadapt {

// Procedural stick figures under two visually distinct rendering styles.
// Poses are drawn from a shared kinematic model; the domain shift is
// appearance-only unless styles are configured otherwise.

struct DomainStyle {
  int texture_family = 0;      // 0: gradient + stripes, 1: checkerboard
  int polarity = 0;            // 0: dark figure on light ground, 1: inverted
  double thickness_min = 1.0;  // limb half-width in pixels
  double thickness_max = 1.6;
  double noise_level = 0.02;   // photometric noise amplitude
  double tint = 0.0;           // per-channel gain spread around 1
  double scale_min = 0.55;     // figure height as a fraction of the canvas
  double scale_max = 0.8;
  double occlusion_prob = 0.0;
  uint64_t palette_seed = 0;

  std::string describe() const;
  static DomainStyle parse(const std::string& description);
};

DomainStyle default_source_style();
DomainStyle default_target_style();

// Canonical segment lengths as fractions of the figure height. Exposed so
// generated limb lengths can be audited against the configured scale range.
struct FigureProportions {
  double torso = 0.30;
  double neck = 0.10;
  double head = 0.12;
  double hip_offset = 0.09;
  double shoulder_offset = 0.13;
  double upper_leg = 0.28;
  double lower_leg = 0.27;
  double upper_arm = 0.20;
  double forearm = 0.18;
};
const FigureProportions& figure_proportions();

struct SampledPose {
  std::vector<Keypoint> keypoints;
  std::vector<uint8_t> visibility;
  double figure_height = 0.0;  // pixels
};

// Kinematically plausible 16-joint pose placed fully inside the canvas;
// occlusion flips visibility flags only, geometry is unaffected.
SampledPose sample_pose(Rng& rng, const SkeletonGraph& skeleton, int canvas,
                        const DomainStyle& style);

// Rasterizes the figure over a styled background with the style's noise.
// Keypoint annotations pass through exactly. Pixels are quantized to
// float32, the storage type.
PoseSample render_domain(const SampledPose& pose, const DomainStyle& style,
                         const SkeletonGraph& skeleton, int canvas, Rng& rng);

struct GenConfig {
  int canvas = 64;
  int m = 2000;
  int n1 = 400;
  int n2 = 1600;
  std::string mode = "ssda";  // uda requires n1 == 0
  uint64_t seed = 1;
  DomainStyle source_style = default_source_style();
  DomainStyle target_style = default_target_style();
};

// Pure function of (config, skeleton): identical inputs produce bit-identical
// datasets. Per-sample RNG streams derive from the seed and sample index.
Dataset generate_dataset(const GenConfig& cfg, const SkeletonGraph& skeleton);

GenConfig gen_config_from_kv(const KeyValues& kv);
KeyValues gen_config_to_kv(const GenConfig& cfg);

}  // namespace poseadapt
