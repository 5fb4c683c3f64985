#include "poseadapt/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace poseadapt {

namespace {

// MPII 16-joint indices
enum Joint {
  kRAnkle = 0,
  kRKnee = 1,
  kRHip = 2,
  kLHip = 3,
  kLKnee = 4,
  kLAnkle = 5,
  kPelvis = 6,
  kThorax = 7,
  kNeck = 8,
  kHeadTop = 9,
  kRWrist = 10,
  kRElbow = 11,
  kRShoulder = 12,
  kLShoulder = 13,
  kLElbow = 14,
  kLWrist = 15,
};

struct Vec2 {
  double x = 0.0, y = 0.0;
};

Vec2 up(double a) { return {std::sin(a), -std::cos(a)}; }
Vec2 down(double a) { return {std::sin(a), std::cos(a)}; }
Vec2 perp(double a) { return {std::cos(a), std::sin(a)}; }
Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string DomainStyle::describe() const {
  std::ostringstream os;
  os << "family=" << texture_family << " polarity=" << polarity << " thickness="
     << fmt(thickness_min) << ":" << fmt(thickness_max) << " noise=" << fmt(noise_level)
     << " tint=" << fmt(tint) << " scale=" << fmt(scale_min) << ":" << fmt(scale_max)
     << " occlusion=" << fmt(occlusion_prob) << " palette=" << palette_seed;
  return os.str();
}

DomainStyle DomainStyle::parse(const std::string& description) {
  DomainStyle s;
  std::istringstream in(description);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("style: malformed token " + tok);
    }
    const auto key = tok.substr(0, eq);
    const auto val = tok.substr(eq + 1);
    auto range = [&val](double& lo, double& hi) {
      const auto colon = val.find(':');
      if (colon == std::string::npos) throw std::invalid_argument("style: expected lo:hi");
      lo = std::stod(val.substr(0, colon));
      hi = std::stod(val.substr(colon + 1));
    };
    if (key == "family") {
      s.texture_family = std::stoi(val);
    } else if (key == "polarity") {
      s.polarity = std::stoi(val);
    } else if (key == "thickness") {
      range(s.thickness_min, s.thickness_max);
    } else if (key == "noise") {
      s.noise_level = std::stod(val);
    } else if (key == "tint") {
      s.tint = std::stod(val);
    } else if (key == "scale") {
      range(s.scale_min, s.scale_max);
    } else if (key == "occlusion") {
      s.occlusion_prob = std::stod(val);
    } else if (key == "palette") {
      s.palette_seed = std::stoull(val);
    } else {
      throw std::invalid_argument("style: unknown key " + key);
    }
  }
  if (s.occlusion_prob < 0.0 || s.occlusion_prob > 1.0 || s.thickness_min > s.thickness_max ||
      s.scale_min > s.scale_max) {
    throw std::invalid_argument("style: invalid ranges in " + description);
  }
  return s;
}

DomainStyle default_source_style() {
  DomainStyle s;
  s.texture_family = 0;
  s.polarity = 0;
  s.thickness_min = 1.0;
  s.thickness_max = 1.6;
  s.noise_level = 0.02;
  s.tint = 0.0;
  s.scale_min = 0.5;
  s.scale_max = 0.75;
  s.occlusion_prob = 0.05;
  s.palette_seed = 11;
  return s;
}

DomainStyle default_target_style() {
  DomainStyle s;
  s.texture_family = 1;
  s.polarity = 0;
  s.thickness_min = 1.6;
  s.thickness_max = 2.4;
  s.noise_level = 0.08;
  s.tint = 0.35;
  s.scale_min = 0.5;
  s.scale_max = 0.75;
  s.occlusion_prob = 0.05;
  s.palette_seed = 29;
  return s;
}

const FigureProportions& figure_proportions() {
  static const FigureProportions p;
  return p;
}

SampledPose sample_pose(Rng& rng, const SkeletonGraph& skeleton, int canvas,
                        const DomainStyle& style) {
  if (skeleton.num_joints != 16) {
    throw std::invalid_argument("sample_pose: generator is defined for the 16-joint skeleton");
  }
  const auto& fp = figure_proportions();

  // canonical pose in figure-height units, pelvis at the origin, y down
  const double torso_a = rng.uniform(-0.35, 0.35);
  const double neck_a = torso_a + rng.uniform(-0.25, 0.25);
  const double head_a = neck_a + rng.uniform(-0.2, 0.2);

  std::array<Vec2, 16> p{};
  p[kPelvis] = {0.0, 0.0};
  p[kThorax] = p[kPelvis] + fp.torso * up(torso_a);
  p[kNeck] = p[kThorax] + fp.neck * up(neck_a);
  p[kHeadTop] = p[kNeck] + fp.head * up(head_a);
  p[kRHip] = p[kPelvis] + -fp.hip_offset * perp(torso_a);
  p[kLHip] = p[kPelvis] + fp.hip_offset * perp(torso_a);

  auto leg = [&](int hip, int knee, int ankle) {
    const double swing = rng.uniform(-0.55, 0.55);
    const double bend = rng.uniform(-0.35, 0.9);
    p[knee] = p[hip] + fp.upper_leg * down(swing);
    p[ankle] = p[knee] + fp.lower_leg * down(swing + bend);
  };
  leg(kRHip, kRKnee, kRAnkle);
  leg(kLHip, kLKnee, kLAnkle);

  p[kRShoulder] = p[kThorax] + -fp.shoulder_offset * perp(neck_a);
  p[kLShoulder] = p[kThorax] + fp.shoulder_offset * perp(neck_a);
  auto arm = [&](int shoulder, int elbow, int wrist) {
    const double swing = neck_a + rng.uniform(-1.4, 1.4);
    const double bend = rng.uniform(-0.2, 2.2);
    p[elbow] = p[shoulder] + fp.upper_arm * down(swing);
    p[wrist] = p[elbow] + fp.forearm * down(swing + bend);
  };
  arm(kRShoulder, kRElbow, kRWrist);
  arm(kLShoulder, kLElbow, kLWrist);

  // scale to pixels, capped so the figure always fits with a 2 px margin
  double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
  for (const auto& v : p) {
    min_x = std::min(min_x, v.x);
    max_x = std::max(max_x, v.x);
    min_y = std::min(min_y, v.y);
    max_y = std::max(max_y, v.y);
  }
  const double margin = 2.0;
  const double usable = canvas - 1 - 2 * margin;
  double height = canvas * rng.uniform(style.scale_min, style.scale_max);
  const double fit = usable / std::max(max_x - min_x, max_y - min_y);
  height = std::min(height, fit);

  const double x0 = rng.uniform(margin - min_x * height, canvas - 1 - margin - max_x * height);
  const double y0 = rng.uniform(margin - min_y * height, canvas - 1 - margin - max_y * height);

  SampledPose out;
  out.figure_height = height;
  out.keypoints.resize(16);
  out.visibility.resize(16);
  for (int i = 0; i < 16; ++i) {
    out.keypoints[i] = {x0 + p[i].x * height, y0 + p[i].y * height};
    out.visibility[i] = rng.bernoulli(style.occlusion_prob) ? 0 : 1;
  }
  return out;
}

namespace {

double segment_distance(double px, double py, const Keypoint& a, const Keypoint& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

PoseSample render_domain(const SampledPose& pose, const DomainStyle& style,
                         const SkeletonGraph& skeleton, int canvas, Rng& rng) {
  for (const auto& kp : pose.keypoints) {
    if (kp.x < 0 || kp.x > canvas - 1 || kp.y < 0 || kp.y > canvas - 1) {
      throw std::invalid_argument("render_domain: pose exceeds canvas");
    }
  }

  // palette is a pure function of the style
  Rng palette(style.palette_seed);
  double bg[3], tex[3], fig[3], gain[3];
  if (style.polarity == 0) {
    for (int c = 0; c < 3; ++c) {
      bg[c] = 0.72 + 0.18 * palette.uniform();
      tex[c] = bg[c] - 0.10 - 0.06 * palette.uniform();
      fig[c] = 0.04 + 0.14 * palette.uniform();
    }
  } else {
    for (int c = 0; c < 3; ++c) {
      bg[c] = 0.12 + 0.14 * palette.uniform();
      tex[c] = bg[c] + 0.10 + 0.06 * palette.uniform();
      fig[c] = 0.78 + 0.18 * palette.uniform();
    }
  }
  for (int c = 0; c < 3; ++c) {
    gain[c] = 1.0 - style.tint * palette.uniform();
  }

  // per-sample texture nuisance parameters
  const double phase = rng.uniform(0.0, 6.2831853);
  const double freq = rng.uniform(0.15, 0.45);
  const int cell = 3 + static_cast<int>(rng.uniform_int(4));
  const int cell_off = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cell) * 2));
  const double thickness = rng.uniform(style.thickness_min, style.thickness_max);

  PoseSample s;
  s.image.channels = 3;
  s.image.height = canvas;
  s.image.width = canvas;
  s.image.pixels.resize(static_cast<size_t>(3) * canvas * canvas);

  for (int y = 0; y < canvas; ++y) {
    for (int x = 0; x < canvas; ++x) {
      double mix;
      if (style.texture_family == 0) {
        mix = 0.5 + 0.5 * std::sin(phase + freq * (x + 0.73 * y));
      } else {
        mix = (((x + cell_off) / cell + (y + cell_off) / cell) % 2 == 0) ? 0.0 : 1.0;
      }
      double dist = 1e9;
      for (auto [a, b] : skeleton.limbs) {
        dist = std::min(dist, segment_distance(x, y, pose.keypoints[a], pose.keypoints[b]));
      }
      const double alpha = std::clamp(thickness + 0.5 - dist, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        double v = bg[c] * (1.0 - mix) + tex[c] * mix;
        v = v * (1.0 - alpha) + fig[c] * alpha;
        v = v * gain[c] + rng.uniform(-style.noise_level, style.noise_level);
        s.image.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }

  s.keypoints = pose.keypoints;
  s.visibility = pose.visibility;
  return s;
}

Dataset generate_dataset(const GenConfig& cfg, const SkeletonGraph& skeleton) {
  if (cfg.mode == "uda" && cfg.n1 != 0) {
    throw std::invalid_argument("generate_dataset: uda mode requires n1 = 0");
  }
  Dataset ds;
  ds.manifest.version = 1;
  ds.manifest.num_keypoints = skeleton.num_joints;
  ds.manifest.channels = 3;
  ds.manifest.image_size = cfg.canvas;
  ds.manifest.m = cfg.m;
  ds.manifest.n1 = cfg.n1;
  ds.manifest.n2 = cfg.n2;
  ds.manifest.mode = cfg.mode;
  ds.manifest.seed = cfg.seed;
  ds.manifest.style_source = cfg.source_style.describe();
  ds.manifest.style_target = cfg.target_style.describe();
  ds.manifest.validate();

  const int total = cfg.m + cfg.n1 + cfg.n2;
  ds.samples.reserve(total);
  for (int i = 0; i < total; ++i) {
    const bool is_source = i < cfg.m;
    const auto& style = is_source ? cfg.source_style : cfg.target_style;
    Rng rng(Rng::derive(cfg.seed, static_cast<uint64_t>(i)));
    const auto pose = sample_pose(rng, skeleton, cfg.canvas, style);
    auto sample = render_domain(pose, style, skeleton, cfg.canvas, rng);
    sample.domain = is_source ? DomainTag::kSource : DomainTag::kTarget;
    sample.labeled = is_source || i < cfg.m + cfg.n1;
    ds.samples.push_back(std::move(sample));
  }
  return ds;
}

GenConfig gen_config_from_kv(const KeyValues& kv) {
  GenConfig cfg;
  cfg.canvas = kv.get_int("gen.canvas", 64);
  cfg.m = kv.get_int("gen.m", 2000);
  cfg.n1 = kv.get_int("gen.n1", 400);
  cfg.n2 = kv.get_int("gen.n2", 1600);
  cfg.mode = kv.get_or("gen.mode", "ssda");
  cfg.seed = kv.get_u64("gen.seed", 1);
  if (kv.has("gen.source.style")) {
    cfg.source_style = DomainStyle::parse(kv.get("gen.source.style"));
  }
  if (kv.has("gen.target.style")) {
    cfg.target_style = DomainStyle::parse(kv.get("gen.target.style"));
  }
  return cfg;
}

KeyValues gen_config_to_kv(const GenConfig& cfg) {
  KeyValues kv;
  kv.set_int("gen.canvas", cfg.canvas);
  kv.set_int("gen.m", cfg.m);
  kv.set_int("gen.n1", cfg.n1);
  kv.set_int("gen.n2", cfg.n2);
  kv.set("gen.mode", cfg.mode);
  kv.set("gen.seed", std::to_string(cfg.seed));
  kv.set("gen.source.style", cfg.source_style.describe());
  kv.set("gen.target.style", cfg.target_style.describe());
  return kv;
}

}  // namespace poseadapt
