#include "poseadapt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "poseadapt/checkpoint.hpp"
#include "poseadapt/isa.hpp"

namespace poseadapt {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kDt: return "dt";
    case Mode::kUda: return "uda";
    case Mode::kSsda: return "ssda";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "dt") return Mode::kDt;
  if (name == "uda") return Mode::kUda;
  if (name == "ssda") return Mode::kSsda;
  throw std::invalid_argument("config: unknown mode " + name);
}

int TrainConfig::effective_batch_tu() const {
  if (batch_tu > 0) return batch_tu;
  return mode == Mode::kSsda ? 4 : 8;
}

ModuleToggles TrainConfig::effective_modules() const {
  ModuleToggles t = modules;
  if (mode == Mode::kDt) t = {false, false, false, false};
  if (mode == Mode::kUda) t.isa = false;
  return t;
}

CafaConfig TrainConfig::cafa_config() const {
  CafaConfig c;
  c.channels = model.channels;
  c.proj_channels = cafa_proj_channels > 0 ? cafa_proj_channels : std::max(1, model.channels / 2);
  return c;
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv) {
  TrainConfig c;
  c.mode = parse_mode(kv.get_or("mode", "uda"));
  c.modules.cafa = kv.get_bool("modules.cafa", true);
  c.modules.isa = kv.get_bool("modules.isa", true);
  c.modules.ihta = kv.get_bool("modules.ihta", true);
  c.modules.entropy = kv.get_bool("modules.entropy", true);
  c.seed = kv.get_u64("seed", 1);
  c.epochs = kv.get_int("epochs", 40);
  c.batch_source = kv.get_int("batch.source", 8);
  c.batch_tu = kv.get_int("batch.target_unlabeled", -1);
  c.batch_tl = kv.get_int("batch.target_labeled", 4);
  c.adam.lr = kv.get_double("adam.lr", 1e-4);
  c.adam.beta1 = kv.get_double("adam.beta1", 0.9);
  c.adam.beta2 = kv.get_double("adam.beta2", 0.999);
  c.adam.weight_decay = kv.get_double("adam.weight_decay", 1e-4);
  c.adam.eps = kv.get_double("adam.eps", 1e-8);
  c.weights.beta_sup = kv.get_double("weights.beta_sup", 1.0);
  c.weights.beta_da = kv.get_double("weights.beta_da", 0.5);
  c.weights.alpha_tl = kv.get_double("weights.alpha_tl", 0.5);
  c.weights.alpha_sa = kv.get_double("weights.alpha_sa", 0.5);
  c.weights.alpha_sm = kv.get_double("weights.alpha_sm", 0.5);
  c.weights.alpha_fd = kv.get_double("weights.alpha_fd", 0.5);
  c.weights.entropy = kv.get_double("weights.entropy", 0.1);
  c.model.in_channels = kv.get_int("model.in_channels", 3);
  c.model.image_size = kv.get_int("model.image_size", 64);
  c.model.enc_hidden = kv.get_int("model.enc_hidden", 16);
  c.model.channels = kv.get_int("model.channels", 32);
  c.model.dec_hidden = kv.get_int("model.dec_hidden", 32);
  c.model.num_keypoints = kv.get_int("model.keypoints", 16);
  c.model.sigma = kv.get_double("model.sigma", 1.5);
  c.cafa_proj_channels = kv.get_int("cafa.proj_channels", -1);
  c.gcn.in_channels = c.model.channels;
  c.gcn.hidden = kv.get_int("gcn.hidden", 64);
  c.gcn.blocks = kv.get_int("gcn.blocks", 2);
  c.gcn.out_channels = kv.get_int("gcn.out_channels", c.model.channels);
  c.tau = kv.get_double("ihta.tau", 0.7);
  c.aug.enabled = kv.get_bool("augment.enabled", true);
  c.aug.flip_prob = kv.get_double("augment.flip_prob", 0.5);
  c.aug.scale_min = kv.get_double("augment.scale_min", 0.7);
  c.aug.scale_max = kv.get_double("augment.scale_max", 1.3);
  c.aug.rotation_deg = kv.get_double("augment.rotation_deg", 40.0);

  for (const auto& [w, v] : {std::pair{"beta_sup", c.weights.beta_sup},
                             {"beta_da", c.weights.beta_da},
                             {"alpha_tl", c.weights.alpha_tl},
                             {"alpha_sa", c.weights.alpha_sa},
                             {"alpha_sm", c.weights.alpha_sm},
                             {"alpha_fd", c.weights.alpha_fd},
                             {"entropy", c.weights.entropy}}) {
    if (v < 0.0) throw std::invalid_argument(std::string("config: weights.") + w +
                                             " must be nonnegative");
  }
  return c;
}

KeyValues TrainConfig::to_kv() const {
  KeyValues kv;
  kv.set("mode", mode_name(mode));
  kv.set_bool("modules.cafa", modules.cafa);
  kv.set_bool("modules.isa", modules.isa);
  kv.set_bool("modules.ihta", modules.ihta);
  kv.set_bool("modules.entropy", modules.entropy);
  kv.set("seed", std::to_string(seed));
  kv.set_int("epochs", epochs);
  kv.set_int("batch.source", batch_source);
  kv.set_int("batch.target_unlabeled", batch_tu);
  kv.set_int("batch.target_labeled", batch_tl);
  kv.set_double("adam.lr", adam.lr);
  kv.set_double("adam.beta1", adam.beta1);
  kv.set_double("adam.beta2", adam.beta2);
  kv.set_double("adam.weight_decay", adam.weight_decay);
  kv.set_double("adam.eps", adam.eps);
  kv.set_double("weights.beta_sup", weights.beta_sup);
  kv.set_double("weights.beta_da", weights.beta_da);
  kv.set_double("weights.alpha_tl", weights.alpha_tl);
  kv.set_double("weights.alpha_sa", weights.alpha_sa);
  kv.set_double("weights.alpha_sm", weights.alpha_sm);
  kv.set_double("weights.alpha_fd", weights.alpha_fd);
  kv.set_double("weights.entropy", weights.entropy);
  kv.set_int("model.in_channels", model.in_channels);
  kv.set_int("model.image_size", model.image_size);
  kv.set_int("model.enc_hidden", model.enc_hidden);
  kv.set_int("model.channels", model.channels);
  kv.set_int("model.dec_hidden", model.dec_hidden);
  kv.set_int("model.keypoints", model.num_keypoints);
  kv.set_double("model.sigma", model.sigma);
  kv.set_int("cafa.proj_channels", cafa_proj_channels);
  kv.set_int("gcn.hidden", gcn.hidden);
  kv.set_int("gcn.blocks", gcn.blocks);
  kv.set_int("gcn.out_channels", gcn.out_channels);
  kv.set_double("ihta.tau", tau);
  kv.set_bool("augment.enabled", aug.enabled);
  kv.set_double("augment.flip_prob", aug.flip_prob);
  kv.set_double("augment.scale_min", aug.scale_min);
  kv.set_double("augment.scale_max", aug.scale_max);
  kv.set_double("augment.rotation_deg", aug.rotation_deg);
  return kv;
}

Tensor total_loss(const LossTerms& terms, const LossWeights& w, Mode mode,
                  const ModuleToggles& toggles, LossLedger* ledger) {
  auto component = [&](const Tensor& t, bool enabled, const char* name) {
    if (!enabled) return Tensor::scalar(0.0);
    if (!t.defined()) {
      throw std::invalid_argument(std::string("total_loss: missing component ") + name +
                                  " for mode " + mode_name(mode));
    }
    return t;
  };
  if (!terms.pose_s.defined()) {
    throw std::invalid_argument("total_loss: missing component L_pose_s");
  }
  const bool ssda = mode == Mode::kSsda;
  Tensor pose_s = terms.pose_s;
  Tensor pose_tl = component(terms.pose_tl, ssda, "L_pose_tl");
  Tensor sa = component(terms.sa, toggles.isa, "L_sa");
  Tensor sm = component(terms.sm, toggles.ihta, "L_sm");
  Tensor fd = component(terms.fd, toggles.cafa, "L_fd");
  Tensor ent = component(terms.ent, toggles.entropy, "L_ent");

  Tensor sup = add(mul_c(pose_tl, w.alpha_tl), pose_s);
  Tensor da = add(add(mul_c(sa, w.alpha_sa), mul_c(sm, w.alpha_sm)), mul_c(fd, w.alpha_fd));
  Tensor total = add(add(mul_c(sup, w.beta_sup), mul_c(da, w.beta_da)), mul_c(ent, w.entropy));

  if (ledger) {
    ledger->pose_s = pose_s.value();
    ledger->pose_tl = pose_tl.value();
    ledger->sa = sa.value();
    ledger->sm = sm.value();
    ledger->fd = fd.value();
    ledger->ent = ent.value();
    ledger->sup = sup.value();
    ledger->da = da.value();
    ledger->total = total.value();
  }
  return total;
}

TrainerState init_trainer(const TrainConfig& cfg, const SkeletonGraph& skeleton) {
  if (cfg.model.num_keypoints != skeleton.num_joints) {
    throw std::invalid_argument("trainer: model.keypoints does not match the skeleton");
  }
  TrainerState state;
  state.config = cfg;
  state.skeleton = skeleton;
  Rng init_rng(Rng::derive(cfg.seed, 0x1717));
  add_posenet_params(state.params, cfg.model, init_rng);
  const auto toggles = cfg.effective_modules();
  if (toggles.cafa) add_cafa_params(state.params, cfg.cafa_config(), init_rng);
  if (toggles.ihta) {
    GcnConfig g = cfg.gcn;
    g.in_channels = cfg.model.channels;
    add_gcn_params(state.params, g, skeleton, init_rng);
  }
  state.adam = AdamState::for_params(state.params);
  state.data_rng = Rng(Rng::derive(cfg.seed, 0xDA7A));
  return state;
}

namespace {

// Draws from a shuffled pool, reshuffling on wrap. Lives within one epoch.
class PoolSampler {
 public:
  PoolSampler(std::vector<int> pool, Rng& rng) : pool_(std::move(pool)), rng_(&rng) {
    if (pool_.empty()) throw std::invalid_argument("trainer: empty sample pool");
    shuffle();
  }
  int next() {
    if (pos_ == pool_.size()) {
      shuffle();
      pos_ = 0;
    }
    return pool_[pos_++];
  }

 private:
  void shuffle() {
    for (size_t i = pool_.size(); i > 1; --i) {
      const size_t j = rng_->uniform_int(i);
      std::swap(pool_[i - 1], pool_[j]);
    }
  }
  std::vector<int> pool_;
  size_t pos_ = 0;
  Rng* rng_;
};

Tensor image_tensor(const Image& img) {
  std::vector<double> data(img.pixels.begin(), img.pixels.end());
  return Tensor::from_data({img.channels, img.height, img.width}, std::move(data));
}

struct ForwardSample {
  PoseSample sample;   // augmented copy
  Tensor features;     // what the decoder consumed (enhanced when paired)
  HeatmapSet maps;
};

void check_component(double v, const char* name, int epoch) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("trainer: non-finite loss component ") + name +
                             " in epoch " + std::to_string(epoch));
  }
}

}  // namespace

LossLedger train_epoch(TrainerState& state, const Dataset& ds) {
  const TrainConfig& cfg = state.config;
  const auto toggles = cfg.effective_modules();
  const PoseNetConfig& model = cfg.model;

  if (ds.manifest.image_size != model.image_size ||
      ds.manifest.num_keypoints != model.num_keypoints ||
      ds.manifest.channels != model.in_channels) {
    throw std::invalid_argument("trainer: dataset geometry does not match the model config");
  }
  if (cfg.mode == Mode::kSsda && ds.manifest.n1 == 0) {
    throw std::invalid_argument("trainer: ssda mode requires labeled target samples");
  }

  const auto src_pool = ds.source_indices();
  const int steps = static_cast<int>(src_pool.size()) / cfg.batch_source;
  if (steps == 0) throw std::invalid_argument("trainer: source split smaller than one batch");

  PoolSampler source(src_pool, state.data_rng);

  std::vector<int> tu_pool;
  if (cfg.mode == Mode::kUda) {
    // without target labels every target sample is unlabeled data
    tu_pool = ds.target_unlabeled_indices();
    for (int i : ds.target_labeled_indices()) tu_pool.push_back(i);
    std::sort(tu_pool.begin(), tu_pool.end());
  } else if (cfg.mode == Mode::kSsda) {
    tu_pool = ds.target_unlabeled_indices();
  }
  std::optional<PoolSampler> tu_sampler, tl_sampler;
  if (cfg.mode != Mode::kDt) tu_sampler.emplace(tu_pool, state.data_rng);
  if (cfg.mode == Mode::kSsda) {
    tl_sampler.emplace(ds.target_labeled_indices(), state.data_rng);
  }

  const int hm = model.heatmap_size();
  const int fs = model.feature_size();

  // guard_frame only where the annotations are legitimately visible to the
  // trainer; unlabeled roles must not let annotations steer the transform
  auto draw_batch = [&](PoolSampler& sampler, int n, bool labeled_role) {
    std::vector<PoseSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      const auto& s = ds.samples[sampler.next()];
      out.push_back(augment(s, state.skeleton, state.data_rng, cfg.aug, labeled_role));
    }
    return out;
  };

  auto pose_loss_of = [&](const std::vector<ForwardSample>& batch) {
    std::vector<HeatmapSet> pred, target;
    std::vector<std::vector<uint8_t>> vis;
    for (const auto& f : batch) {
      pred.push_back(f.maps);
      target.push_back(render_heatmaps(f.sample.keypoints, f.sample.visibility, hm, hm,
                                       model.heatmap_stride(), model.sigma));
      vis.push_back(f.sample.visibility);
    }
    return mse_pose_loss(pred, target, vis);
  };

  LossLedger accum;
  for (int step = 0; step < steps; ++step) {
    auto src_batch = draw_batch(source, cfg.batch_source, true);
    std::vector<PoseSample> tu_batch, tl_batch;
    if (tu_sampler) tu_batch = draw_batch(*tu_sampler, cfg.effective_batch_tu(), false);
    if (tl_sampler) tl_batch = draw_batch(*tl_sampler, cfg.batch_tl, true);

    // encode everything; target batch order is TU then TL
    std::vector<ForwardSample> src_fwd(src_batch.size());
    std::vector<ForwardSample> tgt_fwd(tu_batch.size() + tl_batch.size());
    for (size_t i = 0; i < src_batch.size(); ++i) {
      src_fwd[i].sample = std::move(src_batch[i]);
      src_fwd[i].features = posenet_encode(state.params, model, image_tensor(src_fwd[i].sample.image));
    }
    for (size_t i = 0; i < tu_batch.size(); ++i) {
      tgt_fwd[i].sample = std::move(tu_batch[i]);
      tgt_fwd[i].features = posenet_encode(state.params, model, image_tensor(tgt_fwd[i].sample.image));
    }
    for (size_t i = 0; i < tl_batch.size(); ++i) {
      auto& slot = tgt_fwd[tu_batch.size() + i];
      slot.sample = std::move(tl_batch[i]);
      slot.features = posenet_encode(state.params, model, image_tensor(slot.sample.image));
    }

    // bidirectional enhancement over one-to-one sample pairs
    if (toggles.cafa) {
      const size_t pairs = std::min(src_fwd.size(), tgt_fwd.size());
      for (size_t i = 0; i < pairs; ++i) {
        auto [es, et] = cafa_enhance(state.params, src_fwd[i].features, tgt_fwd[i].features);
        src_fwd[i].features = es;
        tgt_fwd[i].features = et;
      }
    }
    for (auto& f : src_fwd) f.maps = posenet_decode(state.params, model, f.features);
    for (auto& f : tgt_fwd) f.maps = posenet_decode(state.params, model, f.features);

    LossTerms terms;
    terms.pose_s = pose_loss_of(src_fwd);
    if (cfg.mode == Mode::kSsda) {
      std::vector<ForwardSample> tl_fwd(tgt_fwd.begin() + tu_batch.size(), tgt_fwd.end());
      terms.pose_tl = pose_loss_of(tl_fwd);
    }
    if (toggles.cafa) {
      std::vector<Tensor> pooled_s, pooled_t;
      for (const auto& f : src_fwd) pooled_s.push_back(pooled_features(f.features));
      for (const auto& f : tgt_fwd) pooled_t.push_back(pooled_features(f.features));
      terms.fd = mmd_loss(pooled_s, pooled_t, MmdKernel::kRbf);
    }
    if (toggles.isa) {
      std::vector<Tensor> tl_maps, tu_maps;
      for (size_t i = 0; i < tu_batch.size(); ++i) tu_maps.push_back(tgt_fwd[i].maps.maps);
      for (size_t i = tu_batch.size(); i < tgt_fwd.size(); ++i) {
        tl_maps.push_back(tgt_fwd[i].maps.maps);
      }
      terms.sa = heatmap_alignment_loss(tl_maps, tu_maps);
    }
    if (toggles.ihta) {
      std::vector<KeypointFeatures> kf_s, kf_t;
      for (const auto& f : src_fwd) {
        kf_s.push_back(extract_keypoint_features(f.features, f.maps, fs, fs));
      }
      for (const auto& f : tgt_fwd) {
        kf_t.push_back(extract_keypoint_features(f.features, f.maps, fs, fs));
      }
      const auto pairs = select_pairs(kf_s, kf_t, cfg.tau);
      if (pairs.empty()) {
        terms.sm = Tensor::scalar(0.0);
      } else {
        GcnConfig g = cfg.gcn;
        g.in_channels = model.channels;
        GcnBatchContext gcn(state.params, g, state.skeleton);
        std::map<int, Tensor> reps_s, reps_t;
        for (auto [m, n] : pairs) {
          if (!reps_s.count(m)) reps_s.emplace(m, gcn.forward(kf_s[m].features));
          if (!reps_t.count(n)) reps_t.emplace(n, gcn.forward(kf_t[n].features));
        }
        std::vector<Tensor> rs, rt;
        std::vector<std::pair<int, int>> dense;
        for (auto [m, n] : pairs) {
          rs.push_back(reps_s.at(m));
          rt.push_back(reps_t.at(n));
          dense.emplace_back(static_cast<int>(rs.size()) - 1, static_cast<int>(rt.size()) - 1);
        }
        terms.sm = topology_alignment_loss(rs, rt, dense);
      }
    }
    if (toggles.entropy) {
      std::vector<Tensor> tu_maps;
      const size_t n_tu = cfg.mode == Mode::kUda ? tgt_fwd.size() : tu_batch.size();
      for (size_t i = 0; i < n_tu; ++i) tu_maps.push_back(tgt_fwd[i].maps.maps);
      terms.ent = entropy_loss(tu_maps);
    }

    LossLedger ledger;
    Tensor total = total_loss(terms, cfg.weights, cfg.mode, toggles, &ledger);
    check_component(ledger.pose_s, "L_pose_s", state.epoch);
    check_component(ledger.pose_tl, "L_pose_tl", state.epoch);
    check_component(ledger.sa, "L_sa", state.epoch);
    check_component(ledger.sm, "L_sm", state.epoch);
    check_component(ledger.fd, "L_fd", state.epoch);
    check_component(ledger.ent, "L_ent", state.epoch);
    check_component(ledger.total, "L_total", state.epoch);

    state.params.zero_grad();
    total.backward();
    adam_step(state.params, state.adam, cfg.adam);
    if (toggles.cafa) {
      // lambdas are nonnegative by contract: projected update
      for (const char* name : {"cafa.lambda_s", "cafa.lambda_t"}) {
        auto d = state.params.at(name).mutable_data();
        if (d[0] < 0.0) d[0] = 0.0;
      }
    }

    accum.pose_s += ledger.pose_s;
    accum.pose_tl += ledger.pose_tl;
    accum.sa += ledger.sa;
    accum.sm += ledger.sm;
    accum.fd += ledger.fd;
    accum.ent += ledger.ent;
    accum.sup += ledger.sup;
    accum.da += ledger.da;
    accum.total += ledger.total;
  }

  const double inv = 1.0 / steps;
  accum.pose_s *= inv;
  accum.pose_tl *= inv;
  accum.sa *= inv;
  accum.sm *= inv;
  accum.fd *= inv;
  accum.ent *= inv;
  accum.sup *= inv;
  accum.da *= inv;
  accum.total *= inv;
  ++state.epoch;
  return accum;
}

void train(TrainerState& state, const Dataset& ds,
           const std::function<void(int, const LossLedger&)>& on_epoch) {
  while (state.epoch < state.config.epochs) {
    auto ledger = train_epoch(state, ds);
    if (on_epoch) on_epoch(state.epoch, ledger);
  }
}

void save_trainer_checkpoint(const TrainerState& state, const std::string& path) {
  Checkpoint ckpt;
  ckpt.config_echo = state.config.to_kv().serialize();
  ckpt.meta.emplace_back("format", "trainer.v1");
  ckpt.meta.emplace_back("epoch", std::to_string(state.epoch));
  const auto rs = state.data_rng.state();
  for (int i = 0; i < 4; ++i) {
    ckpt.meta.emplace_back("rng.s" + std::to_string(i), std::to_string(rs[i]));
  }
  ckpt.meta.emplace_back("skeleton", skeleton_to_text(state.skeleton));
  ckpt.add_params(state.params);
  ckpt.add_adam(state.adam, state.params);
  write_checkpoint(ckpt, path);
}

TrainerState load_trainer_checkpoint(const std::string& path) {
  auto ckpt = read_checkpoint(path);
  if (ckpt.meta_value("format") != "trainer.v1") {
    throw std::runtime_error("checkpoint: version mismatch (format tag)");
  }
  auto cfg = TrainConfig::from_kv(parse_kv_text(ckpt.config_echo));
  auto skeleton = parse_skeleton_text(ckpt.meta_value("skeleton"));
  TrainerState state = init_trainer(cfg, skeleton);

  for (size_t i = 0; i < state.params.size(); ++i) {
    const auto& name = state.params.name(i);
    const auto& blk = ckpt.block(name);
    Tensor& t = state.params.tensor(i);
    if (blk.dims != t.dims()) {
      throw std::runtime_error("checkpoint: config echo mismatch for block " + name);
    }
    std::copy(blk.data.begin(), blk.data.end(), t.mutable_data().begin());
    const auto& m = ckpt.block("adam.m." + name);
    const auto& v = ckpt.block("adam.v." + name);
    if (m.dims != t.dims() || v.dims != t.dims()) {
      throw std::runtime_error("checkpoint: optimizer state mismatch for " + name);
    }
    state.adam.m[i] = m.data;
    state.adam.v[i] = v.data;
  }
  state.adam.step = std::stoll(ckpt.meta_value("adam.step"));
  state.epoch = std::stoi(ckpt.meta_value("epoch"));
  std::array<uint64_t, 4> rs{};
  for (int i = 0; i < 4; ++i) {
    rs[i] = std::stoull(ckpt.meta_value("rng.s" + std::to_string(i)));
  }
  state.data_rng.set_state(rs);
  return state;
}

PckReport evaluate_pck(const TrainerState& state, const Dataset& ds,
                       const std::vector<int>& indices, double threshold,
                       const std::string& normalizer) {
  std::vector<std::vector<DecodedKeypoint>> preds;
  std::vector<const PoseSample*> truths;
  preds.reserve(indices.size());
  truths.reserve(indices.size());
  for (int idx : indices) {
    const auto& sample = ds.samples[idx];
    auto [features, maps] = posenet_forward(state.params, state.config.model,
                                            image_tensor(sample.image));
    preds.push_back(decode_keypoints(maps));
    truths.push_back(&sample);
  }
  return pck(preds, truths, threshold, normalizer, state.skeleton);
}

}  // namespace poseadapt
