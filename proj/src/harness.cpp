#include "poseadapt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace poseadapt {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

// Runs are independent; jobs > 1 executes them on worker threads. Each run
// is internally single-threaded, so results do not depend on jobs.
void run_all(std::vector<RunOutcome>& outcomes,
             const std::function<void(RunOutcome&)>& body, int jobs) {
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(outcomes.size())));
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= outcomes.size()) return;
      auto t0 = Clock::now();
      try {
        body(outcomes[i]);
        outcomes[i].status = "ok";
      } catch (const std::exception& e) {
        outcomes[i].status = sanitize(std::string("error: ") + e.what());
        outcomes[i].metric = std::nan("");
      }
      outcomes[i].runtime_s =
          std::chrono::duration<double>(Clock::now() - t0).count();
    }
  };
  if (jobs == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

double train_and_score(const TrainConfig& cfg, const Dataset& ds, double threshold,
                       const std::string& normalizer) {
  auto state = init_trainer(cfg, default_skeleton16());
  train(state, ds);
  auto report = evaluate_pck(state, ds, ds.target_unlabeled_indices(), threshold, normalizer);
  return 100.0 * report.total;
}

}  // namespace

const std::vector<std::string>& ablation_labels() {
  static const std::vector<std::string> labels = {"DT",      "DT+CAFA", "DT+ISA",
                                                  "DT+IHTA", "UDA",     "Ours"};
  return labels;
}

TrainConfig ablation_config(const TrainConfig& base, const std::string& label) {
  TrainConfig cfg = base;
  if (label == "DT") {
    cfg.mode = Mode::kDt;
    cfg.modules = {false, false, false, false};
  } else if (label == "DT+CAFA") {
    cfg.mode = Mode::kUda;
    cfg.modules = {true, false, false, false};
  } else if (label == "DT+ISA") {
    cfg.mode = Mode::kSsda;
    cfg.modules = {false, true, false, false};
  } else if (label == "DT+IHTA") {
    cfg.mode = Mode::kUda;
    cfg.modules = {false, false, true, false};
  } else if (label == "UDA") {
    cfg.mode = Mode::kUda;
    cfg.modules = {true, false, true, true};
  } else if (label == "Ours") {
    cfg.mode = Mode::kSsda;
    cfg.modules = {true, true, true, true};
  } else {
    throw std::invalid_argument("ablation: unknown configuration label " + label);
  }
  return cfg;
}

std::vector<RunOutcome> run_ablation(const TrainConfig& base, const Dataset& ds,
                                     const std::vector<uint64_t>& seeds, int jobs,
                                     double threshold, const std::string& normalizer) {
  if (seeds.size() < 3) {
    throw std::invalid_argument("ablation: at least 3 seeds are required");
  }
  std::vector<RunOutcome> outcomes;
  for (const auto& label : ablation_labels()) {
    for (uint64_t seed : seeds) {
      RunOutcome o;
      o.label = label;
      o.seed = seed;
      outcomes.push_back(o);
    }
  }
  run_all(outcomes,
          [&](RunOutcome& o) {
            TrainConfig cfg = ablation_config(base, o.label);
            cfg.seed = o.seed;
            o.mode = mode_name(cfg.mode);
            o.metric = train_and_score(cfg, ds, threshold, normalizer);
          },
          jobs);
  return outcomes;
}

CsvTable ablation_csv(const std::vector<RunOutcome>& outcomes) {
  CsvTable table;
  table.header = {"label", "seed", "metric", "runtime_s", "status"};
  for (const auto& label : ablation_labels()) {
    double sum = 0.0, time_sum = 0.0;
    int ok = 0, seen = 0;
    for (const auto& o : outcomes) {
      if (o.label != label) continue;
      ++seen;
      table.rows.push_back({o.label, std::to_string(o.seed),
                            o.status == "ok" ? fmt(o.metric) : "",
                            fmt(o.runtime_s), o.status});
      if (o.status == "ok") {
        sum += o.metric;
        time_sum += o.runtime_s;
        ++ok;
      }
    }
    if (seen == 0) continue;
    table.rows.push_back({label, "mean", ok ? fmt(sum / ok) : "",
                          ok ? fmt(time_sum / ok) : "",
                          ok ? "ok" : "error: no successful run"});
  }
  return table;
}

std::vector<RunOutcome> sweep_weights(const std::string& param,
                                      const std::vector<double>& values,
                                      const TrainConfig& base, const Dataset& ds, int jobs,
                                      double threshold, const std::string& normalizer) {
  if (param != "alpha" && param != "beta") {
    throw std::invalid_argument("sweep: param must be alpha or beta");
  }
  if (values.empty()) throw std::invalid_argument("sweep: empty value grid");
  for (double v : values) {
    if (v < 0.0) throw std::invalid_argument("sweep: values must be nonnegative");
  }
  std::vector<RunOutcome> outcomes;
  for (double v : values) {
    RunOutcome o;
    o.label = param;
    o.mode = mode_name(base.mode);
    o.seed = base.seed;
    o.value = v;
    outcomes.push_back(o);
  }
  run_all(outcomes,
          [&](RunOutcome& o) {
            TrainConfig cfg = base;
            if (param == "alpha") {
              cfg.weights.alpha_sa = o.value;
              cfg.weights.alpha_sm = o.value;
              cfg.weights.alpha_fd = o.value;
            } else {
              cfg.weights.beta_da = o.value;  // beta_sup stays fixed
            }
            o.metric = train_and_score(cfg, ds, threshold, normalizer);
          },
          jobs);
  return outcomes;
}

CsvTable sweep_csv(const std::vector<RunOutcome>& outcomes) {
  CsvTable table;
  table.header = {"param", "value", "mode", "seed", "metric"};
  for (const auto& o : outcomes) {
    table.rows.push_back({o.label, fmt(o.value), o.mode, std::to_string(o.seed),
                          o.status == "ok" ? fmt(o.metric) : ""});
  }
  return table;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> values;
  if (spec.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0) {
      throw std::invalid_argument("grid: expected lo:hi:step, got " + spec);
    }
    const int n = static_cast<int>(std::round((hi - lo) / step));
    for (int i = 0; i <= n; ++i) {
      const double v = lo + i * step;
      if (v <= hi + 1e-12) values.push_back(v);
    }
  } else {
    std::string tok;
    std::istringstream in(spec);
    while (std::getline(in, tok, ',')) {
      if (!tok.empty()) values.push_back(std::stod(tok));
    }
  }
  if (values.empty()) throw std::invalid_argument("grid: no values in " + spec);
  return values;
}

}  // namespace poseadapt
