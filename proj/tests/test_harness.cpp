#include <cmath>

#include "doctest.h"
#include "poseadapt/harness.hpp"

using namespace poseadapt;

namespace {

TrainConfig harness_base() {
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_source = 4;
  cfg.batch_tu = 4;
  cfg.batch_tl = 2;
  cfg.model.image_size = 16;
  cfg.model.enc_hidden = 4;
  cfg.model.channels = 8;
  cfg.model.dec_hidden = 8;
  cfg.gcn.hidden = 8;
  cfg.gcn.blocks = 1;
  return cfg;
}

Dataset harness_dataset() {
  GenConfig g;
  g.canvas = 16;
  g.m = 12;
  g.n1 = 4;
  g.n2 = 8;
  g.mode = "ssda";
  g.seed = 9;
  return generate_dataset(g, default_skeleton16());
}

}  // namespace

TEST_CASE("ablation emits per-seed and mean rows for the fixed label set") {
  auto ds = harness_dataset();
  auto outcomes = run_ablation(harness_base(), ds, {1, 2, 3}, 1);
  CHECK(outcomes.size() == 6 * 3);

  auto table = ablation_csv(outcomes);
  CHECK(table.header ==
        std::vector<std::string>{"label", "seed", "metric", "runtime_s", "status"});
  CHECK(table.rows.size() == 6 * 3 + 6);
  int mean_rows = 0;
  for (const auto& row : table.rows) {
    if (row[1] == "mean") ++mean_rows;
    CHECK(row[4].rfind("ok", 0) == 0);
  }
  CHECK(mean_rows == 6);

  CHECK_THROWS(run_ablation(harness_base(), ds, {1, 2}, 1));  // needs >= 3 seeds
}

TEST_CASE("the DT ablation row equals a standalone DT run") {
  auto ds = harness_dataset();
  auto outcomes = run_ablation(harness_base(), ds, {1, 2, 3}, 1);

  TrainConfig dt = ablation_config(harness_base(), "DT");
  dt.seed = 2;
  auto state = init_trainer(dt, default_skeleton16());
  train(state, ds);
  const double metric =
      100.0 * evaluate_pck(state, ds, ds.target_unlabeled_indices(), 0.2, "bbox_diag").total;

  bool found = false;
  for (const auto& o : outcomes) {
    if (o.label == "DT" && o.seed == 2) {
      CHECK(std::abs(o.metric - metric) <= 1e-12);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("parallel ablation equals the serial run metric for metric") {
  auto ds = harness_dataset();
  auto serial = run_ablation(harness_base(), ds, {4, 5, 6}, 1);
  auto parallel = run_ablation(harness_base(), ds, {4, 5, 6}, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].label == parallel[i].label);
    CHECK(serial[i].metric == parallel[i].metric);  // bitwise
  }
}

TEST_CASE("sweep emits one row per value and reruns are identical") {
  auto ds = harness_dataset();
  auto base = harness_base();
  base.mode = Mode::kSsda;

  auto one = sweep_weights("alpha", {0.5}, base, ds, 1);
  CHECK(one.size() == 1);

  auto grid = parse_grid("0.3:0.9:0.1");
  REQUIRE(grid.size() == 7);
  auto seven = sweep_weights("beta", grid, base, ds, 1);
  auto csv = sweep_csv(seven);
  CHECK(csv.header == std::vector<std::string>{"param", "value", "mode", "seed", "metric"});
  CHECK(csv.rows.size() == 7);
  CHECK(csv.rows[0][0] == "beta");
  CHECK(csv.rows[0][2] == "ssda");

  auto again = sweep_csv(sweep_weights("beta", grid, base, ds, 1));
  for (size_t i = 0; i < csv.rows.size(); ++i) CHECK(csv.rows[i] == again.rows[i]);

  CHECK_THROWS(sweep_weights("gamma", grid, base, ds, 1));
  CHECK_THROWS(sweep_weights("alpha", {}, base, ds, 1));
  CHECK_THROWS(sweep_weights("alpha", {-0.1}, base, ds, 1));
}

TEST_CASE("grid parsing") {
  auto g = parse_grid("0.3:0.9:0.1");
  REQUIRE(g.size() == 7);
  CHECK(g.front() == doctest::Approx(0.3));
  CHECK(g.back() == doctest::Approx(0.9));

  auto list = parse_grid("0.5,0.25");
  CHECK(list == std::vector<double>{0.5, 0.25});
  CHECK_THROWS(parse_grid("1:0:-1"));
  CHECK_THROWS(parse_grid(""));
}

TEST_CASE("failed runs are reported, not dropped") {
  auto ds = harness_dataset();
  auto base = harness_base();
  base.model.image_size = 32;  // mismatches the 16px dataset -> every run fails
  auto outcomes = run_ablation(base, ds, {1, 2, 3}, 1);
  CHECK(outcomes.size() == 18);
  for (const auto& o : outcomes) {
    CHECK(o.status.rfind("error:", 0) == 0);
    CHECK(std::isnan(o.metric));
  }
  auto table = ablation_csv(outcomes);
  CHECK(table.rows.size() == 18 + 6);
}
