#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "poseadapt/config.hpp"
#include "poseadapt/synth.hpp"

using namespace poseadapt;

namespace {

Dataset tiny_dataset(const char* mode = "ssda") {
  GenConfig cfg;
  cfg.canvas = 16;
  cfg.m = 3;
  cfg.n1 = mode == std::string("uda") ? 0 : 2;
  cfg.n2 = 2;
  cfg.mode = mode;
  cfg.seed = 5;
  return generate_dataset(cfg, default_skeleton16());
}

}  // namespace

TEST_CASE("dataset write/read round trip is field-exact") {
  auto ds = tiny_dataset();
  const std::string dir = "ds_test_roundtrip";
  write_dataset(ds, dir);
  auto back = read_dataset(dir);

  CHECK(back.manifest.m == ds.manifest.m);
  CHECK(back.manifest.n1 == ds.manifest.n1);
  CHECK(back.manifest.n2 == ds.manifest.n2);
  CHECK(back.manifest.mode == ds.manifest.mode);
  CHECK(back.manifest.seed == ds.manifest.seed);
  CHECK(back.manifest.style_source == ds.manifest.style_source);
  REQUIRE(back.samples.size() == ds.samples.size());
  for (size_t i = 0; i < ds.samples.size(); ++i) {
    CHECK(back.samples[i].image.pixels == ds.samples[i].image.pixels);
    CHECK(back.samples[i].visibility == ds.samples[i].visibility);
    CHECK(back.samples[i].domain == ds.samples[i].domain);
    CHECK(back.samples[i].labeled == ds.samples[i].labeled);
    for (size_t k = 0; k < ds.samples[i].keypoints.size(); ++k) {
      CHECK(back.samples[i].keypoints[k].x == ds.samples[i].keypoints[k].x);
      CHECK(back.samples[i].keypoints[k].y == ds.samples[i].keypoints[k].y);
    }
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("truncated record files are rejected without partial data") {
  auto ds = tiny_dataset();
  const std::string dir = "ds_test_truncate";
  write_dataset(ds, dir);

  const auto rec = dir + "/records.bin";
  std::string bytes;
  {
    std::ifstream in(rec, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  }
  std::ofstream(rec, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_WITH_AS(read_dataset(dir), doctest::Contains("corrupt"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("uda manifests reject labeled target samples") {
  auto ds = tiny_dataset();
  const std::string dir = "ds_test_badmode";
  ds.manifest.mode = "uda";  // but n1 = 2
  CHECK_THROWS(write_dataset(ds, dir));

  // and the same validation fires on read
  ds.manifest.mode = "ssda";
  write_dataset(ds, dir);
  auto kv = parse_kv_file(dir + "/manifest.txt");
  kv.set("mode", "uda");
  write_kv_file(kv, dir + "/manifest.txt");
  CHECK_THROWS(read_dataset(dir));
  std::filesystem::remove_all(dir);
}

TEST_CASE("manifest count mismatch is rejected") {
  auto ds = tiny_dataset();
  const std::string dir = "ds_test_count";
  write_dataset(ds, dir);
  auto kv = parse_kv_file(dir + "/manifest.txt");
  kv.set_int("n2", 7);
  write_kv_file(kv, dir + "/manifest.txt");
  CHECK_THROWS(read_dataset(dir));
  std::filesystem::remove_all(dir);
}

TEST_CASE("key-value config parsing") {
  auto kv = parse_kv_text("a = 1\n# comment\nb = hello world\nc = 2.5 # trailing\n");
  CHECK(kv.get_int("a", 0) == 1);
  CHECK(kv.get("b") == "hello world");
  CHECK(kv.get_double("c", 0.0) == 2.5);
  CHECK(kv.get_int("missing", 9) == 9);
  CHECK_THROWS(kv.get("missing"));
  CHECK_THROWS(parse_kv_text("no equals sign\n"));
  CHECK_THROWS(kv.get_int("b", 0));

  kv.set_bool("flag", true);
  CHECK(kv.get_bool("flag", false));
  apply_override(kv, "a=42");
  CHECK(kv.get_int("a", 0) == 42);

  auto echoed = parse_kv_text(kv.serialize());
  CHECK(echoed.get_int("a", 0) == 42);
  CHECK(echoed.get("b") == "hello world");
}
