#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poseadapt/config.hpp"
#include "poseadapt/heatmap.hpp"

namespace poseadapt {

// Pixels are row-major C x H x W in [0, 1], stored as float32 (the on-disk
// payload type); all math on them happens in float64 tensors.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  float at(int c, int y, int x) const {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float& at(int c, int y, int x) {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
};

enum class DomainTag : uint8_t { kSource = 0, kTarget = 1 };

struct PoseSample {
  Image image;
  std::vector<Keypoint> keypoints;  // image pixel coordinates
  std::vector<uint8_t> visibility;
  DomainTag domain = DomainTag::kSource;
  bool labeled = true;
};

struct DatasetManifest {
  int version = 1;
  int num_keypoints = 16;
  int channels = 3;
  int image_size = 64;
  int m = 0;   // source
  int n1 = 0;  // target labeled
  int n2 = 0;  // target unlabeled
  std::string mode = "uda";  // "uda" (n1 must be 0) or "ssda"
  uint64_t seed = 0;
  std::string style_source;
  std::string style_target;

  KeyValues to_kv() const;
  static DatasetManifest from_kv(const KeyValues& kv);
  void validate() const;
};

// Samples are stored source block first, then target-labeled, then
// target-unlabeled; the index helpers rely on that order.
struct Dataset {
  DatasetManifest manifest;
  std::vector<PoseSample> samples;

  std::vector<int> source_indices() const;
  std::vector<int> target_labeled_indices() const;
  std::vector<int> target_unlabeled_indices() const;
};

// Directory layout: <dir>/manifest.txt + <dir>/records.bin. The binary file
// is versioned, little-endian, and checksummed; reads validate the manifest
// against the records.
void write_dataset(const Dataset& ds, const std::string& dir);
Dataset read_dataset(const std::string& dir);

}  // namespace poseadapt
