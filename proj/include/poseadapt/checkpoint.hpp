#pragma once

#include <string>
#include <vector>

#include "poseadapt/optim.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Self-describing parameter container: version tag, config echo, free-form
// metadata, and named blocks of raw little-endian float64 values. The file
// ends with a checksum over everything after the magic; truncation, trailing
// bytes or bit flips surface as corrupt-checkpoint errors.
struct CheckpointBlock {
  std::string name;
  std::vector<int> dims;
  std::vector<double> data;
};

struct Checkpoint {
  std::string config_echo;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<CheckpointBlock> blocks;

  const CheckpointBlock& block(const std::string& name) const;
  bool has_block(const std::string& name) const;
  std::string meta_value(const std::string& key) const;

  void add_params(const ParamSet& params);
  void add_adam(const AdamState& state, const ParamSet& params);
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace poseadapt
