#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace poseadapt {

// Fixed human skeleton: joints, limb edges, left/right symmetry pairs for
// flipping, and the head segment used by the PCKh normalizer. The adjacency
// matrix is symmetric with a unit diagonal.
struct SkeletonGraph {
  int num_joints = 0;
  std::vector<std::string> joint_names;
  std::vector<std::pair<int, int>> limbs;
  std::vector<std::pair<int, int>> flip_pairs;
  std::pair<int, int> head_segment{-1, -1};
  std::vector<uint8_t> adjacency;  // row-major num_joints x num_joints

  bool adjacent(int i, int j) const {
    return adjacency[static_cast<size_t>(i) * num_joints + j] != 0;
  }
  int degree_with_self(int i) const;
};

// Builds the adjacency from the limb list; duplicate limbs collapse,
// out-of-range endpoints are an error.
SkeletonGraph make_skeleton(int num_joints, std::vector<std::string> joint_names,
                            std::vector<std::pair<int, int>> limbs,
                            std::vector<std::pair<int, int>> flip_pairs = {},
                            std::pair<int, int> head_segment = {-1, -1});

// The 16-joint full-body skeleton used throughout (also shipped as
// data/skeleton16.txt).
SkeletonGraph default_skeleton16();

SkeletonGraph load_skeleton(const std::string& path);
void save_skeleton(const SkeletonGraph& skeleton, const std::string& path);

// Same plain-text format as the file interface, as a string (used for the
// checkpoint echo).
std::string skeleton_to_text(const SkeletonGraph& skeleton);
SkeletonGraph parse_skeleton_text(const std::string& text);

}  // namespace poseadapt
