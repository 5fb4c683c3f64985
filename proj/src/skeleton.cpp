#include "poseadapt/skeleton.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace poseadapt {

int SkeletonGraph::degree_with_self(int i) const {
  int d = 0;
  for (int j = 0; j < num_joints; ++j) d += adjacent(i, j) ? 1 : 0;
  return d;
}

SkeletonGraph make_skeleton(int num_joints, std::vector<std::string> joint_names,
                            std::vector<std::pair<int, int>> limbs,
                            std::vector<std::pair<int, int>> flip_pairs,
                            std::pair<int, int> head_segment) {
  if (num_joints <= 0) throw std::invalid_argument("skeleton: need at least one joint");
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != num_joints) {
    throw std::invalid_argument("skeleton: joint name count mismatch");
  }
  SkeletonGraph g;
  g.num_joints = num_joints;
  g.joint_names = std::move(joint_names);
  g.flip_pairs = std::move(flip_pairs);
  g.head_segment = head_segment;
  g.adjacency.assign(static_cast<size_t>(num_joints) * num_joints, 0);
  for (int i = 0; i < num_joints; ++i) {
    g.adjacency[static_cast<size_t>(i) * num_joints + i] = 1;
  }
  for (auto [i, j] : limbs) {
    if (i < 0 || i >= num_joints || j < 0 || j >= num_joints) {
      throw std::invalid_argument("skeleton: limb endpoint out of range");
    }
    if (!g.adjacent(i, j)) g.limbs.emplace_back(i, j);  // duplicates collapse
    g.adjacency[static_cast<size_t>(i) * num_joints + j] = 1;
    g.adjacency[static_cast<size_t>(j) * num_joints + i] = 1;
  }
  for (auto [i, j] : g.flip_pairs) {
    if (i < 0 || i >= num_joints || j < 0 || j >= num_joints) {
      throw std::invalid_argument("skeleton: flip pair out of range");
    }
  }
  return g;
}

SkeletonGraph default_skeleton16() {
  return make_skeleton(
      16,
      {"right_ankle", "right_knee", "right_hip", "left_hip", "left_knee", "left_ankle",
       "pelvis", "thorax", "upper_neck", "head_top", "right_wrist", "right_elbow",
       "right_shoulder", "left_shoulder", "left_elbow", "left_wrist"},
      {{0, 1},
       {1, 2},
       {2, 6},
       {3, 6},
       {3, 4},
       {4, 5},
       {6, 7},
       {7, 8},
       {8, 9},
       {7, 12},
       {7, 13},
       {12, 11},
       {11, 10},
       {13, 14},
       {14, 15}},
      {{0, 5}, {1, 4}, {2, 3}, {10, 15}, {11, 14}, {12, 13}},
      {8, 9});
}

namespace {

SkeletonGraph parse_skeleton_stream(std::istream& in, const std::string& path) {
  std::string word;
  int k = 0;
  if (!(in >> word >> k) || word != "joints") {
    throw std::runtime_error("skeleton: expected 'joints <count>' in " + path);
  }
  std::vector<std::string> names(k);
  for (auto& n : names) {
    if (!(in >> n)) throw std::runtime_error("skeleton: truncated joint list in " + path);
  }
  int nlimbs = 0;
  if (!(in >> word >> nlimbs) || word != "limbs") {
    throw std::runtime_error("skeleton: expected 'limbs <count>' in " + path);
  }
  std::vector<std::pair<int, int>> limbs(nlimbs);
  for (auto& [a, b] : limbs) {
    if (!(in >> a >> b)) throw std::runtime_error("skeleton: truncated limb list in " + path);
  }
  std::vector<std::pair<int, int>> flips;
  std::pair<int, int> head{-1, -1};
  while (in >> word) {
    if (word == "flip_pairs") {
      int n = 0;
      in >> n;
      flips.resize(n);
      for (auto& [a, b] : flips) {
        if (!(in >> a >> b)) throw std::runtime_error("skeleton: truncated flip pairs");
      }
    } else if (word == "head") {
      in >> head.first >> head.second;
    } else {
      throw std::runtime_error("skeleton: unknown section '" + word + "' in " + path);
    }
  }
  return make_skeleton(k, std::move(names), std::move(limbs), std::move(flips), head);
}

}  // namespace

SkeletonGraph load_skeleton(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("skeleton: cannot open " + path);
  return parse_skeleton_stream(in, path);
}

SkeletonGraph parse_skeleton_text(const std::string& text) {
  std::istringstream in(text);
  return parse_skeleton_stream(in, "<text>");
}

std::string skeleton_to_text(const SkeletonGraph& g) {
  std::ostringstream out;
  out << "joints " << g.num_joints << "\n";
  for (int i = 0; i < g.num_joints; ++i) {
    out << (g.joint_names.empty() ? ("joint" + std::to_string(i)) : g.joint_names[i]) << "\n";
  }
  out << "limbs " << g.limbs.size() << "\n";
  for (auto [a, b] : g.limbs) out << a << " " << b << "\n";
  if (!g.flip_pairs.empty()) {
    out << "flip_pairs " << g.flip_pairs.size() << "\n";
    for (auto [a, b] : g.flip_pairs) out << a << " " << b << "\n";
  }
  if (g.head_segment.first >= 0) {
    out << "head " << g.head_segment.first << " " << g.head_segment.second << "\n";
  }
  return out.str();
}

void save_skeleton(const SkeletonGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("skeleton: cannot write " + path);
  out << skeleton_to_text(g);
}

}  // namespace poseadapt
