#pragma once

#include <string>
#include <utility>
#include <vector>

#include "grf/graph.hpp"

namespace grf {

// One paired sample: 2D inputs (camera-plane units) and 3D targets in
// millimeters, root-relative. An id of the form "subject:action:rest"
// carries optional tags; any other id is untagged.
struct PoseSample {
  std::string id;
  std::string subject, action;
  std::vector<double> joints_2d;  // j x 2 row-major
  std::vector<double> joints_3d;  // j x 3 row-major, mm
};

struct Dataset {
  std::string skeleton_name;
  SkeletonGraph skeleton;
  std::vector<PoseSample> samples;
  std::string split = "train";
};

struct CameraParams {
  double focal = 1000.0;  // pixel units
  double depth = 5000.0;  // mm, root placement along the optical axis
};

// File format: header "GRFD v1 j=<j> skeleton=<name>", then one line per
// sample: id plus 2j+3j comma-separated numbers (2D block then 3D block),
// shortest round-trip precision.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);
// For non-preset skeleton names the graph must be supplied.
Dataset load_dataset(const std::string& path, const SkeletonGraph& skeleton);

// x' = (2x - w)/w, y' = (2y - h)/w: centered, aspect-preserving, x in [-1,1].
std::vector<double> normalize_2d(const std::vector<double>& raw_pixels, double image_width, double image_height);
std::vector<double> denormalize_2d(const std::vector<double>& normalized, double image_width, double image_height);

// Subtracts the root joint's coordinates from every joint.
std::vector<double> root_relative_3d(const std::vector<double>& joints_3d, int root_index);

// Synthetic poses: a canonical rest pose articulated by random per-joint
// rotations accumulated along the kinematic chains (bone lengths exact),
// placed near `camera.depth` and projected by the pinhole camera
// u = focal*X/Z, v = focal*Y/Z. 3D targets are stored root-relative.
Dataset generate_synthetic(const SkeletonGraph& skeleton, const std::string& skeleton_name,
                           int n_samples, uint64_t seed, const CameraParams& camera = {},
                           double max_joint_angle_rad = 0.35);

// Deterministic disjoint split; eval_fraction of the samples (rounded down,
// at least 1 when fraction > 0) go to the eval set.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double eval_fraction, uint64_t seed);

}  // namespace grf
