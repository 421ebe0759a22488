#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/init/solver.hpp"
#include "meshrecon/render/raster.hpp"

namespace meshrecon {

enum TerrainClass : std::uint8_t {
  kGround = 0,
  kVegetation = 1,
  kBuilding = 2,
  kRoad = 3,
};
inline constexpr int kTerrainClasses = 4;

struct SceneConfig {
  double extent = 200.0;  // square world footprint, meters
  int grid = 256;         // heightfield cells per axis
  double relief_amplitude = 2.5;
  int buildings = 12;
  double building_height_min = 8.0;
  double building_height_max = 18.0;
  double building_size_min = 8.0;
  double building_size_max = 28.0;
  int roads = 2;
  double road_width = 6.0;
  int vegetation_blobs = 12;
  double vegetation_radius = 9.0;
  double vegetation_height = 1.5;
};

// Piecewise-constant 2.5-D heightfield with a class label per cell.
struct Scene {
  SceneConfig config;
  int grid = 0;
  double extent = 0.0;
  std::vector<double> height;       // grid*grid, row-major (y, x)
  std::vector<std::uint8_t> label;  // grid*grid

  double cell_size() const { return extent / grid; }
  double height_cell(int cx, int cy) const {
    return height[static_cast<std::size_t>(cy) * grid + cx];
  }
  std::uint8_t label_cell(int cx, int cy) const {
    return label[static_cast<std::size_t>(cy) * grid + cx];
  }
};

Scene generate_scene(std::uint64_t seed, const SceneConfig& config);

// Camera-to-world pose.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

// Nadir-looking pose over a world position.
Pose nadir_pose(double x, double y, double altitude);

// Applies a pose to intrinsics: world-to-camera R = pose.R^T,
// t = -pose.R^T p.
CameraModel camera_at(const CameraModel& intrinsics, const Pose& pose);

struct TrajectoryConfig {
  double altitude = 60.0;
  double row_spacing = 15.0;
  double along_spacing = 12.0;
  int frames = 5;
  // Footprint width per unit altitude; with fx = W this is 1.
  double fov_width_ratio = 1.0;
};

// Boustrophedon sweep with >= 60% consecutive-frame footprint overlap.
std::vector<Pose> sweep_trajectory(const Scene& scene,
                                   const TrajectoryConfig& config);

struct FrameTruth {
  Raster rgb;          // 3 channels in [0,1]
  DepthRaster depth;   // meters
  SemanticRaster sem;  // one-hot, kTerrainClasses channels
};

// Exact per-pixel ray casting against the heightfield's column prisms.
FrameTruth render_frame_truth(const Scene& scene, const Pose& pose,
                              const CameraModel& intrinsics);

// Noisy semantic scores standing in for a 2D segmentation model's output.
SemanticRaster seg_features_from_truth(const SemanticRaster& truth,
                                       double noise_sigma,
                                       std::uint64_t seed);

// k distinct valid pixels with Gaussian depth noise; non-positive draws are
// redrawn.
SparseDepthSet sample_sparse_depth(const DepthRaster& depth, int k,
                                   double noise_sigma, std::uint64_t seed);

}  // namespace meshrecon
