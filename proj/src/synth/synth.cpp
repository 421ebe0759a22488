#include "meshrecon/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meshrecon/core/error.hpp"
#include "meshrecon/core/rng.hpp"

namespace meshrecon {

namespace {

// Bilinear value noise over a coarse seeded lattice.
struct ValueNoise {
  int size;
  std::vector<double> lattice;

  ValueNoise(int size_, Rng& rng) : size(size_) {
    lattice.resize(static_cast<std::size_t>(size) * size);
    for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
  }

  double at(double u, double v) const {
    const double x = u * (size - 1);
    const double y = v * (size - 1);
    const int x0 = std::clamp(static_cast<int>(x), 0, size - 2);
    const int y0 = std::clamp(static_cast<int>(y), 0, size - 2);
    const double fx = x - x0;
    const double fy = y - y0;
    auto l = [&](int xx, int yy) {
      return lattice[static_cast<std::size_t>(yy) * size + xx];
    };
    return (1 - fy) * ((1 - fx) * l(x0, y0) + fx * l(x0 + 1, y0)) +
           fy * ((1 - fx) * l(x0, y0 + 1) + fx * l(x0 + 1, y0 + 1));
  }
};

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  if (config.extent <= 0.0 || config.grid < 2) {
    throw ValidationError("invalid-argument", "scene extent must be positive");
  }
  Rng rng(seed);
  Scene scene;
  scene.config = config;
  scene.grid = config.grid;
  scene.extent = config.extent;
  const int g = config.grid;
  scene.height.assign(static_cast<std::size_t>(g) * g, 0.0);
  scene.label.assign(static_cast<std::size_t>(g) * g, kGround);

  const ValueNoise coarse(9, rng);
  const ValueNoise fine(33, rng);
  for (int y = 0; y < g; ++y) {
    for (int x = 0; x < g; ++x) {
      const double u = (x + 0.5) / g;
      const double v = (y + 0.5) / g;
      scene.height[static_cast<std::size_t>(y) * g + x] =
          config.relief_amplitude * (coarse.at(u, v) + 0.3 * fine.at(u, v));
    }
  }

  // Vegetation blobs: low canopy bumps over the ground relief.
  for (int b = 0; b < config.vegetation_blobs; ++b) {
    const double cx = rng.uniform(0.0, config.extent);
    const double cy = rng.uniform(0.0, config.extent);
    const double r = config.vegetation_radius * rng.uniform(0.6, 1.4);
    const int x0 = std::max(0, static_cast<int>((cx - r) / scene.cell_size()));
    const int x1 = std::min(g - 1, static_cast<int>((cx + r) / scene.cell_size()));
    const int y0 = std::max(0, static_cast<int>((cy - r) / scene.cell_size()));
    const int y1 = std::min(g - 1, static_cast<int>((cy + r) / scene.cell_size()));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = (x + 0.5) * scene.cell_size();
        const double py = (y + 0.5) * scene.cell_size();
        const double d2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
        if (d2 <= r * r) {
          const std::size_t i = static_cast<std::size_t>(y) * g + x;
          scene.label[i] = kVegetation;
          scene.height[i] +=
              config.vegetation_height * (1.0 - std::sqrt(d2) / r);
        }
      }
    }
  }

  // Road strips at ground height.
  for (int r = 0; r < config.roads; ++r) {
    const bool horizontal = (r % 2) == 0;
    const double c = rng.uniform(0.15, 0.85) * config.extent;
    const int half = std::max(
        1, static_cast<int>(0.5 * config.road_width / scene.cell_size()));
    const int cc = static_cast<int>(c / scene.cell_size());
    for (int k = -half; k <= half; ++k) {
      const int line = std::clamp(cc + k, 0, g - 1);
      for (int t = 0; t < g; ++t) {
        const std::size_t i = horizontal
                                  ? static_cast<std::size_t>(line) * g + t
                                  : static_cast<std::size_t>(t) * g + line;
        scene.label[i] = kRoad;
      }
    }
  }

  // Axis-aligned buildings with flat roofs; sides stay sharp because the
  // heightfield is piecewise constant per cell.
  for (int b = 0; b < config.buildings; ++b) {
    const double sx =
        rng.uniform(config.building_size_min, config.building_size_max);
    const double sy =
        rng.uniform(config.building_size_min, config.building_size_max);
    const double cx = rng.uniform(0.1 * config.extent, 0.9 * config.extent);
    const double cy = rng.uniform(0.1 * config.extent, 0.9 * config.extent);
    const double h =
        rng.uniform(config.building_height_min, config.building_height_max);
    const int x0 = std::clamp(
        static_cast<int>((cx - 0.5 * sx) / scene.cell_size()), 0, g - 1);
    const int x1 = std::clamp(
        static_cast<int>((cx + 0.5 * sx) / scene.cell_size()), 0, g - 1);
    const int y0 = std::clamp(
        static_cast<int>((cy - 0.5 * sy) / scene.cell_size()), 0, g - 1);
    const int y1 = std::clamp(
        static_cast<int>((cy + 0.5 * sy) / scene.cell_size()), 0, g - 1);
    double base = 0.0;
    int cells = 0;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        base += scene.height[static_cast<std::size_t>(y) * g + x];
        ++cells;
      }
    }
    base /= std::max(cells, 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * g + x;
        scene.height[i] = base + h;
        scene.label[i] = kBuilding;
      }
    }
  }
  return scene;
}

Pose nadir_pose(double x, double y, double altitude) {
  Pose pose;
  pose.position = {x, y, altitude};
  // Camera axes in world coordinates: x right, y flipped, z straight down.
  pose.rotation << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return pose;
}

CameraModel camera_at(const CameraModel& intrinsics, const Pose& pose) {
  CameraModel cam = intrinsics;
  cam.rotation = pose.rotation.transpose();
  cam.translation = -pose.rotation.transpose() * pose.position;
  return cam;
}

std::vector<Pose> sweep_trajectory(const Scene& scene,
                                   const TrajectoryConfig& config) {
  const double footprint = config.altitude * config.fov_width_ratio;
  if (footprint <= 0.0 || config.frames < 1) {
    throw ValidationError("invalid-config", "invalid trajectory config");
  }
  const double along_overlap = 1.0 - config.along_spacing / footprint;
  const double row_overlap = 1.0 - config.row_spacing / footprint;
  if (along_overlap < 0.6 || row_overlap < 0.6) {
    throw ValidationError(
        "invalid-config",
        "frame spacing yields less than 60% footprint overlap");
  }
  const double margin = 0.5 * footprint + scene.cell_size();
  const double x0 = margin;
  const double x1 = scene.extent - margin;
  const double y0 = margin;
  if (x1 <= x0) {
    throw ValidationError("invalid-config",
                          "scene too small for the camera footprint");
  }
  std::vector<Pose> poses;
  double x = x0, y = y0;
  int dir = 1;
  for (int f = 0; f < config.frames; ++f) {
    if (y + margin > scene.extent) {
      throw ValidationError("invalid-config",
                            "trajectory escapes the scene footprint");
    }
    poses.push_back(nadir_pose(x, y, config.altitude));
    double nx = x + dir * config.along_spacing;
    if (nx > x1 || nx < x0) {
      dir = -dir;
      y += config.row_spacing;
    } else {
      x = nx;
    }
  }
  return poses;
}

namespace {

struct Hit {
  bool valid = false;
  double t = 0.0;  // ray parameter at unit-depth parameterization
  int cx = 0, cy = 0;
};

// Walks the heightfield cells along the ray p + t*d (d not normalized) and
// returns the first prism intersection: either a cell's flat top or the
// vertical wall between two cells.
Hit cast_ray(const Scene& scene, const Eigen::Vector3d& p,
             const Eigen::Vector3d& d) {
  Hit hit;
  const double cs = scene.cell_size();
  const int g = scene.grid;
  double x = p.x() / cs;
  double y = p.y() / cs;
  const double dx = d.x() / cs;
  const double dy = d.y() / cs;
  int cx = std::clamp(static_cast<int>(x), 0, g - 1);
  int cy = std::clamp(static_cast<int>(y), 0, g - 1);
  const int step_x = dx > 0 ? 1 : -1;
  const int step_y = dy > 0 ? 1 : -1;
  double t = 0.0;
  for (int iter = 0; iter < 4 * g; ++iter) {
    if (cx < 0 || cy < 0 || cx >= g || cy >= g) return hit;
    // Exit parameter of the current cell.
    double tx = std::numeric_limits<double>::infinity();
    double ty = std::numeric_limits<double>::infinity();
    if (dx != 0.0) tx = ((cx + (step_x > 0 ? 1 : 0)) - x) / dx;
    if (dy != 0.0) ty = ((cy + (step_y > 0 ? 1 : 0)) - y) / dy;
    const double t_exit = std::min(tx, ty);
    const double h = scene.height_cell(cx, cy);
    if (d.z() != 0.0) {
      const double t_top = (h - p.z()) / d.z();
      if (t_top >= t - 1e-12 && t_top <= t_exit + 1e-12) {
        hit.valid = true;
        hit.t = t_top;
        hit.cx = cx;
        hit.cy = cy;
        return hit;
      }
    }
    // Advance; if the ray enters the next cell below its top we hit the
    // wall at the crossing.
    const int ncx = cx + (tx <= ty ? step_x : 0);
    const int ncy = cy + (tx <= ty ? 0 : step_y);
    if (ncx < 0 || ncy < 0 || ncx >= g || ncy >= g) return hit;
    const double z_cross = p.z() + t_exit * d.z();
    const double nh = scene.height_cell(ncx, ncy);
    if (z_cross <= nh) {
      hit.valid = true;
      hit.t = t_exit;
      hit.cx = ncx;
      hit.cy = ncy;
      return hit;
    }
    t = t_exit;
    cx = ncx;
    cy = ncy;
  }
  return hit;
}

}  // namespace

FrameTruth render_frame_truth(const Scene& scene, const Pose& pose,
                              const CameraModel& intrinsics) {
  const CameraModel cam = camera_at(intrinsics, pose);
  FrameTruth out;
  out.rgb = Raster::zeros(cam.width, cam.height, 3);
  out.depth = Raster::zeros(cam.width, cam.height, 1);
  out.sem = Raster::zeros(cam.width, cam.height, kTerrainClasses);

  const double hmin =
      *std::min_element(scene.height.begin(), scene.height.end());
  const double hmax =
      *std::max_element(scene.height.begin(), scene.height.end());
  const double hrange = std::max(hmax - hmin, 1e-9);
  // Base colors per class: ground, vegetation, building, road.
  static const double kBase[4][3] = {{0.45, 0.38, 0.25},
                                     {0.15, 0.50, 0.20},
                                     {0.55, 0.55, 0.60},
                                     {0.30, 0.30, 0.32}};

  for (int py = 0; py < cam.height; ++py) {
    for (int px = 0; px < cam.width; ++px) {
      // World-frame ray with unit camera depth: depth equals t.
      const Eigen::Vector3d dir_cam = cam.ray(px + 0.5, py + 0.5);
      const Eigen::Vector3d dir_world = pose.rotation * dir_cam;
      const Hit hit = cast_ray(scene, pose.position, dir_world);
      if (!hit.valid) {
        throw ValidationError("out-of-scene",
                              "camera footprint escapes the scene");
      }
      out.depth.at(px, py) = hit.t;
      const std::uint8_t cls = scene.label_cell(hit.cx, hit.cy);
      out.sem.at(px, py, cls) = 1.0;
      const Eigen::Vector3d world = pose.position + hit.t * dir_world;
      const double shade = 0.75 + 0.25 * (world.z() - hmin) / hrange;
      for (int c = 0; c < 3; ++c) {
        out.rgb.at(px, py, c) = std::clamp(kBase[cls][c] * shade, 0.0, 1.0);
      }
    }
  }
  return out;
}

SemanticRaster seg_features_from_truth(const SemanticRaster& truth,
                                       double noise_sigma,
                                       std::uint64_t seed) {
  Rng rng(seed);
  SemanticRaster out = truth;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int c = 0; c < out.channels; ++c) {
        out.at(x, y, c) =
            2.0 * truth.at(x, y, c) + noise_sigma * rng.gaussian();
      }
    }
  }
  return out;
}

SparseDepthSet sample_sparse_depth(const DepthRaster& depth, int k,
                                   double noise_sigma, std::uint64_t seed) {
  std::vector<std::pair<int, int>> valid;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      if (depth.depth_valid(x, y)) valid.emplace_back(x, y);
    }
  }
  if (k < 0 || static_cast<std::size_t>(k) > valid.size()) {
    throw ValidationError("invalid-argument",
                          "requested more samples than valid pixels");
  }
  Rng rng(seed);
  // Partial Fisher-Yates for k distinct pixels.
  for (int i = 0; i < k; ++i) {
    const std::size_t j =
        i + rng.uniform_index(valid.size() - static_cast<std::size_t>(i));
    std::swap(valid[i], valid[j]);
  }
  SparseDepthSet out;
  out.records.reserve(k);
  for (int i = 0; i < k; ++i) {
    const auto& [x, y] = valid[i];
    double d = depth.at(x, y) + noise_sigma * rng.gaussian();
    while (d <= 0.0) d = depth.at(x, y) + noise_sigma * rng.gaussian();
    out.records.push_back({x + 0.5, y + 0.5, d});
  }
  return out;
}

}  // namespace meshrecon
