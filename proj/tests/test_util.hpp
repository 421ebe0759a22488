#pragma once

#include <Eigen/Dense>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/rng.hpp"

namespace testutil {

// Centered pinhole camera, fx = fy = width.
inline meshrecon::CameraModel make_camera(int width = 64, int height = 64) {
  meshrecon::CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.fx = width;
  cam.fy = width;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  return cam;
}

inline Eigen::MatrixX3d random_cloud(int n, meshrecon::Rng& rng,
                                     double scale = 1.0) {
  Eigen::MatrixX3d pts(n, 3);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) pts(i, c) = scale * rng.uniform(-1.0, 1.0);
  }
  return pts;
}

}  // namespace testutil
