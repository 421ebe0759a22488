#pragma once

#include <Eigen/Dense>

namespace meshrecon {

// Pinhole camera with a world-to-camera pose: x_cam = R * x_world + t.
// Pixel coordinates are continuous with pixel (i, j) spanning
// [i, i+1) x [j, j+1) and sampled at its center (i+0.5, j+0.5).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return rotation * world + translation;
  }

  Eigen::Vector3d to_world(const Eigen::Vector3d& cam) const {
    return rotation.transpose() * (cam - translation);
  }

  // Camera-frame point with z > 0 to continuous pixel coordinates.
  Eigen::Vector2d project(const Eigen::Vector3d& cam) const {
    return {fx * cam.x() / cam.z() + cx, fy * cam.y() / cam.z() + cy};
  }

  // Unit-depth ray direction (x, y, 1) through a continuous pixel position.
  Eigen::Vector3d ray(double px, double py) const {
    return {(px - cx) / fx, (py - cy) / fy, 1.0};
  }

  bool pixel_in_bounds(double px, double py) const {
    return px >= 0.0 && py >= 0.0 && px <= static_cast<double>(width) &&
           py <= static_cast<double>(height);
  }

  bool rotation_orthonormal(double tol = 1e-9) const {
    const Eigen::Matrix3d err =
        rotation * rotation.transpose() - Eigen::Matrix3d::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && rotation.determinant() > 0.0;
  }
};

}  // namespace meshrecon
