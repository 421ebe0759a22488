#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/render/raster.hpp"

namespace meshrecon {

// Z-buffer coverage of a mesh: per pixel the winning face, its depth and
// the perspective-correct barycentric weights of the surface point. Pixels
// are sampled at their centers with a top-left fill rule, so adjacent faces
// never double-own a pixel; depth ties go to the lower face index.
struct RenderBuffers {
  DepthRaster depth;
  std::vector<int> face;            // per pixel, -1 when uncovered
  std::vector<Eigen::Vector3d> bary;  // 3D barycentric of the surface point

  int pixel_face(int x, int y) const { return face[y * depth.width + x]; }
  const Eigen::Vector3d& pixel_bary(int x, int y) const {
    return bary[y * depth.width + x];
  }
};

RenderBuffers rasterize(const TriMesh& mesh, const CameraModel& camera);

// Depth of the nearest covering face per pixel; 1/depth is interpolated
// linearly in screen space, which makes depth perspective-correct.
DepthRaster render_depth(const TriMesh& mesh, const CameraModel& camera);

// Per-pixel s-vector interpolated perspective-correct from the winning
// face's vertex scores.
SemanticRaster render_semantics(const TriMesh& mesh,
                                const CameraModel& camera);

// Derivatives of each covered pixel's depth with respect to the covering
// face's vertex coordinates, with the pixel-to-face assignment held fixed.
struct RenderJacobian {
  struct Entry {
    int face = -1;
    // Row k holds d(depth)/d(xyz of the face's k-th vertex).
    Eigen::Matrix3d ddepth_dvertex = Eigen::Matrix3d::Zero();
  };
  int width = 0;
  int height = 0;
  std::vector<int> pixel_entry;  // W*H -> index into entries, -1 uncovered
  std::vector<Entry> entries;

  const Entry* at(int x, int y) const {
    const int e = pixel_entry[y * width + x];
    return e < 0 ? nullptr : &entries[e];
  }
};

std::pair<DepthRaster, RenderJacobian> render_depth_with_jacobian(
    const TriMesh& mesh, const CameraModel& camera);

// Jacobian for an existing coverage result.
RenderJacobian jacobian_from(const RenderBuffers& buffers, const TriMesh& mesh,
                             const CameraModel& camera);

// Mesh built by back-projecting every stride-th pixel of a depth image and
// triangulating the sample grid on the image plane.
TriMesh depth_to_pseudo_mesh(const DepthRaster& depth,
                             const CameraModel& camera, int stride);

Eigen::Vector3d backproject_pixel(const DepthRaster& depth,
                                  const CameraModel& camera, int px, int py);

// Random valid pixels back-projected to camera-frame points.
Eigen::MatrixX3d backproject(const DepthRaster& depth,
                             const CameraModel& camera, int count,
                             std::uint64_t seed);

// Number of pixels covered by two or more faces whose depths lie within
// `band` of each other: the double-layer stitching detector.
int double_layer_pixels(const TriMesh& mesh, const CameraModel& camera,
                        double band);

}  // namespace meshrecon
