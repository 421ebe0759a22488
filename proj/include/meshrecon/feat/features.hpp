#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/mesh.hpp"
#include "meshrecon/init/solver.hpp"
#include "meshrecon/render/raster.hpp"

namespace meshrecon {

// Exact Euclidean distance transform of the measurement pixel set,
// computed by the two-pass parabolic-envelope method on squared distances.
Raster edt(const SparseDepthSet& sparse, int width, int height);

// Which channels of the 5-channel stack are populated; the rest stay zero.
enum class InputVariant { kRgbRdEdt, kRgbRd, kRgbOnly, kRdEdt };

// Channels: [R, G, B, rendered init-mesh depth, EDT of sparse measurements].
Raster assemble_input(const Raster& rgb, const TriMesh& init_mesh,
                      const SparseDepthSet& sparse, const CameraModel& camera,
                      InputVariant variant = InputVariant::kRgbRdEdt);

// Four feature maps with 2x downsampling per level.
struct FeaturePyramid {
  std::vector<Raster> levels;
};

// Deterministic stand-in for a learned 2D backbone: each level is the
// 2^r average-pooled stack pushed through a seeded random 3x3 filter bank
// and standardized per channel.
FeaturePyramid toy_feature_pyramid(const Raster& stack,
                                   const std::array<int, 4>& channels,
                                   std::uint64_t seed);

// Bilinear sample with clamp-to-edge borders; texel centers at (i+0.5).
double sample_bilinear(const Raster& raster, double u, double v, int channel);

// Projects each vertex to uv and concatenates the bilinear samples of all
// pyramid levels. Out-of-image projections are clamped and counted.
Eigen::MatrixXd associate(const TriMesh& mesh, const FeaturePyramid& pyramid,
                          const CameraModel& camera,
                          int* clamp_warnings = nullptr);

Eigen::MatrixXd associate_raster(const TriMesh& mesh, const Raster& raster,
                                 const CameraModel& camera,
                                 int* clamp_warnings = nullptr);

}  // namespace meshrecon
