#pragma once

#include <Eigen/Sparse>

#include "meshrecon/core/camera.hpp"
#include "meshrecon/core/laplacian.hpp"
#include "meshrecon/core/mesh.hpp"

namespace meshrecon {

struct SparseDepthRecord {
  double u = 0.0;      // continuous pixel x
  double v = 0.0;      // continuous pixel y
  double depth = 0.0;  // meters, > 0
};

struct SparseDepthSet {
  std::vector<SparseDepthRecord> records;

  int count() const { return static_cast<int>(records.size()); }
};

// Depths strictly positive and finite, pixels inside the image, at most one
// record per integer pixel. Throws validation-error naming the record.
void validate_sparse(const SparseDepthSet& sparse, int width, int height);

// Stacked barycentric rows B and inverse depths rho with B lambda = rho.
struct MeasurementSystem {
  Eigen::SparseMatrix<double> B;  // k x n, <= 3 nonzeros per row, rows sum 1
  Eigen::VectorXd rho;            // k, inverse depths
};

MeasurementSystem build_system(const GridTopology& topology,
                               const SparseDepthSet& sparse,
                               const CameraModel& camera);

// Closed-form ridge solution lambda* = (B^T B + w L^T L)^-1 B^T rho via a
// sparse Cholesky factorization of the SPD normal matrix.
Eigen::VectorXd solve_inverse_depths(const MeasurementSystem& system,
                                     const LaplacianOperator& laplacian,
                                     double w_reg);

// Elevates a flat grid mesh along its camera rays: vertex i becomes
// [v_x/lambda_i, v_y/lambda_i, 1/lambda_i].
TriMesh initialize_mesh(const TriMesh& flat, const SparseDepthSet& sparse,
                        const CameraModel& camera, double w_reg);

}  // namespace meshrecon
