#pragma once

#include <Eigen/Dense>

namespace meshrecon {

struct CpdConfig {
  double beta = 2.0;        // Gaussian kernel width, scene units
  double lambda_reg = 3.0;  // displacement smoothness weight
  double outlier_w = 0.1;   // uniform outlier mass, [0, 1)
  int max_iters = 100;
  double tol = 1e-5;
};

struct CpdResult {
  Eigen::MatrixX3d displaced;  // source + displacement field
  int iterations = 0;
  double sigma2 = 0.0;
};

// Nonrigid coherent point drift: EM over a Gaussian mixture centered at the
// moving source points, with a Gaussian-kernel-regularized displacement
// field solved in each M-step.
CpdResult cpd_register(const Eigen::MatrixX3d& source,
                       const Eigen::MatrixX3d& target,
                       const CpdConfig& config);

}  // namespace meshrecon
