#include "meshrecon/merge/cpd.hpp"

#include <cmath>

#include "meshrecon/core/error.hpp"
#include "meshrecon/kernels/kernels.hpp"

namespace meshrecon {

namespace {

struct Soa {
  std::vector<double> x, y, z;
};

Soa pack(const Eigen::MatrixX3d& pts) {
  Soa s;
  const int n = static_cast<int>(pts.rows());
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n);
  for (int i = 0; i < n; ++i) {
    s.x[i] = pts(i, 0);
    s.y[i] = pts(i, 1);
    s.z[i] = pts(i, 2);
  }
  return s;
}

}  // namespace

CpdResult cpd_register(const Eigen::MatrixX3d& source,
                       const Eigen::MatrixX3d& target,
                       const CpdConfig& config) {
  const int m = static_cast<int>(source.rows());
  const int n = static_cast<int>(target.rows());
  if (m == 0 || n == 0) {
    throw ValidationError("empty-input", "registration input set is empty");
  }
  if (!(config.beta > 0.0) || !(config.lambda_reg > 0.0) ||
      config.outlier_w < 0.0 || config.outlier_w >= 1.0) {
    throw ValidationError("invalid-argument", "invalid CPD configuration");
  }

  // Gram matrix of the Gaussian kernel over the source points.
  Eigen::MatrixXd g(m, m);
  {
    const Soa sy = pack(source);
    std::vector<double> row(m);
    const double inv2b2 = 1.0 / (2.0 * config.beta * config.beta);
    for (int i = 0; i < m; ++i) {
      kernels::sqdist_row(source(i, 0), source(i, 1), source(i, 2),
                          sy.x.data(), sy.y.data(), sy.z.data(), m, row.data());
      for (int j = 0; j < m; ++j) g(i, j) = std::exp(-row[j] * inv2b2);
    }
  }

  Eigen::MatrixX3d t = source;
  double sigma2 = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      sigma2 += (source.row(i) - target.row(j)).squaredNorm();
    }
  }
  sigma2 /= 3.0 * m * n;

  const Soa tx = pack(target);
  Eigen::VectorXd p1(m), pt1(n);
  Eigen::MatrixX3d px(m, 3);
  Eigen::MatrixXd pmat(m, n);

  CpdResult result;
  result.displaced = t;
  result.sigma2 = sigma2;
  double prev_sigma2 = sigma2;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    // E-step: correspondence posteriors with the uniform outlier term.
    const double inv2s = 1.0 / (2.0 * sigma2);
    std::vector<double> row(n);
    for (int i = 0; i < m; ++i) {
      kernels::sqdist_row(t(i, 0), t(i, 1), t(i, 2), tx.x.data(),
                          tx.y.data(), tx.z.data(), n, row.data());
      for (int j = 0; j < n; ++j) pmat(i, j) = std::exp(-row[j] * inv2s);
    }
    const double c = std::pow(2.0 * M_PI * sigma2, 1.5) * config.outlier_w /
                     (1.0 - config.outlier_w) * static_cast<double>(m) / n;
    pt1.setZero();
    for (int j = 0; j < n; ++j) {
      double denom = c;
      for (int i = 0; i < m; ++i) denom += pmat(i, j);
      const double inv = 1.0 / denom;
      for (int i = 0; i < m; ++i) pmat(i, j) *= inv;
      for (int i = 0; i < m; ++i) pt1[j] += pmat(i, j);
    }
    p1 = pmat.rowwise().sum();
    px = pmat * target;

    // M-step: (d(P1) G + lambda sigma2 I) W = PX - d(P1) Y.
    Eigen::MatrixXd lhs = p1.asDiagonal() * g;
    lhs.diagonal().array() += config.lambda_reg * sigma2;
    const Eigen::MatrixX3d rhs = px - p1.asDiagonal() * source;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::MatrixX3d w = lu.solve(rhs);
    if (!w.allFinite()) {
      throw NumericalError("registration-failed",
                           "CPD M-step solve produced non-finite values");
    }
    t = source + g * w;

    const double np = p1.sum();
    double s2 = 0.0;
    for (int j = 0; j < n; ++j) s2 += pt1[j] * target.row(j).squaredNorm();
    s2 -= 2.0 * (px.array() * t.array()).sum();
    for (int i = 0; i < m; ++i) s2 += p1[i] * t.row(i).squaredNorm();
    sigma2 = std::max(s2 / (3.0 * np), 1e-12);
    result.iterations = iter + 1;
    result.displaced = t;
    result.sigma2 = sigma2;
    if (std::abs(sigma2 - prev_sigma2) < config.tol * prev_sigma2) break;
    prev_sigma2 = sigma2;
  }
  if (!result.displaced.allFinite()) {
    throw NumericalError("registration-failed",
                         "CPD produced non-finite displacements");
  }
  return result;
}

}  // namespace meshrecon
