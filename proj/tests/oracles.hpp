// Test-only brute-force oracles, deliberately independent of the library's
// implementation paths.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracles {

// Dense Gauss-Jordan solve; throws on a vanishing pivot.
inline Eigen::VectorXd dense_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
  const int n = static_cast<int>(a.rows());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(a(col, col));
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (best < 1e-14) throw std::runtime_error("singular oracle system");
    a.row(col).swap(a.row(pivot));
    std::swap(b[col], b[pivot]);
    const double inv = 1.0 / a(col, col);
    a.row(col) *= inv;
    b[col] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      if (f != 0.0) {
        a.row(r) -= f * a.row(col);
        b[r] -= f * b[col];
      }
    }
  }
  return b;
}

// Exhaustive nearest-neighbor scan with lowest-index tie break.
inline void brute_nn(const Eigen::MatrixX3d& p, const Eigen::MatrixX3d& q,
                     std::vector<double>& dist, std::vector<int>& idx) {
  dist.assign(p.rows(), 0.0);
  idx.assign(p.rows(), -1);
  for (int i = 0; i < p.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int bj = -1;
    for (int j = 0; j < q.rows(); ++j) {
      const double dx = p(i, 0) - q(j, 0);
      const double dy = p(i, 1) - q(j, 1);
      const double dz = p(i, 2) - q(j, 2);
      double d = dx * dx;
      d += dy * dy;
      d += dz * dz;
      if (d < best) {
        best = d;
        bj = j;
      }
    }
    dist[i] = best;
    idx[i] = bj;
  }
}

inline double brute_chamfer_asym(const Eigen::MatrixX3d& p,
                                 const Eigen::MatrixX3d& q) {
  std::vector<double> dist;
  std::vector<int> idx;
  brute_nn(p, q, dist, idx);
  double acc = 0.0;
  for (const double d : dist) acc += d;
  return acc / static_cast<double>(p.rows());
}

// Exact squared-distance scan over measurement cells on the integer grid.
inline std::vector<double> brute_edt(const std::vector<std::pair<int, int>>&
                                         cells,
                                     int width, int height) {
  std::vector<double> out(static_cast<std::size_t>(width) * height, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      long best = std::numeric_limits<long>::max();
      for (const auto& [cx, cy] : cells) {
        const long dx = x - cx;
        const long dy = y - cy;
        best = std::min(best, dx * dx + dy * dy);
      }
      out[static_cast<std::size_t>(y) * width + x] =
          std::sqrt(static_cast<double>(best));
    }
  }
  return out;
}

// Central finite difference of a scalar function along a direction.
inline double central_diff(const std::function<double(double)>& f,
                           double eps) {
  return (f(eps) - f(-eps)) / (2.0 * eps);
}

// d strictly inside the circumcircle of (a, b, c); orientation-corrected.
inline bool in_circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                            const Eigen::Vector2d& c, const Eigen::Vector2d& d,
                            double eps = 1e-9) {
  const double orient = (b.x() - a.x()) * (c.y() - a.y()) -
                        (b.y() - a.y()) * (c.x() - a.x());
  const Eigen::Vector2d pa = a - d;
  const Eigen::Vector2d pb = b - d;
  const Eigen::Vector2d pc = c - d;
  double det = pa.x() * (pb.y() * pc.squaredNorm() -
                         pb.squaredNorm() * pc.y()) -
               pa.y() * (pb.x() * pc.squaredNorm() -
                         pb.squaredNorm() * pc.x()) +
               pa.squaredNorm() * (pb.x() * pc.y() - pb.y() * pc.x());
  if (orient < 0.0) det = -det;
  return det > eps;
}

}  // namespace oracles
