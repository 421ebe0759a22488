#include <cstring>
#include <limits>

#include "meshrecon/kernels/kernels.hpp"

namespace meshrecon::kernels::detail {

void nn_sqdist_scalar(const double* px, const double* py, const double* pz,
                      std::size_t np, const double* qx, const double* qy,
                      const double* qz, std::size_t nq, double* out_dist,
                      int* out_idx) {
  for (std::size_t i = 0; i < np; ++i) {
    const double x = px[i], y = py[i], z = pz[i];
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (std::size_t j = 0; j < nq; ++j) {
      const double dx = x - qx[j];
      const double dy = y - qy[j];
      const double dz = z - qz[j];
      double d = dx * dx;
      d += dy * dy;
      d += dz * dz;
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    out_dist[i] = best;
    out_idx[i] = best_j;
  }
}

void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t rows, std::size_t inner, std::size_t cols) {
  std::memset(c, 0, rows * cols * sizeof(double));
  for (std::size_t i = 0; i < rows; ++i) {
    const double* arow = a + i * inner;
    double* crow = c + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + k * cols;
      for (std::size_t j = 0; j < cols; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

void sqdist_row_scalar(double sx, double sy, double sz, const double* qx,
                       const double* qy, const double* qz, std::size_t n,
                       double* out) {
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = sx - qx[j];
    const double dy = sy - qy[j];
    const double dz = sz - qz[j];
    double d = dx * dx;
    d += dy * dy;
    d += dz * dz;
    out[j] = d;
  }
}

}  // namespace meshrecon::kernels::detail

namespace meshrecon::kernels {

void nn_sqdist(const double* px, const double* py, const double* pz,
               std::size_t np, const double* qx, const double* qy,
               const double* qz, std::size_t nq, double* out_dist,
               int* out_idx) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::kAvx2) {
    detail::nn_sqdist_avx2(px, py, pz, np, qx, qy, qz, nq, out_dist, out_idx);
    return;
  }
#endif
  detail::nn_sqdist_scalar(px, py, pz, np, qx, qy, qz, nq, out_dist, out_idx);
}

void matmul(const double* a, const double* b, double* c, std::size_t rows,
            std::size_t inner, std::size_t cols) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::kAvx2) {
    detail::matmul_avx2(a, b, c, rows, inner, cols);
    return;
  }
#endif
  detail::matmul_scalar(a, b, c, rows, inner, cols);
}

void sqdist_row(double sx, double sy, double sz, const double* qx,
                const double* qy, const double* qz, std::size_t n,
                double* out) {
#if defined(__x86_64__)
  if (active_level() == SimdLevel::kAvx2) {
    detail::sqdist_row_avx2(sx, sy, sz, qx, qy, qz, n, out);
    return;
  }
#endif
  detail::sqdist_row_scalar(sx, sy, sz, qx, qy, qz, n, out);
}

}  // namespace meshrecon::kernels
