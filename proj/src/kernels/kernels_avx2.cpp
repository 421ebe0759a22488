#if defined(__x86_64__)

#include <immintrin.h>

#include <cstring>
#include <limits>

#include "meshrecon/kernels/kernels.hpp"

// mul+add is kept unfused so every lane rounds exactly like the scalar
// reference; the TU is compiled with -ffp-contract=off.

namespace meshrecon::kernels::detail {

void nn_sqdist_avx2(const double* px, const double* py, const double* pz,
                    std::size_t np, const double* qx, const double* qy,
                    const double* qz, std::size_t nq, double* out_dist,
                    int* out_idx) {
  const std::size_t nvec = nq - nq % 4;
  for (std::size_t i = 0; i < np; ++i) {
    const __m256d x = _mm256_set1_pd(px[i]);
    const __m256d y = _mm256_set1_pd(py[i]);
    const __m256d z = _mm256_set1_pd(pz[i]);
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best_j = _mm256_set1_pd(-1.0);
    __m256d lane_j = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
    const __m256d four = _mm256_set1_pd(4.0);
    for (std::size_t j = 0; j < nvec; j += 4) {
      const __m256d dx = _mm256_sub_pd(x, _mm256_loadu_pd(qx + j));
      const __m256d dy = _mm256_sub_pd(y, _mm256_loadu_pd(qy + j));
      const __m256d dz = _mm256_sub_pd(z, _mm256_loadu_pd(qz + j));
      __m256d d = _mm256_mul_pd(dx, dx);
      d = _mm256_add_pd(d, _mm256_mul_pd(dy, dy));
      d = _mm256_add_pd(d, _mm256_mul_pd(dz, dz));
      const __m256d lt = _mm256_cmp_pd(d, best, _CMP_LT_OQ);
      best = _mm256_blendv_pd(best, d, lt);
      best_j = _mm256_blendv_pd(best_j, lane_j, lt);
      lane_j = _mm256_add_pd(lane_j, four);
    }
    alignas(32) double dlanes[4];
    alignas(32) double jlanes[4];
    _mm256_store_pd(dlanes, best);
    _mm256_store_pd(jlanes, best_j);
    double bd = std::numeric_limits<double>::infinity();
    long long bj = -1;
    for (int lane = 0; lane < 4; ++lane) {
      const long long j = static_cast<long long>(jlanes[lane]);
      if (dlanes[lane] < bd || (dlanes[lane] == bd && j >= 0 && j < bj)) {
        bd = dlanes[lane];
        bj = j;
      }
    }
    const double sx = px[i], sy = py[i], sz = pz[i];
    for (std::size_t j = nvec; j < nq; ++j) {
      const double dx = sx - qx[j];
      const double dy = sy - qy[j];
      const double dz = sz - qz[j];
      double d = dx * dx;
      d += dy * dy;
      d += dz * dz;
      if (d < bd) {
        bd = d;
        bj = static_cast<long long>(j);
      }
    }
    out_dist[i] = bd;
    out_idx[i] = static_cast<int>(bj);
  }
}

void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t rows, std::size_t inner, std::size_t cols) {
  std::memset(c, 0, rows * cols * sizeof(double));
  const std::size_t cvec = cols - cols % 4;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* arow = a + i * inner;
    double* crow = c + i * cols;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = arow[k];
      const double* brow = b + k * cols;
      const __m256d avv = _mm256_set1_pd(av);
      std::size_t j = 0;
      for (; j < cvec; j += 4) {
        const __m256d prod = _mm256_mul_pd(avv, _mm256_loadu_pd(brow + j));
        _mm256_storeu_pd(crow + j,
                         _mm256_add_pd(_mm256_loadu_pd(crow + j), prod));
      }
      for (; j < cols; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
}

void sqdist_row_avx2(double sx, double sy, double sz, const double* qx,
                     const double* qy, const double* qz, std::size_t n,
                     double* out) {
  const __m256d x = _mm256_set1_pd(sx);
  const __m256d y = _mm256_set1_pd(sy);
  const __m256d z = _mm256_set1_pd(sz);
  const std::size_t nvec = n - n % 4;
  std::size_t j = 0;
  for (; j < nvec; j += 4) {
    const __m256d dx = _mm256_sub_pd(x, _mm256_loadu_pd(qx + j));
    const __m256d dy = _mm256_sub_pd(y, _mm256_loadu_pd(qy + j));
    const __m256d dz = _mm256_sub_pd(z, _mm256_loadu_pd(qz + j));
    __m256d d = _mm256_mul_pd(dx, dx);
    d = _mm256_add_pd(d, _mm256_mul_pd(dy, dy));
    d = _mm256_add_pd(d, _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + j, d);
  }
  for (; j < n; ++j) {
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

#endif  // __x86_64__
