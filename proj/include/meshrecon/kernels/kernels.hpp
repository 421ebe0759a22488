#pragma once

#include <cstddef>

#include "meshrecon/kernels/simd.hpp"

// Data-parallel inner loops shared by the distance, registration and
// graph-convolution code. Every kernel has a scalar reference and an AVX2
// variant selected at runtime; the variants are bit-identical because both
// evaluate in the same per-element order with fused contraction disabled.

namespace meshrecon::kernels {

// For each query point i: out_dist[i] = min_j ||p_i - q_j||^2 and out_idx[i]
// the smallest j attaining the minimum. Inputs are structure-of-arrays.
void nn_sqdist(const double* px, const double* py, const double* pz,
               std::size_t np, const double* qx, const double* qy,
               const double* qz, std::size_t nq, double* out_dist,
               int* out_idx);

// C = A * B with row-major storage; C is rows x cols, A rows x inner,
// B inner x cols. C must not alias A or B.
void matmul(const double* a, const double* b, double* c, std::size_t rows,
            std::size_t inner, std::size_t cols);

// out[j] = (sx - qx[j])^2 + (sy - qy[j])^2 + (sz - qz[j])^2
void sqdist_row(double sx, double sy, double sz, const double* qx,
                const double* qy, const double* qz, std::size_t n,
                double* out);

namespace detail {

void nn_sqdist_scalar(const double* px, const double* py, const double* pz,
                      std::size_t np, const double* qx, const double* qy,
                      const double* qz, std::size_t nq, double* out_dist,
                      int* out_idx);
void matmul_scalar(const double* a, const double* b, double* c,
                   std::size_t rows, std::size_t inner, std::size_t cols);
void sqdist_row_scalar(double sx, double sy, double sz, const double* qx,
                       const double* qy, const double* qz, std::size_t n,
                       double* out);

#if defined(__x86_64__)
void nn_sqdist_avx2(const double* px, const double* py, const double* pz,
                    std::size_t np, const double* qx, const double* qy,
                    const double* qz, std::size_t nq, double* out_dist,
                    int* out_idx);
void matmul_avx2(const double* a, const double* b, double* c,
                 std::size_t rows, std::size_t inner, std::size_t cols);
void sqdist_row_avx2(double sx, double sy, double sz, const double* qx,
                     const double* qy, const double* qz, std::size_t n,
                     double* out);
#endif

}  // namespace detail

}  // namespace meshrecon::kernels
