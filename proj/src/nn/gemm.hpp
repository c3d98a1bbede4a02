#pragma once

#include <cstddef>
#include <cstring>

namespace eegdiff::nn::detail {

typedef double v4d __attribute__((vector_size(32)));

inline v4d load4(const double* p) {
  v4d v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void add4(double* p, v4d v) {
  for (int j = 0; j < 4; ++j) p[j] += v[j];
}

// C[M x N] += A[M x K] * B[K x N], all row-major with the given leading
// dimensions. 4 x 8 register tiles; every output sums over K in the same
// order, so results do not depend on which tile it falls in.
inline void gemm_acc(std::size_t M, std::size_t N, std::size_t K, const double* __restrict A, std::size_t lda,
                     const double* __restrict B, std::size_t ldb, double* __restrict C, std::size_t ldc) {
  std::size_t m = 0;
  for (; m + 4 <= M; m += 4) {
    const double* a0 = A + m * lda;
    const double* a1 = a0 + lda;
    const double* a2 = a1 + lda;
    const double* a3 = a2 + lda;
    std::size_t n = 0;
    for (; n + 8 <= N; n += 8) {
      v4d c00{}, c01{}, c10{}, c11{}, c20{}, c21{}, c30{}, c31{};
      for (std::size_t k = 0; k < K; ++k) {
        const v4d b0 = load4(B + k * ldb + n), b1 = load4(B + k * ldb + n + 4);
        c00 += a0[k] * b0;
        c01 += a0[k] * b1;
        c10 += a1[k] * b0;
        c11 += a1[k] * b1;
        c20 += a2[k] * b0;
        c21 += a2[k] * b1;
        c30 += a3[k] * b0;
        c31 += a3[k] * b1;
      }
      double* c = C + m * ldc + n;
      add4(c, c00);
      add4(c + 4, c01);
      add4(c + ldc, c10);
      add4(c + ldc + 4, c11);
      add4(c + 2 * ldc, c20);
      add4(c + 2 * ldc + 4, c21);
      add4(c + 3 * ldc, c30);
      add4(c + 3 * ldc + 4, c31);
    }
    for (; n < N; ++n) {
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      for (std::size_t k = 0; k < K; ++k) {
        const double b = B[k * ldb + n];
        s0 += a0[k] * b;
        s1 += a1[k] * b;
        s2 += a2[k] * b;
        s3 += a3[k] * b;
      }
      C[m * ldc + n] += s0;
      C[(m + 1) * ldc + n] += s1;
      C[(m + 2) * ldc + n] += s2;
      C[(m + 3) * ldc + n] += s3;
    }
  }
  for (; m < M; ++m) {
    const double* a = A + m * lda;
    std::size_t n = 0;
    for (; n + 8 <= N; n += 8) {
      v4d c0{}, c1{};
      for (std::size_t k = 0; k < K; ++k) {
        c0 += a[k] * load4(B + k * ldb + n);
        c1 += a[k] * load4(B + k * ldb + n + 4);
      }
      add4(C + m * ldc + n, c0);
      add4(C + m * ldc + n + 4, c1);
    }
    for (; n < N; ++n) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += a[k] * B[k * ldb + n];
      C[m * ldc + n] += s;
    }
  }
}

// out[c x r] = in[r x c]^T
inline void transpose(std::size_t rows, std::size_t cols, const double* in, double* out) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = in[r * cols + c];
}

}  // namespace eegdiff::nn::detail
