#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "abrlab/kernels.hpp"

namespace abrlab::kernels::avx2 {
namespace {

// Packed, cache-blocked product C += A * B where A(i, p) = a[i * rsa + p * csa]
// and B(p, j) = b[p * rsb + j * csb]; the three public layouts differ only in
// strides. Panels are copied into contiguous zero-padded buffers so the
// register-blocked micro-kernel streams unit-stride data.
constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 8;
constexpr std::size_t kKc = 256;
constexpr std::size_t kMc = 72;
constexpr std::size_t kNc = 512;

struct Strided {
  const double *ptr;
  std::size_t row;
  std::size_t col;
  double at(std::size_t i, std::size_t j) const { return ptr[i * row + j * col]; }
};

void pack_a(const Strided &a, std::size_t i0, std::size_t mc, std::size_t p0, std::size_t kc, double *out) {
  for (std::size_t ir = 0; ir < mc; ir += kMr) {
    const std::size_t rows = std::min(kMr, mc - ir);
    for (std::size_t p = 0; p < kc; ++p) {
      for (std::size_t r = 0; r < kMr; ++r) *out++ = r < rows ? a.at(i0 + ir + r, p0 + p) : 0.0;
    }
  }
}

void pack_b(const Strided &b, std::size_t p0, std::size_t kc, std::size_t j0, std::size_t nc, double *out) {
  for (std::size_t jr = 0; jr < nc; jr += kNr) {
    const std::size_t cols = std::min(kNr, nc - jr);
    if (cols == kNr && b.col == 1) {
      for (std::size_t p = 0; p < kc; ++p) {
        const double *src = b.ptr + (p0 + p) * b.row + j0 + jr;
        _mm256_storeu_pd(out, _mm256_loadu_pd(src));
        _mm256_storeu_pd(out + 4, _mm256_loadu_pd(src + 4));
        out += kNr;
      }
    } else {
      for (std::size_t p = 0; p < kc; ++p) {
        for (std::size_t c = 0; c < kNr; ++c) *out++ = c < cols ? b.at(p0 + p, j0 + jr + c) : 0.0;
      }
    }
  }
}

// 6x8 tile: C[0..6) x [0..8) += sum_p a[p][r] * b[p][c].
void micro_kernel(std::size_t kc, const double *a, const double *b, double *c, std::size_t ldc, std::size_t rows,
                  std::size_t cols) {
  // Twelve accumulators plus two B vectors and a broadcast fill the 16 ymm
  // registers; the unroll pragmas keep them out of memory at -O2.
  __m256d acc[kMr][2];
#pragma GCC unroll 6
  for (std::size_t r = 0; r < kMr; ++r) acc[r][0] = acc[r][1] = _mm256_setzero_pd();
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256d b0 = _mm256_loadu_pd(b);
    const __m256d b1 = _mm256_loadu_pd(b + 4);
#pragma GCC unroll 6
    for (std::size_t r = 0; r < kMr; ++r) {
      const __m256d x = _mm256_broadcast_sd(a + r);
      acc[r][0] = _mm256_fmadd_pd(x, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_pd(x, b1, acc[r][1]);
    }
    a += kMr;
    b += kNr;
  }
  if (rows == kMr && cols == kNr) {
#pragma GCC unroll 6
    for (std::size_t r = 0; r < kMr; ++r) {
      double *cr = c + r * ldc;
      _mm256_storeu_pd(cr, _mm256_add_pd(_mm256_loadu_pd(cr), acc[r][0]));
      _mm256_storeu_pd(cr + 4, _mm256_add_pd(_mm256_loadu_pd(cr + 4), acc[r][1]));
    }
    return;
  }
  alignas(32) double tile[kMr][kNr];
#pragma GCC unroll 6
  for (std::size_t r = 0; r < kMr; ++r) {
    _mm256_store_pd(tile[r], acc[r][0]);
    _mm256_store_pd(tile[r] + 4, acc[r][1]);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += tile[r][j];
  }
}

double dot(const double *x, const double *y, std::size_t k) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd(), s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
  std::size_t p = 0;
  for (; p + 16 <= k; p += 16) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 4), _mm256_loadu_pd(y + p + 4), s1);
    s2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 8), _mm256_loadu_pd(y + p + 8), s2);
    s3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p + 12), _mm256_loadu_pd(y + p + 12), s3);
  }
  for (; p + 4 <= k; p += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), s0);
  const __m256d s = _mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  double acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; p < k; ++p) acc += x[p] * y[p];
  return acc;
}

void gemm_packed(std::size_t m, std::size_t n, std::size_t k, const Strided &a, const Strided &b, double *c) {
  if (m == 0 || n == 0 || k == 0) return;
  thread_local std::vector<double> abuf, bbuf;
  abuf.resize(((kMc + kMr - 1) / kMr) * kMr * kKc);
  bbuf.resize(((kNc + kNr - 1) / kNr) * kNr * kKc);
  for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
    const std::size_t nc = std::min(kNc, n - j0);
    for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
      const std::size_t kc = std::min(kKc, k - p0);
      pack_b(b, p0, kc, j0, nc, bbuf.data());
      for (std::size_t i0 = 0; i0 < m; i0 += kMc) {
        const std::size_t mc = std::min(kMc, m - i0);
        pack_a(a, i0, mc, p0, kc, abuf.data());
        for (std::size_t jr = 0; jr < nc; jr += kNr) {
          const double *bp = bbuf.data() + (jr / kNr) * kNr * kc;
          for (std::size_t ir = 0; ir < mc; ir += kMr) {
            micro_kernel(kc, abuf.data() + (ir / kMr) * kMr * kc, bp, c + (i0 + ir) * n + j0 + jr, n,
                         std::min(kMr, mc - ir), std::min(kNr, nc - jr));
          }
        }
      }
    }
  }
}

}  // namespace

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  // A row or two (single decisions) cannot amortize packing B.
  if (m <= 2) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
    }
    return;
  }
  gemm_packed(m, n, k, {a, k, 1}, {b, 1, k}, c);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  gemm_packed(m, n, k, {a, k, 1}, {b, n, 1}, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  gemm_packed(m, n, k, {a, 1, m}, {b, n, 1}, c);
}

void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d omb1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d omb2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d bias1 = _mm256_set1_pd(s.bias1);
  const __m256d bias2 = _mm256_set1_pd(s.bias2);
  const __m256d lr = _mm256_set1_pd(s.learning_rate);
  const __m256d eps = _mm256_set1_pd(s.epsilon);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(omb1, g));
    const __m256d vi =
        _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)), _mm256_mul_pd(omb2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, bias1);
    const __m256d vhat = _mm256_div_pd(vi, bias2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, mhat), _mm256_add_pd(_mm256_sqrt_pd(vhat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  if (i < n) scalar::adam_update(n - i, s, grad + i, param + i, m + i, v + i);
}

}  // namespace abrlab::kernels::avx2
