#pragma once

#include <cstddef>

// Dense arithmetic used by the policy network. Every kernel has a portable
// scalar reference and, on x86-64, an AVX2+FMA variant picked at startup by
// CPUID. ABRLAB_SIMD=scalar in the environment forces the reference path.
//
// All matrices are row-major and densely packed. The gemm kernels accumulate
// into C (C += ...); callers zero C when they want a plain product.

namespace abrlab::kernels {

enum class Isa { kScalar, kAvx2 };

Isa active_isa();
const char *isa_name(Isa isa);
bool isa_available(Isa isa);
/// Overrides the dispatch choice; used by the equivalence tests. Throws
/// ConfigError for an ISA the CPU lacks.
void set_isa(Isa isa);

/// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
/// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
/// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);

struct AdamStep {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

/// In-place Adam update of n parameters. Bit-identical across ISAs (no
/// contraction: the vector path uses separate multiply and add).
void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v);

// Per-ISA entry points, exposed for equivalence testing.
namespace scalar {
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v);
}  // namespace scalar

namespace avx2 {
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c);
void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v);
}  // namespace avx2

}  // namespace abrlab::kernels
