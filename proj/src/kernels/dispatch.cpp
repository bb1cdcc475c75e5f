#include <cstdlib>
#include <string>

#include "abrlab/error.hpp"
#include "abrlab/kernels.hpp"

namespace abrlab::kernels {
namespace {

Isa detect() {
  if (const char *env = std::getenv("ABRLAB_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::kScalar;
  }
  return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

Isa &current() {
  static Isa isa = detect();
  return isa;
}

}  // namespace

bool isa_available(Isa isa) {
  if (isa == Isa::kScalar) return true;
#if defined(ABRLAB_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current(); }

const char *isa_name(Isa isa) { return isa == Isa::kAvx2 ? "avx2" : "scalar"; }

void set_isa(Isa isa) {
  if (!isa_available(isa)) throw ConfigError(std::string("ISA not available: ") + isa_name(isa));
  current() = isa;
}

#if defined(ABRLAB_HAVE_AVX2)
#define ABRLAB_DISPATCH(fn, ...) \
  (current() == Isa::kAvx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define ABRLAB_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  ABRLAB_DISPATCH(gemm_nt, m, n, k, a, b, c);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  ABRLAB_DISPATCH(gemm_nn, m, n, k, a, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  ABRLAB_DISPATCH(gemm_tn, m, n, k, a, b, c);
}

void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v) {
  ABRLAB_DISPATCH(adam_update, n, s, grad, param, m, v);
}

}  // namespace abrlab::kernels
