#include <cmath>

#include "abrlab/kernels.hpp"

namespace abrlab::kernels::scalar {

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] += acc;
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a[i * k + p];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += s * b[p * n + j];
    }
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double *a, const double *b, double *c) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const double s = a[p * m + i];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += s * b[p * n + j];
    }
  }
}

void adam_update(std::size_t n, const AdamStep &s, const double *grad, double *param, double *m, double *v) {
  const double one_minus_b1 = 1.0 - s.beta1;
  const double one_minus_b2 = 1.0 - s.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = s.beta1 * m[i] + one_minus_b1 * g;
    v[i] = s.beta2 * v[i] + one_minus_b2 * (g * g);
    const double mhat = m[i] / s.bias1;
    const double vhat = v[i] / s.bias2;
    param[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
}

}  // namespace abrlab::kernels::scalar
