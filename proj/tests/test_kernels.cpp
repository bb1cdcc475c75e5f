#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "abrlab/error.hpp"
#include "abrlab/kernels.hpp"
#include "abrlab/rng.hpp"

using namespace abrlab;
namespace k = abrlab::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, Rng &rng) {
  std::vector<double> v(n);
  for (double &x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Plain triple loop in long double, independent of both kernel variants.
// trans_a / trans_b select the stored layout of A and B.
std::vector<long double> oracle(std::size_t m, std::size_t n, std::size_t kk, const std::vector<double> &a,
                                const std::vector<double> &b, const std::vector<double> &c0, bool trans_a,
                                bool trans_b) {
  std::vector<long double> c(c0.begin(), c0.end());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (std::size_t p = 0; p < kk; ++p) {
        const long double x = trans_a ? a[p * m + i] : a[i * kk + p];
        const long double y = trans_b ? b[j * kk + p] : b[p * n + j];
        s += x * y;
      }
      c[i * n + j] += s;
    }
  }
  return c;
}

void check_close(const std::vector<double> &got, const std::vector<long double> &want, std::size_t kk) {
  REQUIRE(got.size() == want.size());
  // Each entry sums kk products of magnitude <= 1 in any order.
  const double tol = 1e-15 * static_cast<double>(kk + 1) * 4.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(got[i] - want[i])));
  }
  CHECK(worst <= tol);
}

struct Shape {
  std::size_t m, n, k;
};

// Edge sizes around the micro-tile (6 x 8), vector width (4) and the cache
// blocks (k 256, m 72, n 512).
const Shape kShapes[] = {{1, 1, 1},    {1, 7, 13},    {2, 5, 3},    {3, 9, 17},   {6, 8, 4},
                         {7, 9, 5},    {13, 17, 31},  {64, 128, 33}, {73, 20, 257}, {5, 513, 9},
                         {80, 70, 600}, {1, 300, 700}, {2, 129, 255}};

}  // namespace

TEST_CASE("gemm variants match an extended-precision oracle on edge sizes") {
  Rng rng(11);
  for (const Shape &s : kShapes) {
    CAPTURE(s.m);
    CAPTURE(s.n);
    CAPTURE(s.k);
    const auto a_nt = random_vector(s.m * s.k, rng);
    const auto b_nt = random_vector(s.n * s.k, rng);
    const auto a_tn = random_vector(s.k * s.m, rng);
    const auto b_nn = random_vector(s.k * s.n, rng);
    const auto c0 = random_vector(s.m * s.n, rng);
    const auto want_nt = oracle(s.m, s.n, s.k, a_nt, b_nt, c0, false, true);
    const auto want_nn = oracle(s.m, s.n, s.k, a_nt, b_nn, c0, false, false);
    const auto want_tn = oracle(s.m, s.n, s.k, a_tn, b_nn, c0, true, false);

    using Gemm = void (*)(std::size_t, std::size_t, std::size_t, const double *, const double *, double *);
    std::vector<std::pair<Gemm, Gemm>> variants = {{k::scalar::gemm_nt, k::scalar::gemm_nn}};
    if (k::isa_available(k::Isa::kAvx2)) variants.push_back({k::avx2::gemm_nt, k::avx2::gemm_nn});
    for (const auto &[nt, nn] : variants) {
      auto c = c0;
      nt(s.m, s.n, s.k, a_nt.data(), b_nt.data(), c.data());
      check_close(c, want_nt, s.k);
      c = c0;
      nn(s.m, s.n, s.k, a_nt.data(), b_nn.data(), c.data());
      check_close(c, want_nn, s.k);
    }
    auto c = c0;
    k::scalar::gemm_tn(s.m, s.n, s.k, a_tn.data(), b_nn.data(), c.data());
    check_close(c, want_tn, s.k);
    if (k::isa_available(k::Isa::kAvx2)) {
      c = c0;
      k::avx2::gemm_tn(s.m, s.n, s.k, a_tn.data(), b_nn.data(), c.data());
      check_close(c, want_tn, s.k);
    }
  }
}

TEST_CASE("gemm with k = 0 leaves C untouched") {
  std::vector<double> c = {1.0, 2.0, 3.0, 4.0};
  const double dummy = 0.0;
  k::gemm_nt(2, 2, 0, &dummy, &dummy, c.data());
  k::gemm_nn(2, 2, 0, &dummy, &dummy, c.data());
  k::gemm_tn(2, 2, 0, &dummy, &dummy, c.data());
  CHECK(c == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("adam_update is bit-identical across ISAs") {
  if (!k::isa_available(k::Isa::kAvx2)) {
    MESSAGE("AVX2 unavailable; scalar path only");
    return;
  }
  Rng rng(5);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    const auto grad = random_vector(n, rng);
    auto p1 = random_vector(n, rng);
    auto m1 = random_vector(n, rng);
    auto v1 = random_vector(n, rng);
    for (double &x : v1) x = std::abs(x);
    auto p2 = p1, m2 = m1, v2 = v1;
    const k::AdamStep s{1e-3, 0.9, 0.999, 1e-8, 1.0 - 0.9 * 0.9 * 0.9, 1.0 - 0.999 * 0.999 * 0.999};
    k::scalar::adam_update(n, s, grad.data(), p1.data(), m1.data(), v1.data());
    k::avx2::adam_update(n, s, grad.data(), p2.data(), m2.data(), v2.data());
    CHECK(std::memcmp(p1.data(), p2.data(), n * sizeof(double)) == 0);
    CHECK(std::memcmp(m1.data(), m2.data(), n * sizeof(double)) == 0);
    CHECK(std::memcmp(v1.data(), v2.data(), n * sizeof(double)) == 0);
  }
}

TEST_CASE("adam_update follows the textbook rule") {
  const k::AdamStep s{0.1, 0.9, 0.999, 1e-8, 1.0 - 0.9, 1.0 - 0.999};
  double p = 1.0, m = 0.0, v = 0.0;
  const double g = 0.5;
  k::adam_update(1, s, &g, &p, &m, &v);
  CHECK(m == doctest::Approx(0.05));
  CHECK(v == doctest::Approx(0.00025));
  // First step: m_hat = g, v_hat = g^2, so the move is lr * g / (|g| + eps).
  CHECK(p == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
}

TEST_CASE("dispatch can be forced to scalar and back") {
  const k::Isa original = k::active_isa();
  k::set_isa(k::Isa::kScalar);
  CHECK(k::active_isa() == k::Isa::kScalar);
  CHECK(std::string(k::isa_name(k::Isa::kScalar)) == "scalar");
  if (k::isa_available(k::Isa::kAvx2)) {
    k::set_isa(k::Isa::kAvx2);
    CHECK(k::active_isa() == k::Isa::kAvx2);
  } else {
    CHECK_THROWS_AS(k::set_isa(k::Isa::kAvx2), ConfigError);
  }
  k::set_isa(original);
}
