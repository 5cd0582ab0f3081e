#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "saddle/kernels.hpp"

using namespace saddle;
using namespace saddle::kernels;

namespace {

Polynomial random_poly(int dim, int n_terms, int max_deg, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::normal_distribution<double> gauss;
  Polynomial p(dim);
  for (int t = 0; t < n_terms; ++t) {
    MultiIndex e(dim);
    for (int i = 0; i < dim; ++i) e[i] = deg(rng);
    p.add_term(e, gauss(rng));
  }
  return p;
}

}  // namespace

TEST_CASE("scalar batch kernel matches direct evaluation") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  for (int dim : {1, 2, 3, 5}) {
    Polynomial p = random_poly(dim, 8, 3, rng);
    const std::size_t n = 237;
    Eigen::MatrixXd pts(dim, n);
    for (std::size_t j = 0; j < n; ++j)
      for (int i = 0; i < dim; ++i) pts(i, j) = gauss(rng);
    Eigen::VectorXd out = eval_batch(p, pts);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(out[j] == doctest::Approx(p.eval(pts.col(j))).epsilon(1e-12));
  }
}

TEST_CASE("AVX2 variant is bit-compatible with the scalar reference") {
  if (!cpu_has_avx2()) {
    MESSAGE("AVX2 not available on this CPU; skipping equivalence");
    return;
  }
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int dim : {1, 3, 4, 7}) {
    Polynomial p = random_poly(dim, 12, 4, rng);
    PackedPoly packed = pack(p);
    for (std::size_t n : {std::size_t{1}, std::size_t{4}, std::size_t{5}, std::size_t{1023}}) {
      std::vector<double> pts(dim * n);
      for (auto& x : pts) x = gauss(rng);
      std::vector<double> a(n), b(n);
      eval_batch_scalar(packed, pts.data(), n, a.data());
      eval_batch_avx2(packed, pts.data(), n, b.data());
      for (std::size_t j = 0; j < n; ++j)
        CHECK(std::abs(a[j] - b[j]) <= 1e-12 * (1 + std::abs(a[j])));
    }
  }
}

TEST_CASE("runtime backend selection") {
  Backend original = active_backend();
  set_backend(Backend::Scalar);
  CHECK(active_backend() == Backend::Scalar);
  CHECK(backend_name(Backend::Scalar) == "scalar");
  if (cpu_has_avx2()) {
    set_backend(Backend::Avx2);
    CHECK(active_backend() == Backend::Avx2);
    CHECK(backend_name(Backend::Avx2) == "avx2");
  } else {
    CHECK_THROWS_AS(set_backend(Backend::Avx2), DomainError);
  }
  set_backend(original);
}

TEST_CASE("dispatched result does not depend on the backend") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  Polynomial p = random_poly(3, 10, 3, rng);
  Eigen::MatrixXd pts(3, 511);
  for (int j = 0; j < pts.cols(); ++j)
    for (int i = 0; i < 3; ++i) pts(i, j) = gauss(rng);
  Backend original = active_backend();
  set_backend(Backend::Scalar);
  Eigen::VectorXd scalar_out = eval_batch(p, pts);
  if (cpu_has_avx2()) {
    set_backend(Backend::Avx2);
    Eigen::VectorXd avx_out = eval_batch(p, pts);
    for (int j = 0; j < pts.cols(); ++j)
      CHECK(std::abs(scalar_out[j] - avx_out[j]) <= 1e-12 * (1 + std::abs(scalar_out[j])));
  }
  set_backend(original);
}
