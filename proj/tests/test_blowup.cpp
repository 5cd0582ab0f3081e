#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "saddle/blowup.hpp"

using namespace saddle;

namespace {

Polynomial xyz_squared_loss() {
  Polynomial p(3);
  p.add_term({0, 0, 0}, 0.5);
  p.add_term({1, 1, 1}, -1.0);
  p.add_term({2, 2, 2}, 0.5);
  return p;
}

Polynomial quadratic_saddle() {
  Polynomial p(2);
  p.add_term({2, 0}, 0.5);
  p.add_term({0, 2}, -0.5);
  return p;
}

Eigen::VectorXd random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd u(d);
  for (int i = 0; i < d; ++i) u[i] = gauss(rng);
  return u.normalized();
}

// Multiset distance between two eigenvalue lists (greedy nearest matching).
double multiset_dist(std::vector<std::complex<double>> a, std::vector<double> b) {
  double worst = 0;
  for (double lb : b) {
    size_t best = 0;
    double bd = 1e300;
    for (size_t i = 0; i < a.size(); ++i) {
      double d = std::abs(a[i] - std::complex<double>(lb, 0));
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    worst = std::max(worst, bd);
    a.erase(a.begin() + best);
  }
  return worst;
}

}  // namespace

TEST_CASE("metric blocks: Euclidean and identity perturbation") {
  std::mt19937_64 rng(1);
  MetricField euc;  // empty callback
  Eigen::VectorXd u = random_unit(3, rng);
  MetricBlocks b0 = pullback_metric_blocks(euc, 0.3, u);
  CHECK(b0.lambda == doctest::Approx(0.0));
  CHECK(b0.v.norm() == doctest::Approx(0.0));
  CHECK(b0.alpha.norm() == doctest::Approx(0.0));
  CHECK(b0.w.norm() == doctest::Approx(0.0));
  CHECK(b0.c == doctest::Approx(1.0));

  MetricField id;
  id.B = [](const Eigen::VectorXd& w) {
    return Eigen::MatrixXd(Eigen::MatrixXd::Identity(w.size(), w.size()));
  };
  double r = 0.4;
  MetricBlocks bi = pullback_metric_blocks(id, r, u);
  CHECK(bi.lambda == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(bi.v.norm() == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(bi.w.norm() == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(bi.c == doctest::Approx(1.0 / (1.0 + r * r)).epsilon(1e-13));
  // alpha acts as the identity on the tangent space
  Eigen::VectorXd t = (Eigen::VectorXd::Unit(3, 0) - u[0] * u).normalized();
  CHECK((bi.alpha * t - t).norm() <= 1e-12);
  CHECK((bi.alpha * u).norm() <= 1e-12);
}

TEST_CASE("metric blocks at r = 0 reduce to the plain projections") {
  std::mt19937_64 rng(2);
  Eigen::MatrixXd B0(3, 3);
  B0 << 1.0, 0.2, -0.1, 0.2, 0.5, 0.3, -0.1, 0.3, 2.0;
  MetricField m;
  m.B = [B0](const Eigen::VectorXd&) { return B0; };
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd u = random_unit(3, rng);
    MetricBlocks b = pullback_metric_blocks(m, 0.0, u);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(3, 3) - u * u.transpose();
    CHECK(b.lambda == doctest::Approx(u.dot(B0 * u)).epsilon(1e-13));
    CHECK((b.v - pi * B0 * u).norm() <= 1e-13);
    CHECK((b.alpha - pi * B0 * pi).norm() <= 1e-12);
    CHECK((b.w - b.v).norm() <= 1e-13);
    CHECK(b.c == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("lifted gradient: Euclidean closed forms") {
  auto field = BlowupField::build(ObjectiveSpec::from_polynomial(quadratic_saddle()),
                                  Eigen::Vector2d::Zero());
  CHECK(field.k == 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(0, 2 * M_PI);
  for (int trial = 0; trial < 25; ++trial) {
    double th = ang(rng), r = 0.05 + 0.4 * trial / 25.0;
    Eigen::Vector2d u(std::cos(th), std::sin(th));
    auto [a, z] = lifted_gradient_components(field, r, u);
    double c2 = std::cos(th) * std::cos(th), s2 = std::sin(th) * std::sin(th);
    CHECK(a == doctest::Approx(r * (c2 - s2)).epsilon(1e-12));
    Eigen::Vector2d gradf(r * std::cos(th), -r * std::sin(th));
    Eigen::Vector2d expect = (gradf - gradf.dot(u) * u) / r;
    CHECK((z - expect).norm() <= 1e-12);
    CHECK(std::abs(z.dot(u)) <= 1e-10);
  }
  CHECK_THROWS_AS(lifted_gradient_components(field, 0.0, Eigen::Vector2d(1, 0)), DomainError);
}

TEST_CASE("radial objective: a = 2r, z = 0") {
  Polynomial n2(2);
  n2.add_term({2, 0}, 1.0);
  n2.add_term({0, 2}, 1.0);
  auto field =
      BlowupField::build(ObjectiveSpec::from_polynomial(n2), Eigen::Vector2d::Zero());
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd u = random_unit(2, rng);
    double r = 0.01 + 0.08 * trial;
    auto [a, z] = lifted_gradient_components(field, r, u);
    CHECK(a == doctest::Approx(2 * r).epsilon(1e-12));
    CHECK(z.norm() <= 1e-12);
  }
}

TEST_CASE("perturbed metric with B = 0 matches the Euclidean branch") {
  auto obj = ObjectiveSpec::from_polynomial(xyz_squared_loss());
  auto euc = BlowupField::build(obj, Eigen::Vector3d::Zero());
  MetricField zero;
  zero.B = [](const Eigen::VectorXd&) { return Eigen::MatrixXd(Eigen::MatrixXd::Zero(3, 3)); };
  auto per = BlowupField::build(obj, Eigen::Vector3d::Zero(), zero);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rad(1e-3, 0.9);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd u = random_unit(3, rng);
    double r = rad(rng);
    auto [a1, z1] = lifted_gradient_components(euc, r, u);
    auto [a2, z2] = lifted_gradient_components(per, r, u);
    CHECK(std::abs(a1 - a2) <= 1e-13 * (1 + std::abs(a1)));
    CHECK((z1 - z2).norm() <= 1e-13 * (1 + z1.norm()));
  }
}

TEST_CASE("vector field at r = 0 is (0, sphere gradient)") {
  auto field = BlowupField::build(ObjectiveSpec::from_polynomial(xyz_squared_loss()),
                                  Eigen::Vector3d::Zero());
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd u = random_unit(3, rng);
    auto [x1, x2] = vector_field(field, {0.0, u});
    CHECK(x1 == 0.0);
    CHECK((x2 - sphere_grad(field.P, u)).norm() <= 1e-14);
    CHECK(std::abs(x2.dot(u)) <= 1e-10);
  }
}

TEST_CASE("vector field closed-form spot value") {
  auto field = BlowupField::build(ObjectiveSpec::from_polynomial(quadratic_saddle()),
                                  Eigen::Vector2d::Zero());
  auto [x1, x2] = vector_field(field, {0.1, Eigen::Vector2d(1, 0)});
  CHECK(x1 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(x2.norm() <= 1e-12);
}

TEST_CASE("extension bound: |X(r,u) - (0, grad p(u))| decays linearly in r") {
  std::mt19937_64 rng(7);
  for (auto* poly : {&xyz_squared_loss}) {
    (void)poly;
  }
  auto check_slope = [&rng](const ObjectiveSpec& obj, int d) {
    auto field = BlowupField::build(obj, Eigen::VectorXd::Zero(d));
    std::vector<Eigen::VectorXd> us;
    for (int i = 0; i < 500; ++i) us.push_back(random_unit(d, rng));
    std::vector<double> logr, logd;
    for (double r = 1e-2; r >= 1e-5 / 1.001; r /= 4) {
      double worst = 0;
      for (const auto& u : us) {
        auto [x1, x2] = vector_field(field, {r, u});
        auto [y1, y2] = vector_field(field, {0.0, u});
        worst = std::max(worst, std::hypot(x1 - y1, (x2 - y2).norm()));
      }
      if (worst == 0) continue;
      logr.push_back(std::log(r));
      logd.push_back(std::log(worst));
    }
    REQUIRE(logr.size() >= 4);
    double mx = 0, my = 0;
    for (size_t i = 0; i < logr.size(); ++i) {
      mx += logr[i];
      my += logd[i];
    }
    mx /= logr.size();
    my /= logd.size();
    double num = 0, den = 0;
    for (size_t i = 0; i < logr.size(); ++i) {
      num += (logr[i] - mx) * (logd[i] - my);
      den += (logr[i] - mx) * (logr[i] - mx);
    }
    CHECK(num / den >= 0.9);
  };
  check_slope(ObjectiveSpec::from_polynomial(xyz_squared_loss()), 3);
  check_slope(ObjectiveSpec::from_polynomial(quadratic_saddle()), 2);
}

TEST_CASE("linearization spectrum matches {k p} union tangent spectrum") {
  // quadratic saddle at (1,0): {1, -2}
  auto fq = BlowupField::build(ObjectiveSpec::from_polynomial(quadratic_saddle()),
                               Eigen::Vector2d::Zero());
  auto qpts = find_crit_points(fq.P);
  for (const auto& cp : qpts) {
    auto spec = linearization_spectrum(fq, cp);
    std::vector<double> expect = cp.tangent_eigs;
    expect.push_back(fq.k * cp.value);
    double rad = 0;
    for (auto& e : spec) rad = std::max(rad, std::abs(e));
    CHECK(multiset_dist(spec, expect) <= 1e-5 * (1 + rad));
    if (std::abs(cp.u[0] - 1.0) < 1e-9) {
      // u* = (1,0): derived spectrum {1, -2}
      std::sort(spec.begin(), spec.end(),
                [](auto a, auto b) { return a.real() < b.real(); });
      CHECK(spec[0].real() == doctest::Approx(-2.0).epsilon(1e-5));
      CHECK(spec[1].real() == doctest::Approx(1.0).epsilon(1e-5));
    }
  }

  // cubic example: axis point (1,0,0) gives {0, -1, +1}; diagonals contain 1/sqrt(3)
  auto fc = BlowupField::build(ObjectiveSpec::from_polynomial(xyz_squared_loss()),
                               Eigen::Vector3d::Zero());
  auto cpts = find_crit_points(fc.P);
  REQUIRE(cpts.size() == 14);
  for (const auto& cp : cpts) {
    auto spec = linearization_spectrum(fc, cp);
    std::vector<double> expect = cp.tangent_eigs;
    expect.push_back(fc.k * cp.value);
    double rad = 0;
    for (auto& e : spec) rad = std::max(rad, std::abs(e));
    CHECK(multiset_dist(spec, expect) <= 1e-5 * (1 + rad));
    if (cp.value > 0.1) {
      // diagonal with p = 1/(3 sqrt 3): k p = 1/sqrt(3)
      bool found = false;
      for (auto& e : spec)
        if (std::abs(e - std::complex<double>(1 / std::sqrt(3.0), 0)) < 1e-5) found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("r_max detection for a metric that degenerates") {
  // B = -I gives c = 1/(1 - r^2): singular at r = 1.
  MetricField m;
  m.B = [](const Eigen::VectorXd& w) {
    return Eigen::MatrixXd(-Eigen::MatrixXd::Identity(w.size(), w.size()));
  };
  double rmax = find_r_max(m, 3, 2.0);
  CHECK(rmax < 1.0 + 1e-6);
  CHECK(rmax > 0.5);
  CHECK(find_r_max(MetricField{}, 3, 2.0) == doctest::Approx(2.0));
}
