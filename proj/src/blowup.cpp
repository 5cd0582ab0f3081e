#include "saddle/blowup.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace saddle {

MetricBlocks pullback_metric_blocks(const MetricField& metric, double r,
                                    const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  MetricBlocks mb;
  if (metric.euclidean()) {
    mb.v = Eigen::VectorXd::Zero(d);
    mb.alpha = Eigen::MatrixXd::Zero(d, d);
    mb.w = Eigen::VectorXd::Zero(d);
    return mb;
  }
  Eigen::MatrixXd B = metric.B(r * u);
  if (B.rows() != d || B.cols() != d) throw ShapeMismatch("metric B: wrong shape");
  if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + B.cwiseAbs().maxCoeff()))
    throw DomainError("metric B: not symmetric");

  Eigen::MatrixXd pi = Eigen::MatrixXd::Identity(d, d) - u * u.transpose();
  mb.lambda = u.dot(B * u);
  mb.v = pi * (B * u);
  mb.alpha = pi * B * pi;

  // (I + r^2 alpha) preserves the splitting R u (+) u-perp; invert in full space.
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) + (r * r) * mb.alpha;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw MetricSingular("pullback_metric_blocks: I + r^2 alpha singular");
  Eigen::VectorXd Minv_v = lu.solve(mb.v);
  mb.w = Minv_v;
  double den = 1.0 + r * r * mb.lambda - std::pow(r, 4) * mb.v.dot(Minv_v);
  // den must stay positive: it is a diagonal coefficient of the pulled-back
  // metric, so a sign change means positive-definiteness was lost.
  if (den <= 1e-12) throw MetricSingular("pullback_metric_blocks: c-denominator vanishes");
  mb.c = 1.0 / den;
  return mb;
}

namespace {

// Internal evaluation of (a, z) valid for any r != 0; the public wrapper
// restricts to 0 < r < r_max, the linearization uses both signs.
std::pair<double, Eigen::VectorXd> lifted_components_any_r(const BlowupField& field, double r,
                                                           const Eigen::VectorXd& u) {
  Eigen::VectorXd grad_f = field.obj.gradient(field.w_star + r * u);
  const double D1F = grad_f.dot(u);
  Eigen::VectorXd pi_grad = grad_f - D1F * u;
  Eigen::VectorXd gradFr = r * pi_grad;  // h-gradient of F^r on the sphere

  if (field.metric.euclidean()) {
    return {D1F, pi_grad / r};
  }
  MetricBlocks mb = pullback_metric_blocks(field.metric, r, u);
  const int d = static_cast<int>(u.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(d, d) + (r * r) * mb.alpha;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
  if (!lu.isInvertible()) throw MetricSingular("lifted_gradient_components: I + r^2 alpha singular");
  const double bracket = D1F - r * mb.w.dot(gradFr);
  double a = mb.c * bracket;
  Eigen::VectorXd z = -mb.c * r * bracket * mb.w + lu.solve(gradFr) / (r * r);
  return {a, z};
}

std::pair<double, Eigen::VectorXd> field_any_r(const BlowupField& field, double r,
                                               const Eigen::VectorXd& u) {
  if (r == 0.0) {
    return {0.0, sphere_grad(field.P, u)};
  }
  auto [a, z] = lifted_components_any_r(field, r, u);
  const double s = std::pow(r, 2 - field.k);
  return {s * a, s * z};
}

}  // namespace

std::pair<double, Eigen::VectorXd> lifted_gradient_components(const BlowupField& field, double r,
                                                              const Eigen::VectorXd& u) {
  if (!(r > 0)) throw DomainError("lifted_gradient_components: r must be > 0");
  if (r >= field.r_max) throw DomainError("lifted_gradient_components: r >= r_max");
  return lifted_components_any_r(field, r, u);
}

std::pair<double, Eigen::VectorXd> vector_field(const BlowupField& field, const CylinderPoint& pt) {
  if (pt.r < 0 || pt.r >= field.r_max) throw DomainError("vector_field: r outside [0, r_max)");
  if (std::abs(pt.u.norm() - 1.0) > 1e-9) throw DomainError("vector_field: u not on sphere");
  return field_any_r(field, pt.r, pt.u);
}

double find_r_max(const MetricField& metric, int dim, double rho) {
  if (metric.euclidean()) return rho;
  auto ok_at = [&](double r) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss;
    for (int s = 0; s < 32; ++s) {
      Eigen::VectorXd u(dim);
      for (int i = 0; i < dim; ++i) u[i] = gauss(rng);
      u.normalize();
      try {
        pullback_metric_blocks(metric, r, u);
      } catch (const MetricSingular&) {
        return false;
      }
    }
    return true;
  };
  if (ok_at(rho)) return rho;
  double lo = 0.0, hi = rho;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ok_at(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

BlowupField BlowupField::build(ObjectiveSpec obj, const Eigen::VectorXd& w_star,
                               MetricField metric, double rho, const VanishingOpts& vopts) {
  if (!(rho > 0)) throw DomainError("BlowupField: rho must be > 0");
  auto [k, P] = leading_term(obj, w_star, vopts);
  double r_max = find_r_max(metric, static_cast<int>(w_star.size()), rho);
  return BlowupField{std::move(obj), w_star, k, std::move(P), std::move(metric), r_max};
}

std::vector<std::complex<double>> linearization_spectrum(const BlowupField& field,
                                                         const SphereCritPoint& u_star) {
  const Eigen::VectorXd& u0 = u_star.u;
  const int d = static_cast<int>(u0.size());
  const double crit_tol = default_crit_tol(field.P);
  if (sphere_grad(field.P, u0).norm() > std::max(crit_tol, u_star.grad_residual * 1.0001))
    throw NotCritical("linearization_spectrum: u* fails the residual test");

  const Eigen::MatrixXd Z = tangent_basis(u0);
  const double kp = field.k * field.P.eval(u0);

  // Chart (r, s) -> cylinder via the sphere exponential at u*; the field is
  // pulled back with the exact differential of the exponential.
  auto chart_field = [&](const Eigen::VectorXd& rs) -> Eigen::VectorXd {
    const double r = rs[0];
    Eigen::VectorXd s = rs.tail(d - 1);
    const double t = s.norm();
    Eigen::VectorXd u, Y(d);
    if (t < 1e-14) {
      u = u0;
      auto [X1, X2] = field_any_r(field, r, u);
      Y[0] = X1;
      Y.tail(d - 1) = Z.transpose() * X2;
      return Y;
    }
    Eigen::VectorXd vhat_s = s / t;         // radial direction in chart coords
    Eigen::VectorXd dir = Z * vhat_s;       // same direction, ambient
    u = std::cos(t) * u0 + std::sin(t) * dir;
    auto [X1, X2] = field_any_r(field, r, u);
    Eigen::VectorXd e_r = -std::sin(t) * u0 + std::cos(t) * dir;
    const double comp_par = X2.dot(e_r);
    Eigen::VectorXd perp = X2 - comp_par * e_r;
    Y[0] = X1;
    Y.tail(d - 1) = comp_par * vhat_s + (t / std::sin(t)) * (Z.transpose() * perp);
    return Y;
  };

  const double h = 1e-5 * (1.0 + std::abs(kp));
  Eigen::MatrixXd J(d, d);
  Eigen::VectorXd rs = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd rp = rs, rm = rs;
    rp[j] += h;
    rm[j] -= h;
    J.col(j) = (chart_field(rp) - chart_field(rm)) / (2 * h);
  }
  if (!J.allFinite()) throw NumericalError("linearization_spectrum: non-finite Jacobian");
  Eigen::EigenSolver<Eigen::MatrixXd> es(J);
  std::vector<std::complex<double>> eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = es.eigenvalues()[i];
  std::sort(eigs.begin(), eigs.end(), [](auto a, auto b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return eigs;
}

}  // namespace saddle
