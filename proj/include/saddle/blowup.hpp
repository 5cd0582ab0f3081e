#pragma once

#include <Eigen/Core>
#include <complex>
#include <functional>
#include <vector>

#include "saddle/objective.hpp"
#include "saddle/sphere.hpp"

namespace saddle {

/// Metric g = g0 + r^2 b in normal coordinates, with b_{ij} = B_{ij}(w).
/// An empty callback means the Euclidean metric (B = 0).
struct MetricField {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> B;
  bool euclidean() const { return !B; }
};

/// The lambda, v, alpha, w, c blocks of the pulled-back metric at (r,u).
struct MetricBlocks {
  double lambda = 0;
  Eigen::VectorXd v;      // tangent vector at u
  Eigen::MatrixXd alpha;  // d x d, tangent operator (pi_u B pi_u)
  Eigen::VectorXd w;      // tangent vector at u
  double c = 1;
};

struct CylinderPoint {
  double r = 0;
  Eigen::VectorXd u;  // unit vector
};

/// Blown-up gradient field data on the cylinder (-r_max, r_max) x S^{d-1}.
struct BlowupField {
  ObjectiveSpec obj;
  Eigen::VectorXd w_star;
  int k;
  HomogeneousPoly P;
  MetricField metric;
  double r_max;

  static BlowupField build(ObjectiveSpec obj, const Eigen::VectorXd& w_star,
                           MetricField metric = {}, double rho = 1.0,
                           const VanishingOpts& vopts = {});
};

MetricBlocks pullback_metric_blocks(const MetricField& metric, double r,
                                    const Eigen::VectorXd& u);

/// Components (a, z) of the pulled-back gradient of F(r,u) = f(w* + ru)
/// with respect to phi*g, for 0 < r < r_max.
std::pair<double, Eigen::VectorXd> lifted_gradient_components(const BlowupField& field, double r,
                                                              const Eigen::VectorXd& u);

/// The extended field X: r^{2-k} (a, z) for r > 0 and (0, grad p(u)) at r = 0.
std::pair<double, Eigen::VectorXd> vector_field(const BlowupField& field, const CylinderPoint& pt);

/// Eigenvalues of the finite-difference linearization of X at (0, u*).
/// Contract: matches {k p(u*)} union spectrum of the tangent
/// Hessian of p at u* within discretization error.
std::vector<std::complex<double>> linearization_spectrum(const BlowupField& field,
                                                         const SphereCritPoint& u_star);

/// Largest r <= rho at which the pulled-back metric blocks stay invertible
/// along sampled directions (bisection; rho itself for the Euclidean metric).
double find_r_max(const MetricField& metric, int dim, double rho);

}  // namespace saddle
