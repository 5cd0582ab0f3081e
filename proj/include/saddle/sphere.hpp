#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saddle/objective.hpp"
#include "saddle/poly.hpp"

namespace saddle {

/// Critical point of p = P|_S with Morse data in a deterministic tangent basis.
struct SphereCritPoint {
  Eigen::VectorXd u;                 // unit vector
  double value = 0;                  // p(u)
  double grad_residual = 0;          // |sphere gradient| at u
  std::vector<double> tangent_eigs;  // eigenvalues of the tangent Hessian, ascending
  int morse_index = 0;               // #{lambda < -lambda_tol}
  int nullity = 0;                   // #{|lambda| <= lambda_tol}
};

struct SphereSearchOpts {
  int n_starts = 0;          // 0 -> 200 * d
  int max_iter = 200;        // gradient phase cap per start
  double crit_tol = 0;       // 0 -> 1e-10 * (1 + max |coef|)
  double dedup_dist = 1e-4;  // geodesic merge radius
  double lambda_tol = 1e-8;
  double p_tol = 1e-10;
  std::uint64_t seed = 2024;  // start-point sampling
  int threads = 1;
};

struct SaddleReport {
  int k = 0;
  bool is_saddle = false;
  bool weakly_strict = false;
  bool tamed = false;
  bool tamed_confident = false;  // heuristic verdict, never a proof
  bool continuum = false;        // critical set looks positive-dimensional
  std::vector<SphereCritPoint> crit_points;
  std::optional<SphereCritPoint> violation;  // witness: p >= 0 and Morse index 0
};

/// Gradient of p = P|_S at u: grad p(u) = grad P(u) - k P(u) u.
Eigen::VectorXd sphere_grad(const HomogeneousPoly& P, const Eigen::VectorXd& u);

/// Deterministic orthonormal tangent basis at u (d x (d-1)): Gram-Schmidt of
/// the standard basis minus its u-component, dropping the most u-aligned axis.
Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& u);

/// Tangent Hessian of p at a critical point u, in the tangent_basis frame:
/// D^2 p(u)(z1,z2) = D^2 P(u)(z1,z2) - <z1,z2> k P(u). Throws NotCritical
/// when the sphere-gradient residual exceeds crit_tol.
Eigen::MatrixXd sphere_hess(const HomogeneousPoly& P, const Eigen::VectorXd& u,
                            double crit_tol = 0);

double default_crit_tol(const HomogeneousPoly& P);

/// Multi-start projected-gradient search on p and -p, Newton-polished,
/// deduplicated by geodesic distance. If continuum_flag is non-null it is set
/// when the critical set does not look like isolated points.
std::vector<SphereCritPoint> find_crit_points(const HomogeneousPoly& P,
                                              const SphereSearchOpts& opts = {},
                                              bool* continuum_flag = nullptr);

/// Full pipeline: leading_term -> find_crit_points -> Definition-style verdicts.
SaddleReport classify_saddle(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                             const SphereSearchOpts& opts = {},
                             const VanishingOpts& vopts = {});

nlohmann::json report_to_json(const SaddleReport& rep);

}  // namespace saddle
