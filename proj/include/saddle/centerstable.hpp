#pragma once

#include <Eigen/Core>
#include <functional>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saddle/errors.hpp"

namespace saddle::cstable {

/// T-invariant splitting R^m = E1 (+) E2 with adapted norms built by the
/// truncated-sup construction:
///   |x|_1 = max_{0<=n<=n_trunc} theta^{-n} |T^n x|_2   on E1,
///   |y|_2 = max_{0<=n<=n_trunc} mu^n |T^{-n} y|_2      on E2,
/// and the product norm |(x,y)| = max(|x|_1, |y|_2).
struct LinearSplitting {
  Eigen::MatrixXd T, Tinv;
  Eigen::MatrixXd basis1;  // m x m1, columns span E1 (|lambda| <= 1)
  Eigen::MatrixXd basis2;  // m x m2, columns span E2 (|lambda| > 1)
  double theta = 0, rho = 0, mu = 0;  // 1 < theta < rho < mu
  int n_trunc = 64;
  double opnorm_T = 0, opnorm_Tinv = 0;  // sampled, in the adapted product norm
  Eigen::MatrixXd coord_inv;             // inverse of [basis1 basis2]

  int m() const { return static_cast<int>(T.rows()); }
  int dim1() const { return static_cast<int>(basis1.cols()); }
  int dim2() const { return static_cast<int>(basis2.cols()); }

  // Adapted norms of ambient vectors lying in the respective subspace.
  double norm1(const Eigen::VectorXd& x) const;
  double norm2(const Eigen::VectorXd& y) const;
  double prod_norm(const Eigen::VectorXd& z) const;

  // Ambient <-> (E1, E2) coordinates.
  Eigen::VectorXd ambient(const Eigen::VectorXd& xc, const Eigen::VectorXd& yc) const;
  std::pair<Eigen::VectorXd, Eigen::VectorXd> split(const Eigen::VectorXd& z) const;
  // Norms of coordinate vectors.
  double cnorm1(const Eigen::VectorXd& xc) const { return norm1(basis1 * xc); }
  double cnorm2(const Eigen::VectorXd& yc) const { return norm2(basis2 * yc); }
};

LinearSplitting split_spectrum(const Eigen::MatrixXd& T, double theta_frac = 1.0 / 3,
                               double rho_frac = 2.0 / 3, int n_trunc = 64);

/// Largest eta passing all contraction-side conditions, with a 0.9 safety
/// factor (eta_hat = 2 |T^-1|^2 eta).
double eta_budget(const LinearSplitting& s);

/// Lipschitz graph over a rectangular grid in E1 coordinates (dim1 <= 2),
/// values in E2 coordinates, multilinear interpolation.
struct GraphFunction {
  std::vector<std::vector<double>> axes;  // per-axis node coordinates, sorted, contain 0
  std::vector<Eigen::VectorXd> values;    // row-major over the grid, E2 coordinates

  int dim1() const { return static_cast<int>(axes.size()); }
  std::size_t n_nodes() const;
  std::size_t node_index(const std::vector<int>& idx) const;
  Eigen::VectorXd node_coord(std::size_t flat) const;  // E1 coordinates
  Eigen::VectorXd eval(const Eigen::VectorXd& xc) const;

  static GraphFunction zero(const std::vector<std::vector<double>>& axes, int dim2);
  static GraphFunction uniform(int dim1, int dim2, double half_width, int nodes_per_axis);
};

/// Measured Lipschitz constant over adjacent node pairs, in the adapted norms.
double graph_lipschitz(const GraphFunction& g, const LinearSplitting& s);

/// Weighted distance d(g1,g2) = max over nonzero nodes |g2-g1|_2 / |x|_1.
double graph_distance(const GraphFunction& g1, const GraphFunction& g2,
                      const LinearSplitting& s);

struct GraphProblem {
  LinearSplitting splitting;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;  // ambient, f(0)=0
  GraphFunction grid;  // node layout for the graphs; values of this one are ignored
  double lip_dev = 0;  // measured/declared Lip(f - T) in the adapted norm
  double invert_tol = 1e-12;
  double solve_tol = 1e-10;
  int max_graph_iters = 200;
};

/// Solves f(z) = z0 by the contraction z -> z - T^-1 f(z) + T^-1 z0.
Eigen::VectorXd invert_map(const GraphProblem& p, const Eigen::VectorXd& z0);

/// One application of the graph transform Gamma.
GraphFunction graph_transform(const GraphProblem& p, const GraphFunction& g);

struct SolveStats {
  std::vector<double> iterate_distances;  // d(g_{n+1}, g_n)
  int iterations = 0;
};

/// Fixed point of the graph transform from g = 0.
GraphFunction solve_center_stable(const GraphProblem& p, SolveStats* stats = nullptr);

/// Bump localization f_s(z) = T z + phi(z/s) h(z); also estimates
/// Lip(f_s - T) by sampling pairs in the 2s-ball.
struct LocalizedMap {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> f;
  double lip_dev_estimate = 0;
};
LocalizedMap bump_localize(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& h,
                           const Eigen::MatrixXd& T, double s, const LinearSplitting& split,
                           int n_samples = 4000, std::uint64_t seed = 99);

/// Smooth bump profile: 1 on [0,1], 0 on [2,inf), exp(-1/t)-based in between.
double bump_profile(double t);

struct MembershipResult {
  double growth_max = 0;      // max_n rho^{-n} |f^n(z)|
  int exit_S1 = -1;           // first n with f^n(z) outside S1, or -1
  bool on_graph_prediction = false;
  double dist_to_graph = 0;   // |y - g(x)|_2 at z
  bool low_confidence = false;  // orbit left the graph box
};

MembershipResult membership_test(const GraphProblem& p, const GraphFunction& g,
                                 const Eigen::VectorXd& z, int n_max, double bound);

void graph_to_csv(const GraphFunction& g, std::ostream& os);
nlohmann::json splitting_to_json(const LinearSplitting& s);

}  // namespace saddle::cstable
