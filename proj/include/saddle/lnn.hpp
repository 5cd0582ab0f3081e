#pragma once

#include <Eigen/Core>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saddle/objective.hpp"
#include "saddle/sphere.hpp"

namespace saddle {

/// Linear neural network loss f(W_1..W_N) = 1/2 |W_N ... W_1 X - Y|_F^2.
struct LNNProblem {
  std::vector<int> dims;  // d_1, ..., d_{N+1}
  Eigen::MatrixXd X;      // d_1 x m
  Eigen::MatrixXd Y;      // d_{N+1} x m

  int depth() const { return static_cast<int>(dims.size()) - 1; }
  int stacked_dim() const;
  void validate() const;

  static LNNProblem from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

using WeightVector = std::vector<Eigen::MatrixXd>;  // W_i is d_{i+1} x d_i

void check_shapes(const LNNProblem& prob, const WeightVector& W);

double loss(const LNNProblem& prob, const WeightVector& W);
WeightVector loss_gradient(const LNNProblem& prob, const WeightVector& W);

/// Count of zero weight blocks. zero_tol <= 0 selects 1e-12 * (1 + |W|).
int zeta(const WeightVector& W, double zero_tol = 0);

/// Stacked-space flattening: W_1 row-major, then W_2, ...
Eigen::VectorXd stack_weights(const LNNProblem& prob, const WeightVector& W);
WeightVector unstack_weights(const LNNProblem& prob, const Eigen::VectorXd& v);

/// Exact polynomial expansion of the loss around W, in the perturbation H
/// (stacked coordinates). Includes the constant term f(W).
Polynomial loss_expansion(const LNNProblem& prob, const WeightVector& W);

/// Order of vanishing of the loss at W (k_max <= 0 selects 2N).
int kappa(const LNNProblem& prob, const WeightVector& W, int k_max = 0);

/// Degree-k Taylor coefficient polynomial at W via the trace form, assuming
/// zeta(W) = kappa(W) = k (HypothesisViolated otherwise). Taylor convention:
/// P(H) = -tr(W_N ... H_{i_k} ... H_{i_1} ... W_1 X Y^T).
HomogeneousPoly leading_poly(const LNNProblem& prob, const WeightVector& W);

/// max |tr d^2 P(v)| over random samples; near zero for trace-form outputs.
double trace_hessian_check(const HomogeneousPoly& P, int n_samples, std::uint64_t seed);

/// Weak-strictness certification at a critical W with zeta = kappa.
SaddleReport certify_weakly_strict(const LNNProblem& prob, const WeightVector& W,
                                   const SphereSearchOpts& opts = {});

}  // namespace saddle
