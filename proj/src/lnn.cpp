#include "saddle/lnn.hpp"

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace saddle {

int LNNProblem::stacked_dim() const {
  int s = 0;
  for (int i = 0; i + 1 < static_cast<int>(dims.size()); ++i) s += dims[i] * dims[i + 1];
  return s;
}

void LNNProblem::validate() const {
  if (dims.size() < 2) throw DomainError("LNNProblem: need depth >= 1");
  for (int d : dims)
    if (d < 1) throw DomainError("LNNProblem: dims must be positive");
  if (X.rows() != dims.front() || Y.rows() != dims.back() || X.cols() != Y.cols() ||
      X.cols() < 1)
    throw ShapeMismatch("LNNProblem: data shapes inconsistent with dims");
  if (!X.allFinite() || !Y.allFinite()) throw NumericalError("LNNProblem: non-finite data");
}

void check_shapes(const LNNProblem& prob, const WeightVector& W) {
  prob.validate();
  if (static_cast<int>(W.size()) != prob.depth())
    throw ShapeMismatch("WeightVector: wrong number of blocks");
  for (int i = 0; i < prob.depth(); ++i)
    if (W[i].rows() != prob.dims[i + 1] || W[i].cols() != prob.dims[i])
      throw ShapeMismatch("WeightVector: block " + std::to_string(i + 1) + " has wrong shape");
}

double loss(const LNNProblem& prob, const WeightVector& W) {
  check_shapes(prob, W);
  Eigen::MatrixXd M = prob.X;
  for (const auto& Wi : W) M = Wi * M;
  return 0.5 * (M - prob.Y).squaredNorm();
}

WeightVector loss_gradient(const LNNProblem& prob, const WeightVector& W) {
  check_shapes(prob, W);
  const int N = prob.depth();
  // prefix[i] = W_i ... W_1 X  (prefix[0] = X), suffix[i] = W_N ... W_{i+1}.
  std::vector<Eigen::MatrixXd> prefix(N + 1), suffix(N + 1);
  prefix[0] = prob.X;
  for (int i = 1; i <= N; ++i) prefix[i] = W[i - 1] * prefix[i - 1];
  suffix[N] = Eigen::MatrixXd::Identity(prob.dims.back(), prob.dims.back());
  for (int i = N - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * W[i];
  Eigen::MatrixXd E = prefix[N] - prob.Y;
  WeightVector G(N);
  for (int i = 1; i <= N; ++i)
    G[i - 1] = suffix[i].transpose() * E * prefix[i - 1].transpose();
  return G;
}

int zeta(const WeightVector& W, double zero_tol) {
  if (zero_tol <= 0) {
    double total = 0;
    for (const auto& Wi : W) total += Wi.squaredNorm();
    zero_tol = 1e-12 * (1.0 + std::sqrt(total));
  }
  int z = 0;
  for (const auto& Wi : W)
    if (Wi.norm() <= zero_tol) ++z;
  return z;
}

Eigen::VectorXd stack_weights(const LNNProblem& prob, const WeightVector& W) {
  check_shapes(prob, W);
  Eigen::VectorXd v(prob.stacked_dim());
  int off = 0;
  for (const auto& Wi : W) {
    for (Eigen::Index r = 0; r < Wi.rows(); ++r)
      for (Eigen::Index c = 0; c < Wi.cols(); ++c) v[off++] = Wi(r, c);
  }
  return v;
}

WeightVector unstack_weights(const LNNProblem& prob, const Eigen::VectorXd& v) {
  prob.validate();
  if (v.size() != prob.stacked_dim()) throw ShapeMismatch("unstack_weights: wrong length");
  WeightVector W;
  int off = 0;
  for (int i = 0; i < prob.depth(); ++i) {
    Eigen::MatrixXd Wi(prob.dims[i + 1], prob.dims[i]);
    for (Eigen::Index r = 0; r < Wi.rows(); ++r)
      for (Eigen::Index c = 0; c < Wi.cols(); ++c) Wi(r, c) = v[off++];
    W.push_back(std::move(Wi));
  }
  return W;
}

namespace {

using PolyMatrix = std::vector<std::vector<Polynomial>>;

PolyMatrix constant_matrix(const Eigen::MatrixXd& M, int dim) {
  PolyMatrix P(M.rows(), std::vector<Polynomial>(M.cols(), Polynomial(dim)));
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      if (M(r, c) != 0.0) P[r][c] = Polynomial::constant(dim, M(r, c));
  return P;
}

PolyMatrix poly_mat_mul(const PolyMatrix& A, const PolyMatrix& B, int dim) {
  const size_t n = A.size(), k = B.size(), m = B.empty() ? 0 : B[0].size();
  PolyMatrix C(n, std::vector<Polynomial>(m, Polynomial(dim)));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) {
      Polynomial acc(dim);
      for (size_t l = 0; l < k; ++l) acc = acc + A[i][l] * B[l][j];
      C[i][j] = std::move(acc);
    }
  return C;
}

// Offset of block i (0-based) in the stacked coordinate space.
int block_offset(const LNNProblem& prob, int i) {
  int off = 0;
  for (int j = 0; j < i; ++j) off += prob.dims[j] * prob.dims[j + 1];
  return off;
}

// Symbolic block: constants W_i plus (optionally) the H_i variables.
PolyMatrix symbolic_block(const LNNProblem& prob, int i, const Eigen::MatrixXd* Wi,
                          bool with_vars) {
  const int D = prob.stacked_dim();
  const int rows = prob.dims[i + 1], cols = prob.dims[i];
  PolyMatrix P(rows, std::vector<Polynomial>(cols, Polynomial(D)));
  const int off = block_offset(prob, i);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Polynomial e(D);
      if (Wi && (*Wi)(r, c) != 0.0) e = e + Polynomial::constant(D, (*Wi)(r, c));
      if (with_vars) e = e + Polynomial::variable(D, off + r * cols + c);
      P[r][c] = std::move(e);
    }
  return P;
}

}  // namespace

Polynomial loss_expansion(const LNNProblem& prob, const WeightVector& W) {
  check_shapes(prob, W);
  const int D = prob.stacked_dim();
  PolyMatrix M = constant_matrix(prob.X, D);
  for (int i = 0; i < prob.depth(); ++i)
    M = poly_mat_mul(symbolic_block(prob, i, &W[i], true), M, D);
  Polynomial f(D);
  for (size_t r = 0; r < M.size(); ++r)
    for (size_t c = 0; c < M[r].size(); ++c) {
      Polynomial e = M[r][c];
      if (prob.Y(r, c) != 0.0) e = e - Polynomial::constant(D, prob.Y(r, c));
      f = f + e * e * 0.5;
    }
  return f;
}

int kappa(const LNNProblem& prob, const WeightVector& W, int k_max) {
  if (k_max <= 0) k_max = 2 * prob.depth();
  k_max = std::max(k_max, 2);
  Polynomial e = loss_expansion(prob, W);
  VanishingOpts vo;
  vo.k_max = k_max;
  return vanishing_order(ObjectiveSpec::from_polynomial(std::move(e)),
                         Eigen::VectorXd::Zero(prob.stacked_dim()), vo);
}

HomogeneousPoly leading_poly(const LNNProblem& prob, const WeightVector& W) {
  check_shapes(prob, W);
  const int z = zeta(W);
  const int k = kappa(prob, W);
  if (z != k)
    throw HypothesisViolated("leading_poly: zeta(W) = " + std::to_string(z) +
                             " != kappa(W) = " + std::to_string(k));
  const int D = prob.stacked_dim();
  double wtotal = 0;
  for (const auto& Wi : W) wtotal += Wi.squaredNorm();
  const double ztol = 1e-12 * (1.0 + std::sqrt(wtotal));

  // tr(W_N ... H_{i_k} ... H_{i_1} ... W_1 X Y^T), variables in the zero blocks.
  PolyMatrix M = constant_matrix(prob.X * prob.Y.transpose(), D);
  for (int i = 0; i < prob.depth(); ++i) {
    bool zero_block = W[i].norm() <= ztol;
    M = poly_mat_mul(symbolic_block(prob, i, zero_block ? nullptr : &W[i], zero_block), M, D);
  }
  Polynomial P(D);
  for (size_t r = 0; r < M.size(); ++r) P = P + M[r][r];
  P = P * (-1.0);
  P.prune(0.0);
  if (P.empty())
    throw HypothesisViolated("leading_poly: trace form vanishes identically");
  return HomogeneousPoly(k, std::move(P));
}

double trace_hessian_check(const HomogeneousPoly& P, int n_samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  double worst = 0;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd v(P.dim());
    for (int i = 0; i < P.dim(); ++i) v[i] = gauss(rng);
    worst = std::max(worst, std::abs(P.hess(v).trace()));
  }
  return worst;
}

SaddleReport certify_weakly_strict(const LNNProblem& prob, const WeightVector& W,
                                   const SphereSearchOpts& opts) {
  check_shapes(prob, W);
  const int z = zeta(W);
  const int k = kappa(prob, W);
  if (z != k)
    throw HypothesisViolated("certify_weakly_strict: zeta != kappa");
  // Criticality gate happens inside classify_saddle on the exact expansion.
  Polynomial e = loss_expansion(prob, W);
  return classify_saddle(ObjectiveSpec::from_polynomial(std::move(e)),
                         Eigen::VectorXd::Zero(prob.stacked_dim()), opts);
}

LNNProblem LNNProblem::from_json(const nlohmann::json& j) {
  LNNProblem p;
  p.dims = j.at("dims").get<std::vector<int>>();
  if (p.dims.size() < 2) throw ConfigError("LNN JSON: dims needs at least two entries");
  auto read_mat = [&](const char* key, int rows) {
    std::vector<double> flat = j.at(key).get<std::vector<double>>();
    if (rows < 1 || flat.size() % rows != 0)
      throw ConfigError(std::string("LNN JSON: ") + key + " length incompatible with dims");
    int cols = static_cast<int>(flat.size()) / rows;
    Eigen::MatrixXd M(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) M(r, c) = flat[r * cols + c];  // row-major
    return M;
  };
  p.X = read_mat("X", p.dims.front());
  p.Y = read_mat("Y", p.dims.back());
  p.validate();
  return p;
}

nlohmann::json LNNProblem::to_json() const {
  auto write_mat = [](const Eigen::MatrixXd& M) {
    std::vector<double> flat;
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      for (Eigen::Index c = 0; c < M.cols(); ++c) flat.push_back(M(r, c));
    return flat;
  };
  return {{"dims", dims}, {"X", write_mat(X)}, {"Y", write_mat(Y)}};
}

}  // namespace saddle
