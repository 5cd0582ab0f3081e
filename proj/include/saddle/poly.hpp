#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "saddle/errors.hpp"

namespace saddle {

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& a) {
  int s = 0;
  for (int e : a) s += e;
  return s;
}

/// Sparse multivariate polynomial with real coefficients, stored as a
/// multi-index -> coefficient map (lexicographic key order, so iteration
/// is deterministic).
class Polynomial {
 public:
  explicit Polynomial(int dim) : dim_(dim) {
    if (dim < 1) throw DomainError("Polynomial: dim must be >= 1");
  }

  static Polynomial constant(int dim, double c);
  static Polynomial variable(int dim, int i);

  int dim() const { return dim_; }
  bool empty() const { return terms_.empty(); }
  const std::map<MultiIndex, double>& terms() const { return terms_; }

  void add_term(const MultiIndex& exps, double coef);

  double eval(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w) const;

  Polynomial derivative(int i) const;

  /// q(h) = p(center + h), by exact binomial expansion of every monomial.
  Polynomial shifted(const Eigen::VectorXd& center) const;

  /// Keep only the terms of total degree exactly k.
  Polynomial degree_part(int k) const;

  /// Drop coefficients with |c| <= tol.
  void prune(double tol);

  int min_total_degree() const;  // -1 if empty
  int max_total_degree() const;  // -1 if empty
  double max_abs_coef() const;

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;
  Polynomial operator*(double c) const;

 private:
  int dim_;
  std::map<MultiIndex, double> terms_;
};

/// Degree-k homogeneous polynomial (every stored multi-index sums to k).
class HomogeneousPoly {
 public:
  HomogeneousPoly(int degree, Polynomial poly);

  int degree() const { return degree_; }
  int dim() const { return poly_.dim(); }
  const Polynomial& poly() const { return poly_; }

  double eval(const Eigen::VectorXd& v) const { return poly_.eval(v); }
  Eigen::VectorXd grad(const Eigen::VectorXd& v) const { return poly_.gradient(v); }
  Eigen::MatrixXd hess(const Eigen::VectorXd& v) const { return poly_.hessian(v); }

 private:
  int degree_;
  Polynomial poly_;
};

}  // namespace saddle
