#include "saddle/poly.hpp"

#include <cmath>

namespace saddle {

Polynomial Polynomial::constant(int dim, double c) {
  Polynomial p(dim);
  p.add_term(MultiIndex(dim, 0), c);
  return p;
}

Polynomial Polynomial::variable(int dim, int i) {
  Polynomial p(dim);
  MultiIndex a(dim, 0);
  a[i] = 1;
  p.add_term(a, 1.0);
  return p;
}

void Polynomial::add_term(const MultiIndex& exps, double coef) {
  if (static_cast<int>(exps.size()) != dim_)
    throw ShapeMismatch("Polynomial::add_term: multi-index length != dim");
  for (int e : exps)
    if (e < 0) throw DomainError("Polynomial::add_term: negative exponent");
  if (!std::isfinite(coef)) throw NumericalError("Polynomial::add_term: non-finite coefficient");
  if (coef == 0.0) return;
  auto it = terms_.find(exps);
  if (it == terms_.end()) {
    terms_.emplace(exps, coef);
  } else {
    it->second += coef;
    if (it->second == 0.0) terms_.erase(it);
  }
}

namespace {
inline double int_pow(double x, int e) {
  double r = 1.0;
  while (e-- > 0) r *= x;
  return r;
}
}  // namespace

double Polynomial::eval(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("Polynomial::eval: point dimension mismatch");
  double s = 0.0;
  for (const auto& [a, c] : terms_) {
    double m = c;
    for (int i = 0; i < dim_; ++i)
      if (a[i] != 0) m *= int_pow(w[i], a[i]);
    s += m;
  }
  if (!std::isfinite(s)) throw NumericalError("Polynomial::eval: non-finite result");
  return s;
}

Eigen::VectorXd Polynomial::gradient(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("Polynomial::gradient: point dimension mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  for (const auto& [a, c] : terms_) {
    for (int i = 0; i < dim_; ++i) {
      if (a[i] == 0) continue;
      double m = c * a[i] * int_pow(w[i], a[i] - 1);
      for (int j = 0; j < dim_; ++j)
        if (j != i && a[j] != 0) m *= int_pow(w[j], a[j]);
      g[i] += m;
    }
  }
  if (!g.allFinite()) throw NumericalError("Polynomial::gradient: non-finite result");
  return g;
}

Eigen::MatrixXd Polynomial::hessian(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("Polynomial::hessian: point dimension mismatch");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& [a, c] : terms_) {
    for (int i = 0; i < dim_; ++i) {
      if (a[i] == 0) continue;
      // diagonal
      if (a[i] >= 2) {
        double m = c * a[i] * (a[i] - 1) * int_pow(w[i], a[i] - 2);
        for (int j = 0; j < dim_; ++j)
          if (j != i && a[j] != 0) m *= int_pow(w[j], a[j]);
        H(i, i) += m;
      }
      for (int j = i + 1; j < dim_; ++j) {
        if (a[j] == 0) continue;
        double m = c * a[i] * a[j] * int_pow(w[i], a[i] - 1) * int_pow(w[j], a[j] - 1);
        for (int l = 0; l < dim_; ++l)
          if (l != i && l != j && a[l] != 0) m *= int_pow(w[l], a[l]);
        H(i, j) += m;
        H(j, i) += m;
      }
    }
  }
  if (!H.allFinite()) throw NumericalError("Polynomial::hessian: non-finite result");
  return H;
}

Polynomial Polynomial::derivative(int i) const {
  Polynomial q(dim_);
  for (const auto& [a, c] : terms_) {
    if (a[i] == 0) continue;
    MultiIndex b = a;
    b[i] -= 1;
    q.add_term(b, c * a[i]);
  }
  return q;
}

Polynomial Polynomial::shifted(const Eigen::VectorXd& center) const {
  if (center.size() != dim_) throw ShapeMismatch("Polynomial::shifted: center dimension mismatch");
  // Binomial tables up to the needed exponent.
  int emax = 0;
  for (const auto& [a, c] : terms_)
    for (int e : a) emax = std::max(emax, e);
  std::vector<std::vector<double>> binom(emax + 1, std::vector<double>(emax + 1, 0.0));
  for (int n = 0; n <= emax; ++n) {
    binom[n][0] = 1.0;
    for (int k = 1; k <= n; ++k)
      binom[n][k] = binom[n - 1][k - 1] + (k <= n - 1 ? binom[n - 1][k] : 0.0);
  }
  Polynomial q(dim_);
  for (const auto& [a, c] : terms_) {
    // Expand c * prod_i (center_i + h_i)^{a_i} recursively over coordinates.
    std::vector<std::pair<MultiIndex, double>> partial{{MultiIndex(dim_, 0), c}};
    for (int i = 0; i < dim_; ++i) {
      if (a[i] == 0) continue;
      std::vector<std::pair<MultiIndex, double>> next;
      next.reserve(partial.size() * (a[i] + 1));
      for (const auto& [b, coef] : partial) {
        for (int k = 0; k <= a[i]; ++k) {
          MultiIndex nb = b;
          nb[i] = k;
          next.emplace_back(std::move(nb), coef * binom[a[i]][k] * int_pow(center[i], a[i] - k));
        }
      }
      partial = std::move(next);
    }
    for (const auto& [b, coef] : partial) q.add_term(b, coef);
  }
  return q;
}

Polynomial Polynomial::degree_part(int k) const {
  Polynomial q(dim_);
  for (const auto& [a, c] : terms_)
    if (total_degree(a) == k) q.add_term(a, c);
  return q;
}

void Polynomial::prune(double tol) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) <= tol)
      it = terms_.erase(it);
    else
      ++it;
  }
}

int Polynomial::min_total_degree() const {
  int m = -1;
  for (const auto& [a, c] : terms_) {
    int d = total_degree(a);
    if (m < 0 || d < m) m = d;
  }
  return m;
}

int Polynomial::max_total_degree() const {
  int m = -1;
  for (const auto& [a, c] : terms_) m = std::max(m, total_degree(a));
  return m;
}

double Polynomial::max_abs_coef() const {
  double m = 0.0;
  for (const auto& [a, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  if (o.dim_ != dim_) throw ShapeMismatch("Polynomial::+: dimension mismatch");
  Polynomial q = *this;
  for (const auto& [a, c] : o.terms_) q.add_term(a, c);
  return q;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  if (o.dim_ != dim_) throw ShapeMismatch("Polynomial::-: dimension mismatch");
  Polynomial q = *this;
  for (const auto& [a, c] : o.terms_) q.add_term(a, -c);
  return q;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  if (o.dim_ != dim_) throw ShapeMismatch("Polynomial::*: dimension mismatch");
  Polynomial q(dim_);
  for (const auto& [a, ca] : terms_) {
    for (const auto& [b, cb] : o.terms_) {
      MultiIndex s(dim_);
      for (int i = 0; i < dim_; ++i) s[i] = a[i] + b[i];
      q.add_term(s, ca * cb);
    }
  }
  return q;
}

Polynomial Polynomial::operator*(double c) const {
  Polynomial q(dim_);
  for (const auto& [a, ca] : terms_) q.add_term(a, ca * c);
  return q;
}

HomogeneousPoly::HomogeneousPoly(int degree, Polynomial poly)
    : degree_(degree), poly_(std::move(poly)) {
  if (degree < 2) throw DomainError("HomogeneousPoly: degree must be >= 2");
  if (poly_.empty()) throw DomainError("HomogeneousPoly: zero polynomial");
  for (const auto& [a, c] : poly_.terms())
    if (total_degree(a) != degree)
      throw DomainError("HomogeneousPoly: term of wrong total degree");
}

}  // namespace saddle
