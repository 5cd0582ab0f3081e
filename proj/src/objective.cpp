#include "saddle/objective.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

namespace saddle {

ObjectiveSpec ObjectiveSpec::from_polynomial(Polynomial p) {
  int d = p.dim();
  return ObjectiveSpec(d, std::variant<Polynomial, BlackBox>(std::move(p)));
}

ObjectiveSpec ObjectiveSpec::black_box(int dim, BlackBox bb) {
  if (dim < 1) throw DomainError("ObjectiveSpec: dim must be >= 1");
  if (!bb.value) throw DomainError("ObjectiveSpec: black box needs a value callback");
  if (!(bb.h_fd > 0)) throw DomainError("ObjectiveSpec: h_fd must be > 0");
  return ObjectiveSpec(dim, std::variant<Polynomial, BlackBox>(std::move(bb)));
}

const Polynomial& ObjectiveSpec::polynomial() const {
  if (!is_polynomial()) throw DomainError("ObjectiveSpec: not a polynomial objective");
  return std::get<Polynomial>(impl_);
}

double ObjectiveSpec::eval(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("ObjectiveSpec::eval: dimension mismatch");
  double v;
  if (is_polynomial())
    v = std::get<Polynomial>(impl_).eval(w);
  else
    v = std::get<BlackBox>(impl_).value(w);
  if (!std::isfinite(v)) throw NumericalError("ObjectiveSpec::eval: non-finite value");
  return v;
}

Eigen::VectorXd ObjectiveSpec::gradient(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("ObjectiveSpec::gradient: dimension mismatch");
  Eigen::VectorXd g;
  if (is_polynomial()) {
    g = std::get<Polynomial>(impl_).gradient(w);
  } else {
    const BlackBox& bb = std::get<BlackBox>(impl_);
    if (bb.gradient) {
      g = bb.gradient(w);
      if (g.size() != dim_) throw ShapeMismatch("black box gradient: wrong size");
    } else {
      g.resize(dim_);
      Eigen::VectorXd wp = w;
      for (int i = 0; i < dim_; ++i) {
        wp[i] = w[i] + bb.h_fd;
        double fp = bb.value(wp);
        wp[i] = w[i] - bb.h_fd;
        double fm = bb.value(wp);
        wp[i] = w[i];
        g[i] = (fp - fm) / (2 * bb.h_fd);
      }
    }
  }
  if (!g.allFinite()) throw NumericalError("ObjectiveSpec::gradient: non-finite entries");
  return g;
}

Eigen::MatrixXd ObjectiveSpec::hessian(const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw ShapeMismatch("ObjectiveSpec::hessian: dimension mismatch");
  Eigen::MatrixXd H;
  if (is_polynomial()) {
    H = std::get<Polynomial>(impl_).hessian(w);
  } else {
    const BlackBox& bb = std::get<BlackBox>(impl_);
    const double h = bb.h_fd;
    H.resize(dim_, dim_);
    // Central differences of the gradient (exact callback if present).
    Eigen::VectorXd wp = w;
    for (int i = 0; i < dim_; ++i) {
      wp[i] = w[i] + h;
      Eigen::VectorXd gp = gradient(wp);
      wp[i] = w[i] - h;
      Eigen::VectorXd gm = gradient(wp);
      wp[i] = w[i];
      H.col(i) = (gp - gm) / (2 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
  }
  if (!H.allFinite()) throw NumericalError("ObjectiveSpec::hessian: non-finite entries");
  return H;
}

ObjectiveSpec ObjectiveSpec::from_json(const nlohmann::json& j) {
  if (!j.contains("dim") || !j.contains("terms"))
    throw ConfigError("objective JSON needs \"dim\" and \"terms\"");
  int d = j.at("dim").get<int>();
  Polynomial p(d);
  for (const auto& t : j.at("terms")) {
    MultiIndex a = t.at("exps").get<std::vector<int>>();
    double c = t.at("coef").get<double>();
    p.add_term(a, c);
  }
  return from_polynomial(std::move(p));
}

nlohmann::json ObjectiveSpec::to_json() const {
  const Polynomial& p = polynomial();
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [a, c] : p.terms())
    terms.push_back({{"exps", a}, {"coef", c}});
  return {{"dim", dim_}, {"terms", terms}};
}

namespace {

// Probe directions for black-box order detection: +-e_i plus 10 fixed
// pseudo-random unit vectors.
std::vector<Eigen::VectorXd> probe_directions(int d) {
  std::vector<Eigen::VectorXd> dirs;
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937_64 rng(0x5eedu);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 10; ++i) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = gauss(rng);
    double n = v.norm();
    if (n < 1e-12) {
      --i;
      continue;
    }
    dirs.push_back(v / n);
  }
  return dirs;
}

// Lowest nonvanishing power of t in f(w* + t e) - f(w*), from a least-squares
// fit in the scaled variable s = t/h; -1 if everything is below tolerance.
int lowest_power_along(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                       const Eigen::VectorXd& e, int k_max, double tol) {
  const double h = 0.3;
  const int n_pts = 2 * (k_max + 2);
  Eigen::MatrixXd V(n_pts, k_max);
  Eigen::VectorXd y(n_pts);
  const double f0 = obj.eval(w_star);
  double scale = 1e-300;
  for (int j = 0; j < n_pts; ++j) {
    // symmetric nodes in [-1,1], no zero
    double s = -1.0 + 2.0 * (j + 0.5) / n_pts;
    double g = obj.eval(w_star + (h * s) * e) - f0;
    y[j] = g;
    scale = std::max(scale, std::abs(g));
    double sp = s;
    for (int m = 0; m < k_max; ++m) {
      V(j, m) = sp;  // s^{m+1}
      sp *= s;
    }
  }
  Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
  for (int m = 0; m < k_max; ++m)
    if (std::abs(c[m]) > tol * (scale + std::abs(f0))) return m + 1;
  return -1;
}

}  // namespace

int vanishing_order(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                    const VanishingOpts& opts) {
  if (opts.k_max < 2) throw DomainError("vanishing_order: k_max must be >= 2");
  if (w_star.size() != obj.dim()) throw ShapeMismatch("vanishing_order: dimension mismatch");

  if (obj.is_polynomial()) {
    Polynomial q = obj.polynomial().shifted(w_star);
    // Discard the constant term and exact-arithmetic dust from the shift.
    Polynomial nc(q.dim());
    double scale = std::max(q.max_abs_coef(), 1.0);
    for (const auto& [a, c] : q.terms())
      if (total_degree(a) > 0 && std::abs(c) > 1e-12 * scale) nc.add_term(a, c);
    int m = nc.min_total_degree();
    if (m < 0 || m > opts.k_max)
      throw OrderExceedsCap("vanishing_order: no nonvanishing term up to k_max");
    return m;
  }

  int best = -1;
  for (const auto& e : probe_directions(obj.dim())) {
    int m = lowest_power_along(obj, w_star, e, opts.k_max, opts.tol);
    if (m > 0 && (best < 0 || m < best)) best = m;
  }
  if (best < 0) throw OrderExceedsCap("vanishing_order: no nonvanishing term up to k_max");
  return best;
}

namespace {

// k-th order mixed partial of a black box by nested central differences.
double mixed_partial_fd(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                        const MultiIndex& a, double h) {
  const int d = obj.dim();
  // Tensor-product central-difference stencil.
  std::vector<std::pair<Eigen::VectorXd, double>> stencil{{w_star, 1.0}};
  for (int i = 0; i < d; ++i) {
    int e = a[i];
    if (e == 0) continue;
    std::vector<std::pair<Eigen::VectorXd, double>> next;
    for (const auto& [pt, wgt] : stencil) {
      double binom = 1.0;
      for (int l = 0; l <= e; ++l) {
        Eigen::VectorXd np = pt;
        np[i] = pt[i] + (0.5 * e - l) * h;
        double sign = (l % 2 == 0) ? 1.0 : -1.0;
        next.emplace_back(np, wgt * sign * binom);
        binom = binom * (e - l) / (l + 1);
      }
    }
    stencil = std::move(next);
  }
  double s = 0.0;
  for (const auto& [pt, wgt] : stencil) s += wgt * obj.eval(pt);
  return s / std::pow(h, total_degree(a));
}

void enumerate_multi_indices(int d, int k, MultiIndex& cur, int pos, int left,
                             std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    cur[pos] = left;
    out.push_back(cur);
    return;
  }
  for (int e = left; e >= 0; --e) {
    cur[pos] = e;
    enumerate_multi_indices(d, k, cur, pos + 1, left - e, out);
  }
}

}  // namespace

std::pair<int, HomogeneousPoly> leading_term(const ObjectiveSpec& obj,
                                             const Eigen::VectorXd& w_star,
                                             const VanishingOpts& opts) {
  int k = vanishing_order(obj, w_star, opts);

  if (obj.is_polynomial()) {
    Polynomial q = obj.polynomial().shifted(w_star).degree_part(k);
    q.prune(1e-12 * std::max(q.max_abs_coef(), 1.0));
    return {k, HomogeneousPoly(k, std::move(q))};
  }

  // Black box: Taylor coefficient of multi-index a is d^a f / a!.
  const int d = obj.dim();
  std::vector<MultiIndex> idx;
  MultiIndex cur(d, 0);
  enumerate_multi_indices(d, k, cur, 0, k, idx);
  const double h = std::pow(1e-10, 1.0 / (k + 2));
  Polynomial P(d);
  double scale = 1e-300;
  std::vector<double> coefs(idx.size());
  for (size_t t = 0; t < idx.size(); ++t) {
    double fact = 1.0;
    for (int e : idx[t])
      for (int j = 2; j <= e; ++j) fact *= j;
    coefs[t] = mixed_partial_fd(obj, w_star, idx[t], h) / fact;
    scale = std::max(scale, std::abs(coefs[t]));
  }
  for (size_t t = 0; t < idx.size(); ++t)
    if (std::abs(coefs[t]) > opts.tol * scale) P.add_term(idx[t], coefs[t]);
  if (P.empty()) throw OrderExceedsCap("leading_term: degree-k coefficients all below tolerance");
  return {k, HomogeneousPoly(k, std::move(P))};
}

}  // namespace saddle
