#include "saddle/sphere.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "saddle/kernels.hpp"

namespace saddle {

double default_crit_tol(const HomogeneousPoly& P) {
  return 1e-10 * (1.0 + P.poly().max_abs_coef());
}

Eigen::VectorXd sphere_grad(const HomogeneousPoly& P, const Eigen::VectorXd& u) {
  if (std::abs(u.norm() - 1.0) > 1e-9) throw DomainError("sphere_grad: point not on sphere");
  Eigen::VectorXd g = P.grad(u);
  return g - (P.degree() * P.eval(u)) * u;
}

Eigen::MatrixXd tangent_basis(const Eigen::VectorXd& u) {
  const int d = static_cast<int>(u.size());
  int drop = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(u[i]) > std::abs(u[drop])) drop = i;
  Eigen::MatrixXd Z(d, d - 1);
  int col = 0;
  for (int i = 0; i < d; ++i) {
    if (i == drop) continue;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
    z[i] = 1.0;
    z -= z.dot(u) * u;
    for (int j = 0; j < col; ++j) z -= z.dot(Z.col(j)) * Z.col(j);
    double n = z.norm();
    if (n < 1e-12) throw NumericalError("tangent_basis: degenerate Gram-Schmidt");
    Z.col(col++) = z / n;
  }
  return Z;
}

Eigen::MatrixXd sphere_hess(const HomogeneousPoly& P, const Eigen::VectorXd& u,
                            double crit_tol) {
  if (crit_tol <= 0) crit_tol = default_crit_tol(P);
  const double res = sphere_grad(P, u).norm();
  if (res > crit_tol)
    throw NotCritical("sphere_hess: point is not critical (residual " + std::to_string(res) + ")");
  Eigen::MatrixXd Z = tangent_basis(u);
  const int k = P.degree();
  Eigen::MatrixXd H = Z.transpose() * P.hess(u) * Z;
  H -= (k * P.eval(u)) * Eigen::MatrixXd::Identity(Z.cols(), Z.cols());
  return 0.5 * (H + H.transpose());
}

namespace {

// Full-sphere Riemannian Hessian of p (valid away from critical points too);
// coincides with sphere_hess at critical points.
Eigen::MatrixXd tangent_newton_matrix(const HomogeneousPoly& P, const Eigen::VectorXd& u,
                                      const Eigen::MatrixXd& Z) {
  Eigen::MatrixXd H = Z.transpose() * P.hess(u) * Z;
  H -= (P.degree() * P.eval(u)) * Eigen::MatrixXd::Identity(Z.cols(), Z.cols());
  return H;
}

struct Candidate {
  Eigen::VectorXd u;
  double residual;
  bool ok = false;
};

// One start: projected-gradient flow on sign*p (descent), then Newton polish.
// sign = 0 skips the descent phase (pure Newton), which is what reaches the
// saddle-type critical points that descent on +/-p actively avoids.
Candidate run_start(const HomogeneousPoly& P, Eigen::VectorXd u, double sign, int max_iter,
                    double crit_tol) {
  const double scale = P.poly().max_abs_coef() + 1.0;
  double step = 0.2;
  for (int it = 0; sign != 0.0 && it < max_iter; ++it) {
    Eigen::VectorXd g = sphere_grad(P, u);
    if (g.norm() <= 1e-4 * scale) break;
    double pv = sign * P.eval(u);
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd un = (u - step * sign * g).normalized();
      if (sign * P.eval(un) < pv) {
        u = un;
        step = std::min(step * 1.5, 1.0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  // Newton polish in the tangent chart.
  Candidate c;
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd g = sphere_grad(P, u);
    double res = g.norm();
    if (res <= crit_tol) {
      c.u = u;
      c.residual = res;
      c.ok = true;
      return c;
    }
    Eigen::MatrixXd Z = tangent_basis(u);
    Eigen::MatrixXd H = tangent_newton_matrix(P, u, Z);
    Eigen::VectorXd gt = Z.transpose() * g;
    Eigen::VectorXd delta =
        H.completeOrthogonalDecomposition().solve(-gt);
    double dn = delta.norm();
    if (!delta.allFinite() || dn < 1e-17) break;
    if (dn > 0.5) delta *= 0.5 / dn;
    u = (u + Z * delta).normalized();
  }
  Eigen::VectorXd g = sphere_grad(P, u);
  c.u = u;
  c.residual = g.norm();
  c.ok = c.residual <= crit_tol;
  return c;
}

double geodesic_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = std::clamp(a.dot(b), -1.0, 1.0);
  return std::acos(d);
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

SphereCritPoint make_crit_point(const HomogeneousPoly& P, const Eigen::VectorXd& u,
                                double residual, double lambda_tol, double crit_tol) {
  SphereCritPoint cp;
  cp.u = u;
  cp.value = P.eval(u);
  cp.grad_residual = residual;
  Eigen::MatrixXd H = sphere_hess(P, u, std::max(crit_tol, residual * 1.0001));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  cp.tangent_eigs.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double l : cp.tangent_eigs) {
    if (l < -lambda_tol)
      ++cp.morse_index;
    else if (std::abs(l) <= lambda_tol)
      ++cp.nullity;
  }
  return cp;
}

std::vector<Eigen::VectorXd> sphere_sample(int d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(n);
  while (static_cast<int>(pts.size()) < n) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v[i] = gauss(rng);
    double nn = v.norm();
    if (nn < 1e-9) continue;
    pts.push_back(v / nn);
  }
  return pts;
}

}  // namespace

std::vector<SphereCritPoint> find_crit_points(const HomogeneousPoly& P,
                                              const SphereSearchOpts& opts,
                                              bool* continuum_flag) {
  const int d = P.dim();
  if (d < 2) throw DomainError("find_crit_points: need dim >= 2");
  const int n_starts = opts.n_starts > 0 ? opts.n_starts : 200 * d;
  const double crit_tol = opts.crit_tol > 0 ? opts.crit_tol : default_crit_tol(P);

  // Dense p-sample: constant-p detection (and cheap range information).
  // Uses the batch kernels; the grid in the tests is an independent oracle.
  {
    const int n_dense = 2048 * d;
    auto dense = sphere_sample(d, n_dense, opts.seed ^ 0x9e3779b97f4a7c15ull);
    Eigen::MatrixXd pts(d, n_dense);
    for (int j = 0; j < n_dense; ++j) pts.col(j) = dense[j];
    Eigen::VectorXd vals = kernels::eval_batch(P.poly(), pts);
    double lo = vals.minCoeff(), hi = vals.maxCoeff();
    if (hi - lo <= 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)))) {
      if (continuum_flag) *continuum_flag = true;
      // p is constant: report one representative with zero tangent Hessian data.
      std::vector<SphereCritPoint> out;
      Eigen::VectorXd e0 = Eigen::VectorXd::Zero(d);
      e0[0] = 1.0;
      out.push_back(make_crit_point(P, e0, sphere_grad(P, e0).norm(), opts.lambda_tol, 1e300));
      return out;
    }
  }

  auto starts = sphere_sample(d, n_starts, opts.seed);
  std::vector<Candidate> cands(3 * n_starts);
  auto work = [&](int lo, int hi) {
    for (int s = lo; s < hi; ++s) {
      cands[3 * s] = run_start(P, starts[s], +1.0, opts.max_iter, crit_tol);
      cands[3 * s + 1] = run_start(P, starts[s], -1.0, opts.max_iter, crit_tol);
      cands[3 * s + 2] = run_start(P, starts[s], 0.0, opts.max_iter, crit_tol);
    }
  };
  int nthreads = std::max(1, opts.threads);
  if (nthreads == 1) {
    work(0, n_starts);
  } else {
    std::vector<std::thread> pool;
    int chunk = (n_starts + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      int lo = t * chunk, hi = std::min(n_starts, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  int converged = 0;
  std::vector<Candidate> good;
  for (auto& c : cands)
    if (c.ok) {
      ++converged;
      good.push_back(c);
    }
  if (converged < (3 * n_starts) / 10)
    throw SearchBudgetExhausted("find_crit_points: fewer than 10% of starts converged");

  // Deterministic dedup: sort lexicographically, then greedy geodesic merge
  // keeping the best residual per cluster.
  std::sort(good.begin(), good.end(),
            [](const Candidate& a, const Candidate& b) { return lex_less(a.u, b.u); });
  std::vector<Candidate> reps;
  std::vector<int> cluster_size;
  for (const auto& c : good) {
    bool merged = false;
    for (size_t i = 0; i < reps.size(); ++i) {
      if (geodesic_dist(c.u, reps[i].u) < opts.dedup_dist) {
        if (c.residual < reps[i].residual) reps[i] = c;
        ++cluster_size[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      reps.push_back(c);
      cluster_size.push_back(1);
    }
  }

  if (continuum_flag && static_cast<int>(reps.size()) > n_starts / 2) *continuum_flag = true;

  std::vector<SphereCritPoint> out;
  out.reserve(reps.size());
  for (const auto& c : reps)
    out.push_back(make_crit_point(P, c.u, c.residual, opts.lambda_tol, crit_tol));
  std::sort(out.begin(), out.end(),
            [](const SphereCritPoint& a, const SphereCritPoint& b) { return lex_less(a.u, b.u); });
  return out;
}

SaddleReport classify_saddle(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                             const SphereSearchOpts& opts, const VanishingOpts& vopts) {
  // Criticality gate on f itself.
  double f_scale = 1.0;
  if (obj.is_polynomial()) f_scale += obj.polynomial().max_abs_coef();
  const double f_crit_tol = opts.crit_tol > 0 ? opts.crit_tol : 1e-10 * f_scale;
  const double gnorm = obj.gradient(w_star).norm();
  if (gnorm > f_crit_tol)
    throw NotCritical("classify_saddle: w* is not critical (|grad f| = " + std::to_string(gnorm) +
                      ")");

  auto [k, P] = leading_term(obj, w_star, vopts);

  SaddleReport rep;
  rep.k = k;
  bool continuum = false;
  rep.crit_points = find_crit_points(P, opts, &continuum);
  rep.continuum = continuum;

  const double p_tol = opts.p_tol;
  rep.weakly_strict = true;
  for (const auto& cp : rep.crit_points) {
    if (cp.value >= -p_tol && cp.morse_index < 1) {
      rep.weakly_strict = false;
      rep.violation = cp;
      break;
    }
  }

  double pmin = 1e300, pmax = -1e300;
  for (const auto& cp : rep.crit_points) {
    pmin = std::min(pmin, cp.value);
    pmax = std::max(pmax, cp.value);
  }
  rep.is_saddle = (pmin < -p_tol) && (pmax > p_tol);
  if (continuum) rep.is_saddle = false;

  // Tamed verdict: nondegeneracy certifies isolation; otherwise require the
  // critical set to be stable under a doubled search resolution.
  if (continuum) {
    rep.tamed = false;
    rep.tamed_confident = false;
  } else {
    bool all_nondegenerate = true;
    for (const auto& cp : rep.crit_points)
      if (cp.nullity != 0) all_nondegenerate = false;
    if (all_nondegenerate) {
      rep.tamed = true;
      rep.tamed_confident = true;
    } else {
      SphereSearchOpts o2 = opts;
      o2.n_starts = (opts.n_starts > 0 ? opts.n_starts : 200 * P.dim()) * 2;
      o2.seed = opts.seed ^ 0xabcdef123456ull;
      bool cont2 = false;
      auto pts2 = find_crit_points(P, o2, &cont2);
      bool stable = !cont2 && pts2.size() == rep.crit_points.size();
      if (stable) {
        for (size_t i = 0; i < pts2.size(); ++i) {
          double best = 1e300;
          for (const auto& cp : rep.crit_points)
            best = std::min(best, (pts2[i].u - cp.u).norm());
          if (best > opts.dedup_dist) {
            stable = false;
            break;
          }
        }
      }
      rep.tamed = stable;
      rep.tamed_confident = false;
    }
  }
  return rep;
}

nlohmann::json report_to_json(const SaddleReport& rep) {
  nlohmann::json j;
  j["k"] = rep.k;
  j["is_saddle"] = rep.is_saddle;
  j["weakly_strict"] = rep.weakly_strict;
  j["tamed"] = rep.tamed;
  j["tamed_confident"] = rep.tamed_confident;
  j["continuum"] = rep.continuum;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& cp : rep.crit_points) {
    nlohmann::json p;
    p["u"] = std::vector<double>(cp.u.data(), cp.u.data() + cp.u.size());
    p["value"] = cp.value;
    p["grad_residual"] = cp.grad_residual;
    p["tangent_eigs"] = cp.tangent_eigs;
    p["morse_index"] = cp.morse_index;
    p["nullity"] = cp.nullity;
    pts.push_back(p);
  }
  j["crit_points"] = pts;
  if (rep.violation) {
    nlohmann::json p;
    p["u"] = std::vector<double>(rep.violation->u.data(),
                                 rep.violation->u.data() + rep.violation->u.size());
    p["value"] = rep.violation->value;
    p["morse_index"] = rep.violation->morse_index;
    j["violation"] = p;
  }
  return j;
}

}  // namespace saddle
