#include "saddle/centerstable.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

namespace saddle::cstable {

double LinearSplitting::norm1(const Eigen::VectorXd& x) const {
  double best = x.norm();
  Eigen::VectorXd z = x;
  double scale = 1.0;
  for (int n = 1; n <= n_trunc; ++n) {
    z = T * z;
    scale /= theta;
    best = std::max(best, scale * z.norm());
  }
  return best;
}

double LinearSplitting::norm2(const Eigen::VectorXd& y) const {
  double best = y.norm();
  Eigen::VectorXd z = y;
  double scale = 1.0;
  for (int n = 1; n <= n_trunc; ++n) {
    z = Tinv * z;
    scale *= mu;
    best = std::max(best, scale * z.norm());
  }
  return best;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> LinearSplitting::split(
    const Eigen::VectorXd& z) const {
  Eigen::VectorXd c = coord_inv * z;
  return {c.head(dim1()), c.tail(dim2())};
}

Eigen::VectorXd LinearSplitting::ambient(const Eigen::VectorXd& xc,
                                         const Eigen::VectorXd& yc) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(m());
  if (xc.size() > 0) z += basis1 * xc;
  if (yc.size() > 0) z += basis2 * yc;
  return z;
}

double LinearSplitting::prod_norm(const Eigen::VectorXd& z) const {
  auto [xc, yc] = split(z);
  double n1 = xc.size() > 0 ? norm1(basis1 * xc) : 0.0;
  double n2 = yc.size() > 0 ? norm2(basis2 * yc) : 0.0;
  return std::max(n1, n2);
}

LinearSplitting split_spectrum(const Eigen::MatrixXd& T, double theta_frac, double rho_frac,
                               int n_trunc) {
  const int m = static_cast<int>(T.rows());
  if (T.cols() != m) throw ShapeMismatch("split_spectrum: T must be square");
  Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
  if (!lu.isInvertible()) throw DomainError("split_spectrum: T is singular");

  Eigen::EigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) throw NumericalError("split_spectrum: eigensolver failed");
  const auto& evals = es.eigenvalues();
  const auto& evecs = es.eigenvectors();

  std::vector<Eigen::VectorXd> b1, b2;
  double min_unstable = 1e300;
  for (int i = 0; i < m; ++i) {
    std::complex<double> lam = evals[i];
    if (lam.imag() < 0) continue;  // conjugate partner handled with imag > 0
    bool stable = std::abs(lam) <= 1.0;
    if (!stable) min_unstable = std::min(min_unstable, std::abs(lam));
    auto& dst = stable ? b1 : b2;
    if (std::abs(lam.imag()) < 1e-14 * (1.0 + std::abs(lam.real()))) {
      dst.push_back(evecs.col(i).real());
    } else {
      dst.push_back(evecs.col(i).real());
      dst.push_back(evecs.col(i).imag());
    }
  }
  if (b2.empty()) throw NoUnstableDirection("split_spectrum: all |lambda| <= 1");

  auto orthonormalize = [m](const std::vector<Eigen::VectorXd>& cols) {
    Eigen::MatrixXd B(m, cols.size());
    for (size_t i = 0; i < cols.size(); ++i) B.col(i) = cols[i];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(B);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, cols.size());
    return Q;
  };

  LinearSplitting s;
  s.T = T;
  s.Tinv = lu.inverse();
  s.basis2 = orthonormalize(b2);
  s.basis1 = b1.empty() ? Eigen::MatrixXd(m, 0) : orthonormalize(b1);
  s.n_trunc = n_trunc;

  Eigen::MatrixXd combined(m, m);
  combined << s.basis1, s.basis2;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(combined, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues().minCoeff() < 1e-8)
    throw IllConditioned("split_spectrum: subspace angle below 1e-8");
  s.coord_inv = combined.inverse();

  // mu^2 = smallest unstable modulus: geometric midpoint of the gap (1, min|lambda|).
  s.mu = std::sqrt(min_unstable);
  s.theta = std::pow(s.mu, theta_frac);
  s.rho = std::pow(s.mu, rho_frac);

  // Operator norms in the adapted product norm, by sampling.
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss;
  double nT = 0, nTinv = 0;
  for (int it = 0; it < 4000; ++it) {
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z[i] = gauss(rng);
    double nz = s.prod_norm(z);
    if (nz < 1e-300) continue;
    nT = std::max(nT, s.prod_norm(T * z) / nz);
    nTinv = std::max(nTinv, s.prod_norm(s.Tinv * z) / nz);
  }
  s.opnorm_T = 1.05 * nT;
  s.opnorm_Tinv = 1.05 * nTinv;
  return s;
}

double eta_budget(const LinearSplitting& s) {
  const double th_i = 1.0 / s.theta, mu_i = 1.0 / s.mu, rho_i = 1.0 / s.rho;
  const double q = 2.0 * s.opnorm_Tinv * s.opnorm_Tinv;  // eta_hat = q * eta
  double eta = 1.0 / (2.0 * s.opnorm_Tinv);
  eta = std::min(eta, 1.0 / (s.opnorm_T * q));
  eta = std::min(eta, (th_i - mu_i) / (3.0 * q));
  eta = std::min(eta, (th_i - rho_i) / q);
  eta = std::min(eta, s.rho - s.theta);
  eta = std::min(eta, s.mu - s.rho);
  return 0.9 * eta;
}

Eigen::VectorXd invert_map(const GraphProblem& p, const Eigen::VectorXd& z0) {
  const LinearSplitting& s = p.splitting;
  if (p.lip_dev * s.opnorm_Tinv >= 0.5)
    throw DomainError("invert_map: lip_dev * |T^-1| must be < 1/2");
  Eigen::VectorXd Tinv_z0 = s.Tinv * z0;
  Eigen::VectorXd z = Tinv_z0;
  double prev = 1e300;
  int grow = 0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd znew = z - s.Tinv * p.f(z) + Tinv_z0;
    double delta = s.prod_norm(znew - z);
    z = znew;
    if (delta <= p.invert_tol * (1.0 + s.prod_norm(z0))) break;
    if (delta > prev * 1.0000001) {
      if (++grow > 10) throw ContractionFailure("invert_map: iterates diverge");
    } else {
      grow = 0;
    }
    prev = delta;
  }
  if ((p.f(z) - z0).norm() > 1e-10 * (1.0 + z0.norm()))
    throw ContractionFailure("invert_map: residual check failed");
  return z;
}

std::size_t GraphFunction::n_nodes() const {
  std::size_t n = 1;
  for (const auto& ax : axes) n *= ax.size();
  return n;
}

std::size_t GraphFunction::node_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) flat = flat * axes[a].size() + idx[a];
  return flat;
}

Eigen::VectorXd GraphFunction::node_coord(std::size_t flat) const {
  Eigen::VectorXd x(dim1());
  for (int a = dim1() - 1; a >= 0; --a) {
    std::size_t n = axes[a].size();
    x[a] = axes[a][flat % n];
    flat /= n;
  }
  return x;
}

Eigen::VectorXd GraphFunction::eval(const Eigen::VectorXd& xc) const {
  const int d1 = dim1();
  if (d1 == 0) return values.empty() ? Eigen::VectorXd() : Eigen::VectorXd::Zero(values[0].size());
  // locate cell per axis (clamped); multilinear weights may extrapolate.
  std::vector<int> cell(d1);
  std::vector<double> t(d1);
  for (int a = 0; a < d1; ++a) {
    const auto& ax = axes[a];
    int j = static_cast<int>(std::upper_bound(ax.begin(), ax.end(), xc[a]) - ax.begin()) - 1;
    j = std::clamp(j, 0, static_cast<int>(ax.size()) - 2);
    cell[a] = j;
    t[a] = (xc[a] - ax[j]) / (ax[j + 1] - ax[j]);
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(values[0].size());
  for (int corner = 0; corner < (1 << d1); ++corner) {
    double w = 1.0;
    std::vector<int> idx(d1);
    for (int a = 0; a < d1; ++a) {
      bool hi = corner & (1 << a);
      idx[a] = cell[a] + (hi ? 1 : 0);
      w *= hi ? t[a] : (1.0 - t[a]);
    }
    if (w != 0.0) acc += w * values[node_index(idx)];
  }
  return acc;
}

GraphFunction GraphFunction::zero(const std::vector<std::vector<double>>& axes, int dim2) {
  GraphFunction g;
  g.axes = axes;
  for (auto& ax : g.axes) {
    std::sort(ax.begin(), ax.end());
    bool has_zero = false;
    for (double v : ax)
      if (v == 0.0) has_zero = true;
    if (!has_zero) throw DomainError("GraphFunction: every axis must contain 0");
  }
  g.values.assign(g.n_nodes(), Eigen::VectorXd::Zero(dim2));
  return g;
}

GraphFunction GraphFunction::uniform(int dim1, int dim2, double half_width, int nodes_per_axis) {
  if (dim1 < 1 || dim1 > 2) throw DomainError("GraphFunction: dim(E1) must be 1 or 2");
  if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0)
    throw DomainError("GraphFunction: nodes_per_axis must be odd and >= 3");
  std::vector<std::vector<double>> axes(dim1);
  for (int a = 0; a < dim1; ++a) {
    for (int i = 0; i < nodes_per_axis; ++i) {
      double t = -1.0 + 2.0 * i / (nodes_per_axis - 1);
      // snap the middle node to exactly 0
      if (i * 2 == nodes_per_axis - 1) t = 0.0;
      axes[a].push_back(half_width * t);
    }
  }
  return zero(axes, dim2);
}

double graph_lipschitz(const GraphFunction& g, const LinearSplitting& s) {
  double lip = 0;
  const int d1 = g.dim1();
  std::vector<int> idx(d1, 0);
  // all node pairs within each grid cell
  std::function<void(int)> visit = [&](int axis) {
    if (axis == d1) {
      for (int ca = 0; ca < (1 << d1); ++ca)
        for (int cb = ca + 1; cb < (1 << d1); ++cb) {
          std::vector<int> ia(d1), ib(d1);
          bool valid = true;
          for (int a = 0; a < d1; ++a) {
            ia[a] = idx[a] + ((ca >> a) & 1);
            ib[a] = idx[a] + ((cb >> a) & 1);
            if (ia[a] >= static_cast<int>(g.axes[a].size()) ||
                ib[a] >= static_cast<int>(g.axes[a].size()))
              valid = false;
          }
          if (!valid) continue;
          Eigen::VectorXd xa(d1), xb(d1);
          for (int a = 0; a < d1; ++a) {
            xa[a] = g.axes[a][ia[a]];
            xb[a] = g.axes[a][ib[a]];
          }
          double dx = s.cnorm1(xb - xa);
          if (dx < 1e-300) continue;
          double dy = s.cnorm2(g.values[g.node_index(ib)] - g.values[g.node_index(ia)]);
          lip = std::max(lip, dy / dx);
        }
      return;
    }
    for (idx[axis] = 0; idx[axis] + 1 < static_cast<int>(g.axes[axis].size()); ++idx[axis])
      visit(axis + 1);
    idx[axis] = 0;
  };
  visit(0);
  return lip;
}

double graph_distance(const GraphFunction& g1, const GraphFunction& g2,
                      const LinearSplitting& s) {
  double d = 0;
  for (std::size_t i = 0; i < g1.n_nodes(); ++i) {
    Eigen::VectorXd x = g1.node_coord(i);
    double nx = s.cnorm1(x);
    if (nx < 1e-300) continue;
    d = std::max(d, s.cnorm2(g2.values[i] - g1.values[i]) / nx);
  }
  return d;
}

GraphFunction graph_transform(const GraphProblem& p, const GraphFunction& g) {
  const LinearSplitting& s = p.splitting;
  const int d1 = g.dim1();

  // h(x) = alpha_1(x, g(x)) with alpha = components of f^-1.
  auto preimage = [&](const Eigen::VectorXd& xc) {
    Eigen::VectorXd z = s.ambient(xc, g.eval(xc));
    return invert_map(p, z);
  };
  auto h_of = [&](const Eigen::VectorXd& xc) { return s.split(preimage(xc)).first; };

  // padded admissible box
  std::vector<double> pad(d1);
  for (int a = 0; a < d1; ++a)
    pad[a] = 1.5 * std::max(std::abs(g.axes[a].front()), std::abs(g.axes[a].back()));

  GraphFunction out = g;
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    Eigen::VectorXd target = g.node_coord(i);
    Eigen::VectorXd x = target;  // seed
    double res_scale = 1.0 + s.cnorm1(target);
    bool done = false;
    Eigen::VectorXd r = h_of(x) - target;
    for (int it = 0; it < 80; ++it) {
      if (s.cnorm1(r) <= 1e-11 * res_scale) {
        done = true;
        break;
      }
      // finite-difference Jacobian (d1 <= 2)
      Eigen::MatrixXd J(d1, d1);
      for (int a = 0; a < d1; ++a) {
        double step = 1e-6 * (1.0 + std::abs(x[a]));
        Eigen::VectorXd xp = x, xm = x;
        xp[a] += step;
        xm[a] -= step;
        J.col(a) = (h_of(xp) - h_of(xm)) / (2 * step);
      }
      Eigen::VectorXd dx = J.fullPivLu().solve(-r);
      if (!dx.allFinite()) throw RootFindFailure("graph_transform: singular Newton step");
      // damping
      double lam = 1.0;
      bool improved = false;
      for (int bt = 0; bt < 25; ++bt) {
        Eigen::VectorXd xn = x + lam * dx;
        Eigen::VectorXd rn = h_of(xn) - target;
        if (s.cnorm1(rn) < s.cnorm1(r)) {
          x = xn;
          r = rn;
          improved = true;
          break;
        }
        lam *= 0.5;
      }
      if (!improved) break;
    }
    if (!done && s.cnorm1(r) > 1e-9 * res_scale)
      throw RootFindFailure("graph_transform: node root solve failed");
    for (int a = 0; a < d1; ++a)
      if (std::abs(x[a]) > pad[a] + 1e-12)
        throw BoxEscape("graph_transform: preimage left the padded box");
    out.values[i] = s.split(preimage(x)).second;
  }
  return out;
}

GraphFunction solve_center_stable(const GraphProblem& p, SolveStats* stats) {
  if (p.grid.axes.empty()) throw ConfigError("solve_center_stable: problem.grid has no axes");
  double budget = eta_budget(p.splitting);
  if (p.lip_dev >= budget)
    throw HypothesisViolated("solve_center_stable: lip_dev exceeds the eta budget");
  GraphFunction g = GraphFunction::zero(p.grid.axes, p.splitting.dim2());
  double last = 1e300;
  for (int it = 0; it < p.max_graph_iters; ++it) {
    GraphFunction gn = graph_transform(p, g);
    double d = graph_distance(g, gn, p.splitting);
    if (stats) {
      stats->iterate_distances.push_back(d);
      stats->iterations = it + 1;
    }
    g = std::move(gn);
    last = d;
    if (d < p.solve_tol) return g;
  }
  throw MaxIterations("solve_center_stable: no convergence; last distance " +
                      std::to_string(last));
}

double bump_profile(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  auto a = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
  return a(2.0 - t) / (a(2.0 - t) + a(t - 1.0));
}

LocalizedMap bump_localize(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& h,
                           const Eigen::MatrixXd& T, double s, const LinearSplitting& split,
                           int n_samples, std::uint64_t seed) {
  if (s <= 0) throw DomainError("bump_localize: s must be positive");
  LocalizedMap out;
  out.f = [h, T, s](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    double phi = bump_profile(z.norm() / s);
    Eigen::VectorXd r = T * z;
    if (phi != 0.0) r += phi * h(z);
    return r;
  };
  // Sample Lip(f_s - T) over pairs in the 2s-ball (support of the bump).
  const int m = static_cast<int>(T.rows());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto dev = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return out.f(z) - T * z; };
  auto sample_ball = [&]() {
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z[i] = gauss(rng);
    double n = z.norm();
    if (n < 1e-300) return Eigen::VectorXd(Eigen::VectorXd::Zero(m));
    return Eigen::VectorXd(z * (2.0 * s * std::pow(unif(rng), 1.0 / m) / n));
  };
  double lip = 0;
  for (int it = 0; it < n_samples; ++it) {
    Eigen::VectorXd za = sample_ball(), zb = sample_ball();
    // mix in short-range pairs: derivative-scale differences dominate the sup
    if (it % 2 == 0) zb = za + (zb - za) * 1e-3;
    double dz = split.prod_norm(zb - za);
    if (dz < 1e-300) continue;
    lip = std::max(lip, split.prod_norm(dev(zb) - dev(za)) / dz);
  }
  out.lip_dev_estimate = lip;
  return out;
}

MembershipResult membership_test(const GraphProblem& p, const GraphFunction& g,
                                 const Eigen::VectorXd& z, int n_max, double bound) {
  const LinearSplitting& s = p.splitting;
  MembershipResult r;
  {
    auto [xc, yc] = s.split(z);
    r.dist_to_graph = s.cnorm2(yc - g.eval(xc));
  }
  Eigen::VectorXd w = z;
  double rho_pow = 1.0;
  bool overflow = false;
  for (int n = 0; n <= n_max; ++n) {
    double pn = s.prod_norm(w);
    r.growth_max = std::max(r.growth_max, pn / rho_pow);
    auto [xc, yc] = s.split(w);
    if (r.exit_S1 < 0 && s.cnorm2(yc) > s.cnorm1(xc) + 1e-14 * (1.0 + pn)) r.exit_S1 = n;
    for (int a = 0; a < g.dim1(); ++a)
      if (xc.size() > a && (xc[a] < g.axes[a].front() || xc[a] > g.axes[a].back()))
        r.low_confidence = true;
    // The certificate is the rho-discounted growth: orbits near the graph
    // plateau, orbits off it grow like (mu/rho)^n and blow through any bound.
    if (!std::isfinite(pn) || pn / rho_pow > bound) {
      overflow = true;
      break;
    }
    if (n < n_max) {
      w = p.f(w);
      rho_pow *= s.rho;
    }
  }
  r.on_graph_prediction = !overflow;
  return r;
}

void graph_to_csv(const GraphFunction& g, std::ostream& os) {
  const int d1 = g.dim1();
  const int d2 = g.values.empty() ? 0 : static_cast<int>(g.values[0].size());
  for (int a = 0; a < d1; ++a) os << "x" << a + 1 << ",";
  for (int b = 0; b < d2; ++b) os << "y" << b + 1 << (b + 1 < d2 ? "," : "");
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    Eigen::VectorXd x = g.node_coord(i);
    for (int a = 0; a < d1; ++a) {
      put(x[a]);
      os << ",";
    }
    for (int b = 0; b < d2; ++b) {
      put(g.values[i][b]);
      if (b + 1 < d2) os << ",";
    }
    os << "\n";
  }
}

nlohmann::json splitting_to_json(const LinearSplitting& s) {
  auto mat = [](const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  return {{"dim", s.m()},
          {"dim_E1", s.dim1()},
          {"dim_E2", s.dim2()},
          {"theta", s.theta},
          {"rho", s.rho},
          {"mu", s.mu},
          {"n_trunc", s.n_trunc},
          {"opnorm_T", s.opnorm_T},
          {"opnorm_Tinv", s.opnorm_Tinv},
          {"basis_E1", mat(s.basis1)},
          {"basis_E2", mat(s.basis2)}};
}

}  // namespace saddle::cstable
