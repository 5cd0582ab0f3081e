#include "saddle/flow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

namespace saddle {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Escaped:
      return "Escaped";
    case Termination::Converged:
      return "Converged";
    case Termination::TimeBudget:
      return "TimeBudget";
    case Termination::NumericalFailure:
      return "NumericalError";
  }
  return "?";
}

namespace {

using Rhs = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Dormand-Prince 5(4) tableau.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  // clang-format off
  static constexpr double a21 = 1.0/5;
  static constexpr double a31 = 3.0/40,       a32 = 9.0/40;
  static constexpr double a41 = 44.0/45,      a42 = -56.0/15,      a43 = 32.0/9;
  static constexpr double a51 = 19372.0/6561, a52 = -25360.0/2187, a53 = 64448.0/6561, a54 = -212.0/729;
  static constexpr double a61 = 9017.0/3168,  a62 = -355.0/33,     a63 = 46732.0/5247, a64 = 49.0/176,  a65 = -5103.0/18656;
  static constexpr double b1 = 35.0/384,      b3 = 500.0/1113,     b4 = 125.0/192,     b5 = -2187.0/6784, b6 = 11.0/84;
  static constexpr double e1 = 71.0/57600,    e3 = -71.0/16695,    e4 = 71.0/1920,     e5 = -17253.0/339200, e6 = 22.0/525, e7 = -1.0/40;
  // clang-format on
};

// One adaptive DP5(4) step attempt; returns (y_new, err_norm).
std::pair<Eigen::VectorXd, double> dopri_step(const Rhs& rhs, const Eigen::VectorXd& y, double h,
                                              const Eigen::VectorXd& k1, Eigen::VectorXd& k7_out,
                                              double rel, double abs) {
  using D = Dopri5;
  Eigen::VectorXd k2 = rhs(y + h * (D::a21 * k1));
  Eigen::VectorXd k3 = rhs(y + h * (D::a31 * k1 + D::a32 * k2));
  Eigen::VectorXd k4 = rhs(y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
  Eigen::VectorXd k5 = rhs(y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
  Eigen::VectorXd k6 =
      rhs(y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
  Eigen::VectorXd ynew =
      y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
  Eigen::VectorXd k7 = rhs(ynew);
  Eigen::VectorXd errv =
      h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
  double err = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double sc = abs + rel * std::max(std::abs(y[i]), std::abs(ynew[i]));
    double q = errv[i] / sc;
    err += q * q;
  }
  err = std::sqrt(err / y.size());
  k7_out = k7;
  return {ynew, err};
}

struct StepEvents {
  // Return true to stop integration with the given termination.
  std::function<bool(double t, const Eigen::VectorXd&, Termination&)> check;
  std::function<void(Eigen::VectorXd&)> post;  // e.g. sphere renormalization
  std::function<TrajectorySample(double, const Eigen::VectorXd&)> sample;
};

Trajectory integrate(const Rhs& rhs, Eigen::VectorXd y, const FlowConfig& cfg,
                     const StepEvents& ev) {
  Trajectory traj;
  double t = 0;
  traj.samples.push_back(ev.sample(t, y));
  Termination term = Termination::TimeBudget;
  if (ev.check(t, y, term)) {
    traj.termination = term;
    return traj;
  }

  const bool fixed = cfg.integrator.kind == IntegratorConfig::Kind::RK4Fixed;
  double h = fixed ? cfg.integrator.h : std::min(1e-3, cfg.t_max);
  int steps = 0;
  Eigen::VectorXd k1;
  try {
    k1 = rhs(y);
  } catch (const Error&) {
    traj.termination = Termination::NumericalFailure;
    return traj;
  }

  while (t < cfg.t_max && steps++ < cfg.max_steps) {
    double h_used = std::min(h, cfg.t_max - t);
    Eigen::VectorXd ynew;
    bool accepted = false;
    try {
      if (fixed) {
        Eigen::VectorXd q1 = rhs(y);
        Eigen::VectorXd q2 = rhs(y + 0.5 * h_used * q1);
        Eigen::VectorXd q3 = rhs(y + 0.5 * h_used * q2);
        Eigen::VectorXd q4 = rhs(y + h_used * q3);
        ynew = y + (h_used / 6.0) * (q1 + 2 * q2 + 2 * q3 + q4);
        accepted = true;
      } else {
        Eigen::VectorXd k7;
        auto [cand, err] =
            dopri_step(rhs, y, h_used, k1, k7, cfg.integrator.rel_tol, cfg.integrator.abs_tol);
        if (err <= 1.0) {
          ynew = cand;
          k1 = k7;  // FSAL
          accepted = true;
        }
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h = h_used * std::clamp(fac, 0.2, 5.0);
        if (h < 1e-14 * (1.0 + std::abs(t))) {
          traj.termination = Termination::NumericalFailure;
          return traj;
        }
      }
    } catch (const Error&) {
      traj.termination = Termination::NumericalFailure;
      return traj;
    }
    if (!accepted) continue;
    if (!ynew.allFinite()) {
      traj.termination = Termination::NumericalFailure;
      return traj;
    }
    if (ev.post) {
      ev.post(ynew);
      if (!fixed) k1 = rhs(ynew);  // FSAL state was modified
    }
    traj.arc_length += (ynew - y).norm();
    t += h_used;
    y = ynew;
    traj.samples.push_back(ev.sample(t, y));
    Termination tm = Termination::TimeBudget;
    if (ev.check(t, y, tm)) {
      traj.termination = tm;
      return traj;
    }
  }
  traj.termination = Termination::TimeBudget;
  return traj;
}

}  // namespace

Trajectory integrate_gradient_flow(const ObjectiveSpec& obj, const Eigen::VectorXd& w0,
                                   const FlowConfig& cfg, const Eigen::VectorXd* center) {
  if (!w0.allFinite()) throw DomainError("integrate_gradient_flow: w0 not finite");
  Rhs rhs = [&obj](const Eigen::VectorXd& w) { return (-obj.gradient(w)).eval(); };
  Eigen::VectorXd origin = center ? *center : w0;

  StepEvents ev;
  ev.sample = [&](double t, const Eigen::VectorXd& w) {
    TrajectorySample s;
    s.t = t;
    s.state = w;
    s.f = obj.eval(w);
    s.grad_norm = obj.gradient(w).norm();
    return s;
  };
  ev.check = [&](double, const Eigen::VectorXd& w, Termination& term) {
    if ((w - origin).norm() > cfg.stop_radius) {
      term = Termination::Escaped;
      return true;
    }
    if (obj.gradient(w).norm() <= cfg.grad_tol) {
      term = Termination::Converged;
      return true;
    }
    return false;
  };
  return integrate(rhs, w0, cfg, ev);
}

Trajectory integrate_blowup_flow(const BlowupField& field, const CylinderPoint& pt0,
                                 const FlowConfig& cfg) {
  const int d = static_cast<int>(pt0.u.size());
  if (!(pt0.r > 0) || pt0.r >= field.r_max)
    throw DomainError("integrate_blowup_flow: need 0 < r0 < r_max");

  auto X_of = [&](const Eigen::VectorXd& y) {
    CylinderPoint pt;
    pt.r = std::max(y[0], 0.0);
    pt.u = y.tail(d).normalized();
    return vector_field(field, pt);
  };
  Rhs rhs = [&](const Eigen::VectorXd& y) {
    auto [X1, X2] = X_of(y);
    Eigen::VectorXd dy(1 + d);
    dy[0] = -X1;
    dy.tail(d) = -X2;
    return dy;
  };

  StepEvents ev;
  if (cfg.renormalize_sphere)
    ev.post = [d](Eigen::VectorXd& y) { y.tail(d).normalize(); };
  ev.sample = [&](double t, const Eigen::VectorXd& y) {
    TrajectorySample s;
    s.t = t;
    s.state = y;
    s.f = field.obj.eval(field.w_star + y[0] * y.tail(d));
    auto [X1, X2] = X_of(y);
    s.grad_norm = std::sqrt(X1 * X1 + X2.squaredNorm());
    return s;
  };
  ev.check = [&](double, const Eigen::VectorXd& y, Termination& term) {
    if (y[0] > cfg.stop_radius || y[0] >= 0.999 * field.r_max) {
      term = Termination::Escaped;
      return true;
    }
    auto [X1, X2] = X_of(y);
    if (std::sqrt(X1 * X1 + X2.squaredNorm()) <= cfg.grad_tol) {
      term = Termination::Converged;
      return true;
    }
    return false;
  };

  Eigen::VectorXd y0(1 + d);
  y0[0] = pt0.r;
  y0.tail(d) = pt0.u.normalized();
  return integrate(rhs, y0, cfg, ev);
}

AvoidanceReport monte_carlo_avoidance(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                                      double radius, int n, const FlowConfig& cfg,
                                      std::uint64_t seed, int threads) {
  if (!(radius > 0)) throw DomainError("monte_carlo_avoidance: radius must be > 0");
  if (radius >= cfg.stop_radius)
    throw DomainError("monte_carlo_avoidance: radius must be < stop_radius");
  const int d = static_cast<int>(w_star.size());
  const double saddle_ball = 10.0 * std::sqrt(cfg.grad_tol);

  enum class Outcome { Escaped, Saddle, Undecided };
  std::vector<Outcome> outcomes(n);

  auto run_one = [&](int idx) {
    // Stream derived from (seed, index): identical under any schedule.
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(idx)};
    std::mt19937_64 rng(sq);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd w0;
    do {
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) v[i] = gauss(rng);
      double nn = v.norm();
      if (nn < 1e-12) continue;
      double rad = radius * std::pow(unif(rng), 1.0 / d);
      w0 = w_star + (rad / nn) * v;
    } while (!w0.allFinite() || (w0 - w_star).norm() < radius * 1e-6);

    Trajectory traj = integrate_gradient_flow(obj, w0, cfg, &w_star);
    switch (traj.termination) {
      case Termination::Escaped:
        outcomes[idx] = Outcome::Escaped;
        break;
      case Termination::Converged: {
        const Eigen::VectorXd& wf = traj.samples.back().state;
        outcomes[idx] =
            ((wf - w_star).norm() <= saddle_ball) ? Outcome::Saddle : Outcome::Escaped;
        break;
      }
      default:
        outcomes[idx] = Outcome::Undecided;
    }
  };

  int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    int chunk = (n + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      int lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi)
        pool.emplace_back([&, lo, hi] {
          for (int i = lo; i < hi; ++i) run_one(i);
        });
    }
    for (auto& th : pool) th.join();
  }

  AvoidanceReport rep;
  rep.n_total = n;
  rep.seed = seed;
  rep.radius = radius;
  for (auto o : outcomes) {
    if (o == Outcome::Escaped)
      ++rep.n_escaped;
    else if (o == Outcome::Saddle)
      ++rep.n_converged_to_saddle;
    else
      ++rep.n_undecided;
  }
  return rep;
}

namespace {

std::vector<Eigen::VectorXd> greedy_clusters(const std::vector<Eigen::VectorXd>& pts,
                                             double radius) {
  std::vector<Eigen::VectorXd> centers;
  std::vector<int> counts;
  for (const auto& p : pts) {
    bool merged = false;
    for (size_t i = 0; i < centers.size(); ++i) {
      if ((p - centers[i] / counts[i]).norm() < radius) {
        centers[i] += p;
        ++counts[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      centers.push_back(p);
      counts.push_back(1);
    }
  }
  for (size_t i = 0; i < centers.size(); ++i) centers[i] /= counts[i];
  return centers;
}

std::vector<const TrajectorySample*> tail_window(const Trajectory& traj) {
  if (traj.samples.size() < 50)
    throw InsufficientTail("omega_diagnostics: need >= 50 samples");
  size_t start = traj.samples.size() - traj.samples.size() / 5;  // last 20%
  std::vector<const TrajectorySample*> tail;
  for (size_t i = start; i < traj.samples.size(); ++i) tail.push_back(&traj.samples[i]);
  return tail;
}

double max_pairwise(const std::vector<Eigen::VectorXd>& pts) {
  double m = 0;
  size_t stride = pts.size() > 500 ? pts.size() / 500 + 1 : 1;
  for (size_t i = 0; i < pts.size(); i += stride)
    for (size_t j = i + 1; j < pts.size(); j += stride)
      m = std::max(m, (pts[i] - pts[j]).norm());
  return m;
}

}  // namespace

OmegaDiagnostics omega_diagnostics(const Trajectory& traj, const BlowupField& field) {
  auto tail = tail_window(traj);
  const int d = static_cast<int>(field.w_star.size());
  OmegaDiagnostics diag;
  std::vector<Eigen::VectorXd> states, dirs;
  double posc_lo = 1e300, posc_hi = -1e300;
  for (const auto* s : tail) {
    states.push_back(s->state);
    Eigen::VectorXd u = s->state.tail(d).normalized();
    dirs.push_back(u);
    double p = field.P.eval(u);
    posc_lo = std::min(posc_lo, p);
    posc_hi = std::max(posc_hi, p);
    diag.r_sup = std::max(diag.r_sup, std::abs(s->state[0]));
  }
  diag.tail_diameter = max_pairwise(states);
  diag.tail_points = greedy_clusters(states, std::max(1e-7, 0.05 * diag.tail_diameter));
  diag.omega2_directions = greedy_clusters(dirs, std::max(1e-7, 0.05 * max_pairwise(dirs)));
  diag.p_tail_oscillation = posc_hi - posc_lo;
  return diag;
}

OmegaDiagnostics omega_diagnostics(const Trajectory& traj, const Eigen::VectorXd& w_star,
                                   const HomogeneousPoly* P) {
  auto tail = tail_window(traj);
  OmegaDiagnostics diag;
  std::vector<Eigen::VectorXd> states, dirs;
  double posc_lo = 1e300, posc_hi = -1e300;
  for (const auto* s : tail) {
    states.push_back(s->state);
    Eigen::VectorXd delta = s->state - w_star;
    double r = delta.norm();
    if (r > 1e-300) {
      Eigen::VectorXd u = delta / r;
      dirs.push_back(u);
      if (P) {
        double p = P->eval(u);
        posc_lo = std::min(posc_lo, p);
        posc_hi = std::max(posc_hi, p);
      }
      diag.r_sup = std::max(diag.r_sup, r);
    }
  }
  diag.tail_diameter = max_pairwise(states);
  diag.tail_points = greedy_clusters(states, std::max(1e-7, 0.05 * diag.tail_diameter));
  if (!dirs.empty())
    diag.omega2_directions = greedy_clusters(dirs, std::max(1e-7, 0.05 * max_pairwise(dirs)));
  diag.p_tail_oscillation = (P && posc_hi >= posc_lo) ? posc_hi - posc_lo : 0.0;
  return diag;
}

ValueDecayProfile value_decay_profile(const Trajectory& traj, double c) {
  if (traj.samples.size() < 50)
    throw InsufficientTail("value_decay_profile: need >= 50 samples");
  size_t start = traj.samples.size() - traj.samples.size() / 5;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (size_t i = start; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    double h = s.f - c;
    if (!(h > 0)) throw NonpositiveValues("value_decay_profile: h(t) <= 0 on the tail");
    if (s.t <= 0) continue;
    double x = std::log(s.t), y = std::log(h);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  ValueDecayProfile prof;
  prof.arc_length = traj.arc_length;
  double den = n * sxx - sx * sx;
  prof.decay_exponent = (std::abs(den) > 1e-300) ? (n * sxy - sx * sy) / den : 0.0;
  return prof;
}

void trajectory_to_csv(const Trajectory& traj, std::ostream& os) {
  if (traj.samples.empty()) return;
  const Eigen::Index d = traj.samples.front().state.size();
  os << "t";
  for (Eigen::Index i = 0; i < d; ++i) os << ",x" << i;
  os << ",f,grad_norm\n";
  char buf[32];
  auto put = [&](double v) {
    snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (const auto& s : traj.samples) {
    put(s.t);
    for (Eigen::Index i = 0; i < d; ++i) {
      os << ",";
      put(s.state[i]);
    }
    os << ",";
    put(s.f);
    os << ",";
    put(s.grad_norm);
    os << "\n";
  }
}

nlohmann::json avoidance_to_json(const AvoidanceReport& rep) {
  return {{"n_total", rep.n_total},
          {"n_escaped", rep.n_escaped},
          {"n_converged_to_saddle", rep.n_converged_to_saddle},
          {"n_undecided", rep.n_undecided},
          {"seed", rep.seed},
          {"radius", rep.radius}};
}

nlohmann::json omega_to_json(const OmegaDiagnostics& diag) {
  nlohmann::json j;
  auto vecs = [](const std::vector<Eigen::VectorXd>& vs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vs) a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return a;
  };
  j["tail_points"] = vecs(diag.tail_points);
  j["tail_diameter"] = diag.tail_diameter;
  j["omega2_directions"] = vecs(diag.omega2_directions);
  j["p_tail_oscillation"] = diag.p_tail_oscillation;
  j["r_sup"] = diag.r_sup;
  return j;
}

}  // namespace saddle
