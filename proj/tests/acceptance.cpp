// Acceptance gate: one pass/fail line per criterion, nonzero exit on failure.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "saddle/blowup.hpp"
#include "saddle/centerstable.hpp"
#include "saddle/flow.hpp"
#include "saddle/jsonio.hpp"
#include "saddle/lnn.hpp"
#include "saddle/objective.hpp"
#include "saddle/sphere.hpp"

using namespace saddle;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
  bool ok = true;
  std::string why;
  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
};

Polynomial xyz_objective() {
  // 1/2 (xyz - 1)^2 = 1/2 - xyz + 1/2 x^2 y^2 z^2
  Polynomial f(3);
  f.add_term({0, 0, 0}, 0.5);
  f.add_term({1, 1, 1}, -1.0);
  f.add_term({2, 2, 2}, 0.5);
  return f;
}

Polynomial quadratic_objective() {
  Polynomial f(2);
  f.add_term({2, 0}, 0.5);
  f.add_term({0, 2}, -0.5);
  return f;
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int n) {
  std::vector<Eigen::Vector3d> pts(n);
  const double ga = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - 2.0 * (i + 0.5) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = ga * i;
    pts[i] = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  }
  return pts;
}

// Greedy multiset distance between complex spectra.
double multiset_dist(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0;
  for (const auto& x : a) {
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double d = std::abs(x - b[j]);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    worst = std::max(worst, bd);
    b.erase(b.begin() + best);
  }
  return worst;
}

bool criterion1(Check& c) {
  auto t0 = Clock::now();
  ObjectiveSpec obj = ObjectiveSpec::from_polynomial(xyz_objective());
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(3);
  auto [k, P] = leading_term(obj, w0);
  c.require(k == 3, "expected vanishing order 3");
  double coef = P.eval(Eigen::Vector3d(1, 1, 1));  // only term is c * xyz
  c.require(std::abs(coef - (-1.0)) <= 1e-10, "leading coefficient of xyz not -1");

  SphereSearchOpts opts;
  opts.threads = 4;
  SaddleReport rep = classify_saddle(obj, w0, opts);
  c.require(rep.crit_points.size() == 14, "expected 14 sphere critical points, got " +
                                              std::to_string(rep.crit_points.size()));
  c.require(rep.tamed && rep.weakly_strict, "verdict should be tamed weakly strict");

  // independent dense-grid oracle
  std::vector<Eigen::Vector3d> grid = fibonacci_sphere(1'000'000);
  std::vector<Eigen::Vector3d> clusters;
  for (const auto& u : grid) {
    if (sphere_grad(P, u).norm() >= 0.01) continue;
    bool merged = false;
    for (auto& cl : clusters)
      if ((cl - u).norm() < 0.2) {
        merged = true;
        break;
      }
    if (!merged) clusters.push_back(u);
  }
  c.require(clusters.size() == 14, "grid oracle found " + std::to_string(clusters.size()) +
                                       " clusters, expected 14");
  for (const auto& cp : rep.crit_points) {
    double best = 1e300;
    for (const auto& cl : clusters) best = std::min(best, (cl - Eigen::Vector3d(cp.u)).norm());
    c.require(best < 0.05, "a found critical point has no grid-oracle match");
  }
  for (const auto& cl : clusters) {
    double best = 1e300;
    for (const auto& cp : rep.crit_points)
      best = std::min(best, (cl - Eigen::Vector3d(cp.u)).norm());
    c.require(best < 0.05, "a grid-oracle cluster has no found match");
  }

  const double v = 1.0 / (3.0 * std::sqrt(3.0));
  int pos = 0, neg = 0;
  for (const auto& cp : rep.crit_points) {
    if (std::abs(cp.value - v) <= 1e-8) ++pos;
    if (std::abs(cp.value + v) <= 1e-8) ++neg;
  }
  c.require(pos == 4 && neg == 4, "diagonal critical values not +/- 1/(3 sqrt 3)");
  c.require(seconds_since(t0) < 10.0, "runtime exceeded 10 s");
  return c.ok;
}

bool criterion2(Check& c) {
  ObjectiveSpec obj = ObjectiveSpec::from_polynomial(quadratic_objective());
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(2);
  SaddleReport rep = classify_saddle(obj, w0);
  c.require(rep.k == 2, "expected order 2");
  c.require(rep.weakly_strict, "expected weakly strict");
  bool saw_eig = false;
  for (const auto& cp : rep.crit_points) {
    c.require(std::abs(std::abs(cp.value) - 0.5) <= 1e-8, "critical values should be +/- 1/2");
    if ((Eigen::Vector2d(cp.u) - Eigen::Vector2d(1, 0)).norm() < 1e-6) {
      c.require(cp.tangent_eigs.size() == 1 && std::abs(cp.tangent_eigs[0] + 2.0) <= 1e-6,
                "tangent eigenvalue at (1,0) should be -2");
      saw_eig = true;
    }
  }
  c.require(saw_eig, "critical point (1,0) not found");
  return c.ok;
}

bool criterion3(Check& c) {
  struct Case {
    Polynomial f;
    int dim;
  };
  std::vector<Case> cases = {{xyz_objective(), 3}, {quadratic_objective(), 2}};
  bool saw_quad = false, saw_axis = false;
  for (const auto& cs : cases) {
    ObjectiveSpec obj = ObjectiveSpec::from_polynomial(cs.f);
    Eigen::VectorXd w0 = Eigen::VectorXd::Zero(cs.dim);
    BlowupField field = BlowupField::build(obj, w0);
    SphereSearchOpts opts;
    opts.threads = 4;
    std::vector<SphereCritPoint> pts = find_crit_points(field.P, opts);
    for (const auto& cp : pts) {
      std::vector<std::complex<double>> got = linearization_spectrum(field, cp);
      std::vector<std::complex<double>> want;
      want.emplace_back(field.k * cp.value, 0.0);
      for (double ev : cp.tangent_eigs) want.emplace_back(ev, 0.0);
      double radius = 0;
      for (const auto& ev : want) radius = std::max(radius, std::abs(ev));
      double d = multiset_dist(got, want);
      c.require(d <= 1e-5 * (1 + radius), "spectrum mismatch " + std::to_string(d));

      if (cs.dim == 2 && multiset_dist(want, {{1, 0}, {-2, 0}}) < 1e-6) saw_quad = true;
      if (cs.dim == 3 && multiset_dist(want, {{0, 0}, {-1, 0}, {1, 0}}) < 1e-6) saw_axis = true;
    }
  }
  c.require(saw_quad, "spectrum {1,-2} not exhibited");
  c.require(saw_axis, "spectrum {0,-1,+1} not exhibited");
  return c.ok;
}

bool criterion4(Check& c) {
  struct Case {
    Polynomial f;
    int dim;
  };
  std::vector<Case> cases = {{xyz_objective(), 3}, {quadratic_objective(), 2}};
  for (const auto& cs : cases) {
    ObjectiveSpec obj = ObjectiveSpec::from_polynomial(cs.f);
    Eigen::VectorXd w0 = Eigen::VectorXd::Zero(cs.dim);
    BlowupField field = BlowupField::build(obj, w0);

    std::vector<Eigen::VectorXd> us;
    if (cs.dim == 3) {
      for (const auto& u : fibonacci_sphere(500)) us.push_back(u);
    } else {
      for (int i = 0; i < 500; ++i) {
        double th = 2 * M_PI * i / 500.0;
        us.push_back(Eigen::Vector2d(std::cos(th), std::sin(th)));
      }
    }
    std::vector<double> logr, logd;
    for (int j = 0; j <= 6; ++j) {
      double r = 1e-5 * std::pow(10.0, 0.5 * j);  // 1e-5 .. 1e-2
      double worst = 0;
      for (const auto& u : us) {
        auto [a, z] = vector_field(field, CylinderPoint{r, u});
        Eigen::VectorXd gp = sphere_grad(field.P, u);
        double diff = std::sqrt(a * a + (z - gp).squaredNorm());
        worst = std::max(worst, diff);
      }
      logr.push_back(std::log(r));
      logd.push_back(std::log(std::max(worst, 1e-300)));
    }
    double n = logr.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < logr.size(); ++i) {
      sx += logr[i];
      sy += logd[i];
      sxx += logr[i] * logr[i];
      sxy += logr[i] * logd[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    c.require(slope >= 0.9, "extension log-log slope " + std::to_string(slope) + " < 0.9");
  }
  return c.ok;
}

bool criterion5(Check& c) {
  auto t0 = Clock::now();
  FlowConfig fc;
  fc.t_max = 200.0;

  for (const auto& [f, dim] :
       std::vector<std::pair<Polynomial, int>>{{quadratic_objective(), 2}, {xyz_objective(), 3}}) {
    ObjectiveSpec obj = ObjectiveSpec::from_polynomial(f);
    AvoidanceReport rep =
        monte_carlo_avoidance(obj, Eigen::VectorXd::Zero(dim), 0.1, 1000, fc, 42, 4);
    c.require(rep.n_converged_to_saddle == 0,
              "saddle reported " + std::to_string(rep.n_converged_to_saddle) + " convergences");
    c.require(rep.n_escaped >= 990,
              "saddle escapes " + std::to_string(rep.n_escaped) + " < 990");
  }

  Polynomial ctrl(2);  // |w|^2: every start converges
  ctrl.add_term({2, 0}, 1.0);
  ctrl.add_term({0, 2}, 1.0);
  AvoidanceReport rc = monte_carlo_avoidance(ObjectiveSpec::from_polynomial(ctrl),
                                             Eigen::VectorXd::Zero(2), 0.1, 100, fc, 42, 4);
  c.require(rc.n_converged_to_saddle == 100, "control: expected 100/100 converged");
  c.require(seconds_since(t0) < 120.0, "runtime exceeded 2 min");
  return c.ok;
}

bool criterion6(Check& c) {
  std::mt19937_64 rng(6001);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> depth(1, 4), dim(1, 5);

  auto random_problem = [&](int N, int max_dim) {
    LNNProblem p;
    p.dims.resize(N + 1);
    for (auto& d : p.dims) d = 1 + static_cast<int>(rng() % max_dim);
    int m = 1 + static_cast<int>(rng() % max_dim);
    p.X.resize(p.dims.front(), m);
    p.Y.resize(p.dims.back(), m);
    for (int r = 0; r < p.X.rows(); ++r)
      for (int cc = 0; cc < p.X.cols(); ++cc) p.X(r, cc) = gauss(rng);
    for (int r = 0; r < p.Y.rows(); ++r)
      for (int cc = 0; cc < p.Y.cols(); ++cc) p.Y(r, cc) = gauss(rng);
    return p;
  };
  auto random_weights = [&](const LNNProblem& p) {
    WeightVector W;
    for (int i = 0; i < p.depth(); ++i) {
      Eigen::MatrixXd Wi(p.dims[i + 1], p.dims[i]);
      for (int r = 0; r < Wi.rows(); ++r)
        for (int cc = 0; cc < Wi.cols(); ++cc) Wi(r, cc) = gauss(rng);
      W.push_back(std::move(Wi));
    }
    return W;
  };
  auto zero_weights = [](const LNNProblem& p) {
    WeightVector W;
    for (int i = 0; i < p.depth(); ++i)
      W.push_back(Eigen::MatrixXd::Zero(p.dims[i + 1], p.dims[i]));
    return W;
  };

  // gradients vs finite differences
  for (int inst = 0; inst < 50; ++inst) {
    LNNProblem p = random_problem(depth(rng), 5);
    WeightVector W = random_weights(p);
    Eigen::VectorXd v = stack_weights(p, W);
    Eigen::VectorXd gr = stack_weights(p, loss_gradient(p, W));
    const double h = 1e-6;
    double worst = 0, scale = 0;
    for (int i = 0; i < v.size(); ++i) {
      Eigen::VectorXd vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      double fd = (loss(p, unstack_weights(p, vp)) - loss(p, unstack_weights(p, vm))) / (2 * h);
      worst = std::max(worst, std::abs(gr[i] - fd));
      scale = std::max(scale, std::abs(fd));
    }
    c.require(worst <= 1e-6 * (1 + scale), "gradient FD mismatch");
  }

  // kappa cap and trace checks on trace-form leading polynomials
  int traced = 0;
  for (int inst = 0; inst < 200 && traced < 10; ++inst) {
    int N = depth(rng);
    LNNProblem p = random_problem(N, 3);
    WeightVector W = random_weights(p);
    for (int i = 0; i < N; ++i)
      if (rng() % 2) W[i].setZero();
    int kc;
    try {
      kc = kappa(p, W);
    } catch (const OrderExceedsCap&) {
      continue;
    }
    c.require(kc <= 2 * N, "kappa exceeds 2N");
    if (zeta(W) != kc || kc < 2) continue;
    HomogeneousPoly P = leading_poly(p, W);
    c.require(trace_hessian_check(P, 50, 601) <= 1e-8 * (1 + P.poly().max_abs_coef()),
              "trace of d^2 P not ~0");
    ++traced;
  }
  c.require(traced >= 5, "too few trace-form instances reached");

  // 20 certifications at zeta = kappa configurations, including W = 0
  int certified = 0;
  for (int inst = 0; inst < 400 && certified < 20; ++inst) {
    int N = 2 + static_cast<int>(rng() % 2);
    LNNProblem p = random_problem(N, 2);
    if ((p.X * p.Y.transpose()).norm() < 1e-6) continue;
    WeightVector W = zero_weights(p);
    if (certified >= 12) {
      // partially-zeroed variants
      W = random_weights(p);
      for (int i = 0; i < N; ++i)
        if (i % 2 == 0) W[i].setZero();
      int kc;
      try {
        kc = kappa(p, W);
      } catch (const OrderExceedsCap&) {
        continue;
      }
      if (zeta(W) != kc || kc < 2) continue;
    }
    SphereSearchOpts opts;
    opts.threads = 4;
    SaddleReport rep;
    try {
      rep = certify_weakly_strict(p, W, opts);
    } catch (const DomainError&) {
      continue;
    }
    c.require(rep.weakly_strict, "a zeta=kappa configuration failed certification");
    ++certified;
  }
  c.require(certified == 20, "only " + std::to_string(certified) + "/20 certifications ran");
  return c.ok;
}

bool criterion7(Check& c) {
  using namespace saddle::cstable;
  auto t0 = Clock::now();

  // linear: one iteration, exact zero graph
  Eigen::MatrixXd T = Eigen::Vector2d(0.5, 2.0).asDiagonal();
  GraphProblem lin;
  lin.splitting = split_spectrum(T);
  lin.f = [T](const Eigen::VectorXd& z) { return (T * z).eval(); };
  lin.lip_dev = 0;
  lin.grid = GraphFunction::uniform(1, 1, 1.0, 5);
  SolveStats lstats;
  GraphFunction lg = solve_center_stable(lin, &lstats);
  for (const auto& v : lg.values) c.require(v.norm() <= 1e-14, "linear graph not exactly 0");

  // bump-localized perturbed demo
  auto make_demo = [](double eps, double s, double hw, int nodes, double lam2) {
    Eigen::MatrixXd Td = Eigen::Vector2d(0.5, lam2).asDiagonal();
    GraphProblem p;
    p.splitting = split_spectrum(Td);
    auto h = [eps](const Eigen::VectorXd& z) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(2);
      r[1] = eps * z[0] * z[0];
      return r;
    };
    LocalizedMap loc = bump_localize(h, Td, s, p.splitting);
    p.f = loc.f;
    p.lip_dev = loc.lip_dev_estimate;
    p.grid = GraphFunction::uniform(1, 1, hw, nodes);
    return p;
  };
  GraphProblem demo = make_demo(0.002, 0.25, 0.2, 9, 8.0);
  SolveStats stats;
  GraphFunction g = solve_center_stable(demo, &stats);

  double eta_hat =
      2 * demo.splitting.opnorm_Tinv * demo.splitting.opnorm_Tinv * demo.lip_dev;
  double bound =
      (1.0 / demo.splitting.mu + 2 * eta_hat) / (1.0 / demo.splitting.theta - eta_hat);
  for (std::size_t i = 2; i < stats.iterate_distances.size(); ++i)
    if (stats.iterate_distances[i - 1] > 1e-13)
      c.require(stats.iterate_distances[i] <=
                    (bound + 0.05) * stats.iterate_distances[i - 1] + 1e-13,
                "contraction ratio above the bound");

  c.require(graph_lipschitz(g, demo.splitting) <= 1 + 1e-6, "Lipschitz constant > 1 + 1e-6");
  c.require(g.eval(Eigen::VectorXd::Zero(1)).norm() <= 1e-12, "g(0) != 0");

  GraphProblem fine = make_demo(0.002, 0.25, 0.2, 17, 8.0);
  GraphFunction gf = solve_center_stable(fine);
  double worst = 0;
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    worst = std::max(worst, (gf.eval(g.node_coord(i)) - g.values[i]).norm());
  c.require(worst <= 2e-3, "grid refinement changed g by " + std::to_string(worst));

  // membership separation on a gentler demo where growth is resolvable
  GraphProblem mem = make_demo(1e-6, 0.25, 0.2, 33, 2.0);
  GraphFunction gm = solve_center_stable(mem);
  Eigen::VectorXd x0(1);
  x0 << 0.15 * mem.splitting.basis1(0, 0);
  Eigen::VectorXd on = mem.splitting.ambient(x0, gm.eval(x0));
  MembershipResult mon = membership_test(mem, gm, on, 50, 1e4);
  c.require(mon.on_graph_prediction && mon.growth_max <= 10 * mem.splitting.prod_norm(on),
            "on-graph growth not bounded to n = 50");
  MembershipResult moff =
      membership_test(mem, gm, on + 0.1 * mem.splitting.basis2.col(0), 50, 1e4);
  c.require(!moff.on_graph_prediction && moff.exit_S1 >= 0,
            "offset point did not exit S1 at finite n");

  c.require(seconds_since(t0) < 60.0, "runtime exceeded 1 min");
  return c.ok;
}

bool criterion8(Check& c) {
  ObjectiveSpec obj = ObjectiveSpec::from_polynomial(xyz_objective());
  Eigen::VectorXd w0 = Eigen::VectorXd::Zero(3);
  std::string cls[2];
  std::string mc[2];
  int threads[2] = {1, 4};
  for (int i = 0; i < 2; ++i) {
    SphereSearchOpts opts;
    opts.threads = threads[i];
    cls[i] = dump_json17(report_to_json(classify_saddle(obj, w0, opts)));
    FlowConfig fc;
    fc.t_max = 200.0;
    mc[i] = dump_json17(
        avoidance_to_json(monte_carlo_avoidance(obj, w0, 0.1, 200, fc, 42, threads[i])));
  }
  c.require(cls[0] == cls[1], "classify reports differ across thread counts");
  c.require(mc[0] == mc[1], "mc reports differ across thread counts");
  return c.ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(Check&)> run;
  };
  std::vector<Criterion> criteria = {
      {"1 classification of 1/2 (xyz-1)^2 at the origin", criterion1},
      {"2 strict-saddle sanity for 1/2 (x^2-y^2)", criterion2},
      {"3 blow-up linearization spectra match {k p} u sigma(Hess)", criterion3},
      {"4 extension bound: field-to-limit distance is O(r)", criterion4},
      {"5 Monte Carlo saddle avoidance (seed 42, n = 1000)", criterion5},
      {"6 linear-network suite: gradients, kappa cap, trace, certification", criterion6},
      {"7 graph-transform suite: contraction, refinement, membership", criterion7},
      {"8 determinism: byte-identical reports across thread counts", criterion8},
  };

  int failures = 0;
  for (auto& cr : criteria) {
    Check c;
    bool ok = false;
    std::string err;
    try {
      ok = cr.run(c);
    } catch (const std::exception& e) {
      err = std::string("exception: ") + e.what();
    }
    if (ok) {
      std::printf("PASS  criterion %s\n", cr.name);
    } else {
      ++failures;
      std::printf("FAIL  criterion %s  (%s)\n", cr.name, err.empty() ? c.why.c_str() : err.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
