// saddle_cli: command-line front end for the saddle library.
//
// Usage: saddle_cli <classify|flow|mc|blowup-spectrum|lnn|cstable>
//                   --config PATH [--seed N] [--out DIR] [--threads N]
//                   [--format json|csv]
//
// Exit codes: 0 success, 1 I/O or config error, 2 domain error, 3 numerical
// failure. Config schemas are documented in README.md; unknown keys are
// rejected. All JSON numbers are serialized with 17 significant digits.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "saddle/blowup.hpp"
#include "saddle/centerstable.hpp"
#include "saddle/errors.hpp"
#include "saddle/flow.hpp"
#include "saddle/jsonio.hpp"
#include "saddle/lnn.hpp"
#include "saddle/objective.hpp"
#include "saddle/sphere.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace saddle;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string format = "json";
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, val] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown config key \"" + key + "\" in " + where);
  }
}

Eigen::VectorXd get_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be a JSON array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd get_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(what + " must be a JSON array of rows");
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols()))
      throw ConfigError(what + ": ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

void write_text(const GlobalOpts& g, const std::string& name, const std::string& body) {
  fs::create_directories(g.out_dir);
  fs::path p = fs::path(g.out_dir) / name;
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
  std::cout << "wrote " << p.string() << "\n";
}

void write_json(const GlobalOpts& g, const std::string& name, const json& j) {
  write_text(g, name, dump_json17(j) + "\n");
}

SphereSearchOpts parse_search(const json& j, const GlobalOpts& g) {
  SphereSearchOpts opts;
  reject_unknown_keys(
      j, {"n_starts", "max_iter", "crit_tol", "dedup_dist", "lambda_tol", "p_tol", "seed"},
      "search");
  opts.n_starts = j.value("n_starts", opts.n_starts);
  opts.max_iter = j.value("max_iter", opts.max_iter);
  opts.crit_tol = j.value("crit_tol", opts.crit_tol);
  opts.dedup_dist = j.value("dedup_dist", opts.dedup_dist);
  opts.lambda_tol = j.value("lambda_tol", opts.lambda_tol);
  opts.p_tol = j.value("p_tol", opts.p_tol);
  opts.seed = j.value("seed", opts.seed);
  if (g.seed) opts.seed = *g.seed;
  opts.threads = g.threads;
  return opts;
}

IntegratorConfig parse_integrator(const json& j) {
  IntegratorConfig ic;
  reject_unknown_keys(j, {"kind", "h", "rel_tol", "abs_tol"}, "integrator");
  std::string kind = j.value("kind", std::string("adaptive"));
  if (kind == "adaptive")
    ic.kind = IntegratorConfig::Kind::Adaptive;
  else if (kind == "rk4")
    ic.kind = IntegratorConfig::Kind::RK4Fixed;
  else
    throw ConfigError("integrator.kind must be \"adaptive\" or \"rk4\"");
  ic.h = j.value("h", ic.h);
  ic.rel_tol = j.value("rel_tol", ic.rel_tol);
  ic.abs_tol = j.value("abs_tol", ic.abs_tol);
  return ic;
}

FlowConfig parse_flow_config(const json& j) {
  FlowConfig fc;
  fc.t_max = j.value("t_max", fc.t_max);
  fc.stop_radius = j.value("stop_radius", fc.stop_radius);
  fc.grad_tol = j.value("grad_tol", fc.grad_tol);
  fc.max_steps = j.value("max_steps", fc.max_steps);
  if (j.contains("integrator")) fc.integrator = parse_integrator(j.at("integrator"));
  return fc;
}

std::string crit_points_csv(const SaddleReport& rep) {
  std::ostringstream os;
  int d = rep.crit_points.empty() ? 0 : static_cast<int>(rep.crit_points[0].u.size());
  os << "value,morse_index,nullity,grad_residual";
  for (int i = 0; i < d; ++i) os << ",u" << i;
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (const auto& cp : rep.crit_points) {
    put(cp.value);
    os << "," << cp.morse_index << "," << cp.nullity << ",";
    put(cp.grad_residual);
    for (int i = 0; i < d; ++i) {
      os << ",";
      put(cp.u[i]);
    }
    os << "\n";
  }
  return os.str();
}

int cmd_classify(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg, {"objective", "point", "search", "k_max", "tol"}, "classify config");
  ObjectiveSpec obj = ObjectiveSpec::from_json(cfg.at("objective"));
  Eigen::VectorXd w = get_vector(cfg.at("point"), "point");
  SphereSearchOpts opts = parse_search(cfg.value("search", json::object()), g);
  VanishingOpts vopts;
  vopts.k_max = cfg.value("k_max", vopts.k_max);
  vopts.tol = cfg.value("tol", vopts.tol);
  SaddleReport rep = classify_saddle(obj, w, opts, vopts);
  write_json(g, "classify_report.json", report_to_json(rep));
  if (g.format == "csv") write_text(g, "crit_points.csv", crit_points_csv(rep));
  return 0;
}

int cmd_flow(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg,
                      {"objective", "mode", "start", "center", "t_max", "stop_radius",
                       "grad_tol", "max_steps", "integrator", "point", "r0", "u0", "rho"},
                      "flow config");
  ObjectiveSpec obj = ObjectiveSpec::from_json(cfg.at("objective"));
  FlowConfig fc = parse_flow_config(cfg);
  std::string mode = cfg.value("mode", std::string("gradient"));

  Trajectory traj;
  json diag;
  if (mode == "gradient") {
    Eigen::VectorXd w0 = get_vector(cfg.at("start"), "start");
    std::optional<Eigen::VectorXd> center;
    if (cfg.contains("center")) center = get_vector(cfg.at("center"), "center");
    traj = integrate_gradient_flow(obj, w0, fc, center ? &*center : nullptr);
  } else if (mode == "blowup") {
    Eigen::VectorXd w_star = get_vector(cfg.at("point"), "point");
    double rho = cfg.value("rho", 1.0);
    BlowupField field = BlowupField::build(obj, w_star, MetricField{}, rho);
    CylinderPoint pt0;
    pt0.r = cfg.at("r0").get<double>();
    pt0.u = get_vector(cfg.at("u0"), "u0");
    pt0.u.normalize();
    traj = integrate_blowup_flow(field, pt0, fc);
    diag["k"] = field.k;
    diag["r_max"] = field.r_max;
  } else {
    throw ConfigError("flow mode must be \"gradient\" or \"blowup\"");
  }

  std::ostringstream csv;
  trajectory_to_csv(traj, csv);
  write_text(g, "trajectory.csv", csv.str());

  diag["termination"] = termination_name(traj.termination);
  diag["arc_length"] = traj.arc_length;
  diag["n_samples"] = traj.samples.size();
  if (!traj.samples.empty()) {
    diag["t_final"] = traj.samples.back().t;
    diag["f_final"] = traj.samples.back().f;
    diag["grad_norm_final"] = traj.samples.back().grad_norm;
  }
  write_json(g, "flow_diagnostics.json", diag);
  return 0;
}

int cmd_mc(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg,
                      {"objective", "point", "radius", "n", "seed", "t_max", "stop_radius",
                       "grad_tol", "max_steps", "integrator"},
                      "mc config");
  ObjectiveSpec obj = ObjectiveSpec::from_json(cfg.at("objective"));
  Eigen::VectorXd w_star = get_vector(cfg.at("point"), "point");
  double radius = cfg.at("radius").get<double>();
  int n = cfg.at("n").get<int>();
  std::uint64_t seed = cfg.value("seed", std::uint64_t{42});
  if (g.seed) seed = *g.seed;
  FlowConfig fc = parse_flow_config(cfg);
  AvoidanceReport rep = monte_carlo_avoidance(obj, w_star, radius, n, fc, seed, g.threads);
  json out = avoidance_to_json(rep);
  write_json(g, "mc_report.json", out);
  if (g.format == "csv") {
    std::ostringstream os;
    os << "n_total,n_escaped,n_converged_to_saddle,n_undecided,seed,radius\n"
       << rep.n_total << "," << rep.n_escaped << "," << rep.n_converged_to_saddle << ","
       << rep.n_undecided << "," << rep.seed << ",";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", rep.radius);
    os << buf << "\n";
    write_text(g, "mc_report.csv", os.str());
  }
  return 0;
}

int cmd_blowup_spectrum(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg, {"objective", "point", "rho", "search"}, "blowup-spectrum config");
  ObjectiveSpec obj = ObjectiveSpec::from_json(cfg.at("objective"));
  Eigen::VectorXd w_star = get_vector(cfg.at("point"), "point");
  double rho = cfg.value("rho", 1.0);
  BlowupField field = BlowupField::build(obj, w_star, MetricField{}, rho);
  SphereSearchOpts opts = parse_search(cfg.value("search", json::object()), g);
  std::vector<SphereCritPoint> pts = find_crit_points(field.P, opts);

  json out;
  out["k"] = field.k;
  out["r_max"] = field.r_max;
  json arr = json::array();
  for (const auto& cp : pts) {
    json rec;
    rec["u"] = std::vector<double>(cp.u.data(), cp.u.data() + cp.u.size());
    rec["value"] = cp.value;
    json spec = json::array();
    for (const auto& ev : linearization_spectrum(field, cp))
      spec.push_back({{"re", ev.real()}, {"im", ev.imag()}});
    rec["spectrum"] = spec;
    json pred = json::array();
    pred.push_back(field.k * cp.value);
    for (double ev : cp.tangent_eigs) pred.push_back(ev);
    rec["predicted"] = pred;
    arr.push_back(rec);
  }
  out["crit_points"] = arr;
  write_json(g, "blowup_spectrum.json", out);
  return 0;
}

int cmd_lnn(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg, {"problem", "weights", "search"}, "lnn config");
  LNNProblem prob = LNNProblem::from_json(cfg.at("problem"));
  WeightVector W;
  const json& jw = cfg.at("weights");
  if (jw.is_string() && jw.get<std::string>() == "zero") {
    for (int i = 0; i < prob.depth(); ++i)
      W.push_back(Eigen::MatrixXd::Zero(prob.dims[i + 1], prob.dims[i]));
  } else if (jw.is_array()) {
    for (std::size_t i = 0; i < jw.size(); ++i)
      W.push_back(get_matrix(jw[i], "weights[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError("weights must be \"zero\" or an array of matrices");
  }
  check_shapes(prob, W);
  SphereSearchOpts opts = parse_search(cfg.value("search", json::object()), g);

  json out;
  out["loss"] = loss(prob, W);
  out["zeta"] = zeta(W);
  out["kappa"] = kappa(prob, W);
  SaddleReport rep = certify_weakly_strict(prob, W, opts);
  out["report"] = report_to_json(rep);
  write_json(g, "lnn_report.json", out);
  return 0;
}

int cmd_cstable(const GlobalOpts& g) {
  using namespace saddle::cstable;
  json cfg = load_config(g.config_path);
  reject_unknown_keys(cfg,
                      {"T", "perturbation", "grid", "membership_offsets", "membership_n_max",
                       "membership_bound"},
                      "cstable config");
  Eigen::MatrixXd T = get_matrix(cfg.at("T"), "T");

  LinearSplitting split = split_spectrum(T);
  GraphProblem prob;
  prob.splitting = split;
  double s_scale = 0;
  if (cfg.contains("perturbation")) {
    const json& jp = cfg.at("perturbation");
    reject_unknown_keys(jp, {"coef", "source", "target", "s"}, "perturbation");
    double eps = jp.at("coef").get<double>();
    int src = jp.at("source").get<int>();
    int tgt = jp.at("target").get<int>();
    s_scale = jp.at("s").get<double>();
    if (src < 0 || src >= T.rows() || tgt < 0 || tgt >= T.rows())
      throw ConfigError("perturbation source/target out of range");
    auto h = [eps, src, tgt](const Eigen::VectorXd& z) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(z.size());
      r[tgt] = eps * z[src] * z[src];
      return r;
    };
    LocalizedMap loc = bump_localize(h, T, s_scale, split);
    prob.f = loc.f;
    prob.lip_dev = loc.lip_dev_estimate;
  } else {
    Eigen::MatrixXd Tc = T;
    prob.f = [Tc](const Eigen::VectorXd& z) { return (Tc * z).eval(); };
    prob.lip_dev = 0;
  }

  const json& jg = cfg.at("grid");
  reject_unknown_keys(jg, {"half_width", "nodes"}, "grid");
  prob.grid = GraphFunction::uniform(split.dim1(), split.dim2(), jg.at("half_width").get<double>(),
                                     jg.at("nodes").get<int>());

  SolveStats stats;
  GraphFunction graph = solve_center_stable(prob, &stats);

  std::ostringstream csv;
  graph_to_csv(graph, csv);
  write_text(g, "graph.csv", csv.str());

  json out;
  out["splitting"] = splitting_to_json(split);
  out["eta_budget"] = eta_budget(split);
  out["lip_dev"] = prob.lip_dev;
  out["iterations"] = stats.iterations;
  out["iterate_distances"] = stats.iterate_distances;
  json ratios = json::array();
  for (std::size_t i = 1; i < stats.iterate_distances.size(); ++i)
    if (stats.iterate_distances[i - 1] > 0)
      ratios.push_back(stats.iterate_distances[i] / stats.iterate_distances[i - 1]);
  out["contraction_ratios"] = ratios;
  out["lipschitz"] = graph_lipschitz(graph, split);

  // membership table: a point on the graph, optional offset points, and 0
  json table = json::array();
  int n_max = cfg.value("membership_n_max", 50);
  double bound = cfg.value("membership_bound", 1e4);
  auto add_row = [&](const std::string& label, const Eigen::VectorXd& z) {
    MembershipResult mr = membership_test(prob, graph, z, n_max, bound);
    json row;
    row["label"] = label;
    row["growth_max"] = mr.growth_max;
    row["exit_S1"] = mr.exit_S1;
    row["on_graph_prediction"] = mr.on_graph_prediction;
    row["dist_to_graph"] = mr.dist_to_graph;
    row["low_confidence"] = mr.low_confidence;
    table.push_back(row);
  };
  add_row("origin", Eigen::VectorXd::Zero(T.rows()));
  if (split.dim1() > 0) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Constant(split.dim1(), 0.5 * graph.axes[0].back());
    Eigen::VectorXd on = split.ambient(x0, graph.eval(x0));
    add_row("graph_point", on);
    if (cfg.contains("membership_offsets"))
      for (const auto& jo : cfg.at("membership_offsets")) {
        Eigen::VectorXd off = get_vector(jo, "membership_offsets entry");
        if (off.size() != T.rows()) throw ConfigError("membership offset has wrong dimension");
        add_row("offset", on + off);
      }
  }
  out["membership"] = table;
  write_json(g, "cstable_report.json", out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saddle point classification, gradient flow and invariant graph toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  int rc = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", g.config_path, "path to the JSON config")->required();
    sub->add_option("--seed", g.seed, "RNG seed override");
    sub->add_option("--out", g.out_dir, "output directory");
    sub->add_option("--threads", g.threads, "worker thread cap")
        ->check(CLI::PositiveNumber);
    sub->add_option("--format", g.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    return sub;
  };

  add_common(app.add_subcommand("classify", "classify a critical point"))
      ->callback([&] { rc = cmd_classify(g); });
  add_common(app.add_subcommand("flow", "integrate a gradient or blown-up flow"))
      ->callback([&] { rc = cmd_flow(g); });
  add_common(app.add_subcommand("mc", "Monte Carlo saddle-avoidance experiment"))
      ->callback([&] { rc = cmd_mc(g); });
  add_common(app.add_subcommand("blowup-spectrum", "linearization spectra on the cylinder"))
      ->callback([&] { rc = cmd_blowup_spectrum(g); });
  add_common(app.add_subcommand("lnn", "linear-network saddle certification"))
      ->callback([&] { rc = cmd_lnn(g); });
  add_common(app.add_subcommand("cstable", "center-stable graph solver"))
      ->callback([&] { rc = cmd_cstable(g); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}
