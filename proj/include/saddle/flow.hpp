#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "saddle/blowup.hpp"
#include "saddle/objective.hpp"

namespace saddle {

enum class Termination { Escaped, Converged, TimeBudget, NumericalFailure };

const char* termination_name(Termination t);

struct IntegratorConfig {
  enum class Kind { RK4Fixed, Adaptive };
  Kind kind = Kind::Adaptive;
  double h = 1e-3;         // fixed-step size (RK4Fixed)
  double rel_tol = 1e-9;   // adaptive
  double abs_tol = 1e-12;  // adaptive
};

struct FlowConfig {
  IntegratorConfig integrator;
  double t_max = 100.0;
  double stop_radius = 1.0;  // R
  double grad_tol = 1e-8;
  bool renormalize_sphere = true;
  int max_steps = 2'000'000;
};

struct TrajectorySample {
  double t;
  Eigen::VectorXd state;
  double f;
  double grad_norm;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double arc_length = 0;
  Termination termination = Termination::TimeBudget;
};

/// Numerical solution of w' = -grad f(w). Escape is measured from `center`
/// when given, else from w0.
Trajectory integrate_gradient_flow(const ObjectiveSpec& obj, const Eigen::VectorXd& w0,
                                   const FlowConfig& cfg,
                                   const Eigen::VectorXd* center = nullptr);

/// Integrates (r, u)' = -X on the cylinder, renormalizing u after each step.
/// Samples store the state as [r; u], f = f(w* + r u), grad_norm = |X|.
Trajectory integrate_blowup_flow(const BlowupField& field, const CylinderPoint& pt0,
                                 const FlowConfig& cfg);

struct AvoidanceReport {
  int n_total = 0;
  int n_escaped = 0;
  int n_converged_to_saddle = 0;
  int n_undecided = 0;
  std::uint64_t seed = 0;
  double radius = 0;
};

/// Samples n starts uniformly in the radius-ball around w*, integrates each,
/// and tallies outcomes. Per-trajectory RNG streams derive from (seed, index)
/// so results are identical under any thread count.
AvoidanceReport monte_carlo_avoidance(const ObjectiveSpec& obj, const Eigen::VectorXd& w_star,
                                      double radius, int n, const FlowConfig& cfg,
                                      std::uint64_t seed, int threads = 1);

struct OmegaDiagnostics {
  std::vector<Eigen::VectorXd> tail_points;         // cluster centers of the tail
  double tail_diameter = 0;
  std::vector<Eigen::VectorXd> omega2_directions;   // cluster centers of tail directions
  double p_tail_oscillation = 0;                    // max - min of p over tail directions
  double r_sup = 0;                                 // sup |r| over the tail (blown-up)
};

/// Tail diagnostics of a blown-up trajectory (states [r; u]).
OmegaDiagnostics omega_diagnostics(const Trajectory& traj, const BlowupField& field);

/// Tail diagnostics of a gradient-flow trajectory approaching w*; when P is
/// given, p-oscillation over approach directions is reported too.
OmegaDiagnostics omega_diagnostics(const Trajectory& traj, const Eigen::VectorXd& w_star,
                                   const HomogeneousPoly* P = nullptr);

struct ValueDecayProfile {
  double arc_length = 0;
  double decay_exponent = 0;  // least-squares slope of log h vs log t on the tail
};

ValueDecayProfile value_decay_profile(const Trajectory& traj, double c);

void trajectory_to_csv(const Trajectory& traj, std::ostream& os);
nlohmann::json avoidance_to_json(const AvoidanceReport& rep);
nlohmann::json omega_to_json(const OmegaDiagnostics& diag);

}  // namespace saddle
