#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "framescope/measure.hpp"
#include "framescope/transport.hpp"

namespace framescope {

enum class Scheme { Explicit, Jko };
enum class PotentialKind { Tightness, PFrame };
enum class Integrator { Euler, Rk4 };
enum class Termination { Converged, Stalled, MaxSteps, CollapsedToZero };

std::string to_string(Termination t);

/// Inner minimization of one minimizing-movement step.
struct InnerSolverConfig {
  int inner_iters = 200;
  /// Initial step length for the inner descent; <= 0 picks tau / (1 + 8 tau M_2^2).
  double inner_lr = 0.0;
  /// Stop once the preconditioned gradient norm falls below this fraction of
  /// its starting value.
  double inner_tol = 1e-10;
  OtMethod ot = OtMethod::exact();
};

struct FlowConfig {
  Scheme scheme = Scheme::Explicit;
  PotentialKind potential = PotentialKind::Tightness;
  int p = 2;  // exponent of the p-frame potential
  bool sphere_constrained = false;
  double epsilon = 0.0;
  double dt = 0.01;
  double tau = 0.05;
  int max_steps = 10000;
  /// Converged once the driven potential falls below stop_tp times its
  /// initial value (and, for p = 2 potentials, the measure is tight).
  double stop_tp = 1e-10;
  /// Stalled after stall_window consecutive steps whose decrease is below
  /// stop_stall times the initial potential.
  double stop_stall = 1e-14;
  int stall_window = 10;
  int record_every = 1;
  std::uint64_t seed = 0;
  double tight_tol = kDefaultTightTol;
  Integrator integrator = Integrator::Euler;
  InnerSolverConfig inner;

  void validate() const;
};

/// Recorded subsample of a discrete flow. All per-record lists have equal
/// length. `dissipation` is the running integral of the energy integrand
/// over every step (not just recorded ones), so energy_report can compare
/// any two recorded states.
struct FlowTrajectory {
  std::vector<int> steps;
  std::vector<double> times;
  std::vector<DiscreteMeasure> states;
  std::vector<double> tp_values;
  std::vector<double> energy_values;  // the driven potential (TP or PFP_p)
  std::vector<double> m2_values;
  std::vector<double> energy_integrand;
  std::vector<double> dissipation;
  std::vector<std::pair<double, double>> spectra;  // (lambda_min, lambda_max)
  std::vector<double> w2_steps;
  Termination termination = Termination::MaxSteps;
  int steps_taken = 0;
  int inner_failures = 0;  // JKO steps that stayed put

  std::size_t size() const { return times.size(); }
  const DiscreteMeasure& final_state() const { return states.back(); }
};

struct JkoStepResult {
  DiscreteMeasure measure;
  double w_step = 0.0;
  double objective = 0.0;  // (1/2 tau) W_2^2 + TP at the returned measure
  bool stayed = false;     // inner descent found no improvement; measure == input
  int inner_iterations = 0;
};

struct EnergyReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// v(x_i) = -4 T x_i |4 T x_i|^eps for every atom (rows).
Matrix tp_velocity(const DiscreteMeasure& mu, double epsilon);

/// sum_i w_i |4 T x_i|^{2+eps}: rate at which TP decreases along the flow.
double tp_dissipation_rate(const DiscreteMeasure& mu, double epsilon);

/// One Euler step x_i <- x_i + dt v(x_i); weights unchanged.
DiscreteMeasure explicit_step(const DiscreteMeasure& mu, double dt, double epsilon);

/// Classical RK4 step for the eps = 0 field x' = -4 T_mu x.
DiscreteMeasure rk4_step(const DiscreteMeasure& mu, double dt);

FlowTrajectory run_explicit(const DiscreteMeasure& mu0, const FlowConfig& config);

/// Minimizes (1/2 tau) W_2^2(mu, nu) + TP(nu) over nu sharing mu's weights.
JkoStepResult jko_step(const DiscreteMeasure& mu, double tau, const InnerSolverConfig& config);

FlowTrajectory run_jko(const DiscreteMeasure& mu0, const FlowConfig& config);

FlowTrajectory run_flow(const DiscreteMeasure& mu0, const FlowConfig& config);

/// Experimental descent along the p-frame barycenter field. With
/// `sphere_constrained`, the radial part of the field is removed and atoms
/// are projected back to the unit sphere after the step.
DiscreteMeasure pframe_explicit_step(const DiscreteMeasure& mu, double dt, int p,
                                     bool sphere_constrained = false);

/// lhs = dissipation(a -> b) + E(b), rhs = E(a); holds if lhs <= rhs + 1e-6 (1 + rhs).
EnergyReport energy_report(const FlowTrajectory& trajectory, std::size_t a, std::size_t b);

}  // namespace framescope
