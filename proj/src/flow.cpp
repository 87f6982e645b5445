#include "framescope/flow.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "framescope/error.hpp"
#include "framescope/numeric.hpp"
#include "framescope/potentials.hpp"

namespace framescope {

namespace {

constexpr double kCollapseRatio = 1e-8;

Matrix tightness_matrix(const DiscreteMeasure& mu) {
  const SymmetricOperator s = frame_operator(mu);
  return s.matrix() - (s.trace() / s.dim()) * Matrix::Identity(s.dim(), s.dim());
}

// Field g_p at each atom, with the radial component removed when the flow
// lives on the sphere.
Matrix pframe_field(const DiscreteMeasure& mu, int p, bool sphere_constrained) {
  Matrix g = pframe_gradient(mu, p).vectors;
  if (sphere_constrained) {
    for (int i = 0; i < mu.size(); ++i) {
      const auto x = mu.points().row(i);
      const double nx2 = x.squaredNorm();
      if (nx2 > 0.0) g.row(i) -= (g.row(i).dot(x) / nx2) * x;
    }
  }
  return g;
}

struct StateMetrics {
  double tp = 0.0;
  double energy = 0.0;
  double convergence = 0.0;  // quantity compared against stop_tp
  double m2 = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool tight = false;
  double integrand = 0.0;
};

StateMetrics measure_state(const DiscreteMeasure& mu, const FlowConfig& config) {
  StateMetrics s;
  const SymmetricOperator op = frame_operator(mu);
  s.tp = tp_value(mu);
  s.m2 = std::sqrt(std::max(0.0, op.trace()));
  s.lambda_min = op.lambda_min();
  s.lambda_max = op.lambda_max();
  s.tight = (s.lambda_max - s.lambda_min) <= config.tight_tol * std::max(1.0, s.lambda_max);
  if (config.potential == PotentialKind::Tightness) {
    s.energy = s.tp;
    s.convergence = s.tp;
    if (config.scheme == Scheme::Explicit) s.integrand = tp_dissipation_rate(mu, config.epsilon);
  } else {
    const PotentialReport r = pframe_potential(mu, config.p);
    s.energy = r.value;
    s.convergence = std::max(0.0, r.gap);
    const Matrix g = pframe_field(mu, config.p, config.sphere_constrained);
    CompensatedSum acc;
    for (int i = 0; i < mu.size(); ++i) acc += mu.weights()(i) * g.row(i).squaredNorm();
    s.integrand = acc.value();
  }
  if (!std::isfinite(s.energy) || !std::isfinite(s.integrand)) {
    throw Error(ErrorCode::NonFinite, "flow state has non-finite energy");
  }
  return s;
}

class TrajectoryBuilder {
 public:
  void record(int step, double t, const DiscreteMeasure& mu, const StateMetrics& s, double dissipation,
              double w2) {
    traj_.steps.push_back(step);
    traj_.times.push_back(t);
    traj_.states.push_back(mu);
    traj_.tp_values.push_back(s.tp);
    traj_.energy_values.push_back(s.energy);
    traj_.m2_values.push_back(s.m2);
    traj_.energy_integrand.push_back(s.integrand);
    traj_.dissipation.push_back(dissipation);
    traj_.spectra.emplace_back(s.lambda_min, s.lambda_max);
    traj_.w2_steps.push_back(w2);
  }

  int last_recorded_step() const { return traj_.steps.empty() ? -1 : traj_.steps.back(); }
  FlowTrajectory& trajectory() { return traj_; }

 private:
  FlowTrajectory traj_;
};

// A negative `dissipation` asks the driver to integrate the integrand with
// the trapezoid rule.
struct StepOutcome {
  DiscreteMeasure measure;
  double dissipation = 0.0;
  double w_step = 0.0;
  bool stayed = false;
};

FlowTrajectory drive(const DiscreteMeasure& mu0, const FlowConfig& config,
                     const std::function<StepOutcome(const DiscreteMeasure&, const StateMetrics&)>& advance,
                     const std::function<double(const StepOutcome&)>& integrand_of,
                     double time_step) {
  TrajectoryBuilder builder;
  DiscreteMeasure mu = mu0;
  StateMetrics current = measure_state(mu, config);
  const StateMetrics initial = current;
  const bool check_tight = config.potential == PotentialKind::Tightness || config.p == 2;
  const double target = config.stop_tp * initial.convergence;
  const double stall_floor = config.stop_stall * std::abs(initial.energy);
  if (config.scheme == Scheme::Jko) current.integrand = 0.0;
  builder.record(0, 0.0, mu, current, 0.0, 0.0);

  auto converged = [&](const StateMetrics& s) {
    const bool small = s.convergence <= target || (initial.tight && check_tight);
    return small && (!check_tight || s.tight);
  };

  double dissipation = 0.0;
  double t = 0.0;
  int stall = 0;
  Termination termination = Termination::MaxSteps;
  DiscreteMeasure last_recorded = mu;
  int taken = 0;
  if (converged(current)) {
    termination = Termination::Converged;
  } else {
    for (int step = 1; step <= config.max_steps; ++step) {
      taken = step;
      StepOutcome out = [&] {
        try {
          return advance(mu, current);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFinite) throw;
          throw Error(ErrorCode::NonFinite, "at step " + std::to_string(step) + ": " + e.what());
        }
      }();
      StateMetrics next = [&] {
        try {
          return measure_state(out.measure, config);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFinite) throw;
          throw Error(ErrorCode::NonFinite, "at step " + std::to_string(step) + ": " + e.what());
        }
      }();
      const double integrand = integrand_of(out);
      if (!std::isnan(integrand)) next.integrand = integrand;
      dissipation += out.dissipation >= 0.0 ? out.dissipation
                                            : 0.5 * time_step * (current.integrand + next.integrand);
      t += time_step;
      const double decrease = current.energy - next.energy;
      mu = std::move(out.measure);
      if (out.stayed) ++builder.trajectory().inner_failures;

      bool done = false;
      if (converged(next)) {
        termination = Termination::Converged;
        done = true;
      } else if (next.m2 < kCollapseRatio * initial.m2) {
        termination = Termination::CollapsedToZero;
        done = true;
      } else {
        stall = (decrease < stall_floor && next.convergence > target) ? stall + 1 : 0;
        if (stall >= config.stall_window) {
          termination = Termination::Stalled;
          done = true;
        }
      }
      current = next;
      if (step % config.record_every == 0 || done || step == config.max_steps) {
        double w2 = out.w_step;
        if (config.scheme == Scheme::Jko && builder.last_recorded_step() != step - 1) {
          w2 = wasserstein_exact(last_recorded, mu, 2.0).distance;
        } else if (config.scheme == Scheme::Explicit) {
          w2 = 0.0;
        }
        builder.record(step, t, mu, current, dissipation, w2);
        last_recorded = mu;
      }
      if (done) break;
    }
  }
  FlowTrajectory traj = std::move(builder.trajectory());
  traj.termination = termination;
  traj.steps_taken = taken;
  return traj;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::Stalled: return "Stalled";
    case Termination::MaxSteps: return "MaxSteps";
    case Termination::CollapsedToZero: return "CollapsedToZero";
  }
  return "Unknown";
}

void FlowConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (!(epsilon >= 0.0)) fail("epsilon must be >= 0");
  if (max_steps < 1) fail("max_steps must be >= 1");
  if (record_every < 1) fail("record_every must be >= 1");
  if (stall_window < 1) fail("stall_window must be >= 1");
  if (!(stop_tp >= 0.0)) fail("stop_tp must be >= 0");
  if (!(tight_tol > 0.0)) fail("tight_tol must be > 0");
  if (potential == PotentialKind::PFrame) require_even_exponent(p);
  if (integrator == Integrator::Rk4 && (epsilon != 0.0 || potential != PotentialKind::Tightness)) {
    fail("rk4 integrates only the eps = 0 tightness field");
  }
  if (scheme == Scheme::Jko && potential != PotentialKind::Tightness) {
    fail("the minimizing-movement scheme drives the tightness potential only");
  }
  if (inner.inner_iters < 1) fail("inner_iters must be >= 1");
  if (inner.ot.kind == OtMethod::Kind::Entropic && !(inner.ot.reg > 0.0)) {
    throw Error(ErrorCode::InvalidRegularization, "entropic inner solver needs reg > 0");
  }
}

Matrix tp_velocity(const DiscreteMeasure& mu, double epsilon) {
  Matrix v = -4.0 * mu.points() * tightness_matrix(mu);
  if (epsilon != 0.0) {
    for (int i = 0; i < mu.size(); ++i) {
      const double n = v.row(i).norm();
      v.row(i) *= n > 0.0 ? std::pow(n, epsilon) : 0.0;
    }
  }
  return v;
}

double tp_dissipation_rate(const DiscreteMeasure& mu, double epsilon) {
  const Matrix g = 4.0 * mu.points() * tightness_matrix(mu);
  CompensatedSum acc;
  for (int i = 0; i < mu.size(); ++i) {
    const double n = g.row(i).norm();
    acc += mu.weights()(i) * distance_power(n, 2.0 + epsilon);
  }
  return acc.value();
}

DiscreteMeasure explicit_step(const DiscreteMeasure& mu, double dt, double epsilon) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be >= 0");
  return mu.with_points(mu.points() + dt * tp_velocity(mu, epsilon));
}

DiscreteMeasure rk4_step(const DiscreteMeasure& mu, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  const Matrix& x = mu.points();
  const Matrix k1 = tp_velocity(mu, 0.0);
  const Matrix k2 = tp_velocity(mu.with_points(x + 0.5 * dt * k1), 0.0);
  const Matrix k3 = tp_velocity(mu.with_points(x + 0.5 * dt * k2), 0.0);
  const Matrix k4 = tp_velocity(mu.with_points(x + dt * k3), 0.0);
  return mu.with_points(x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

DiscreteMeasure pframe_explicit_step(const DiscreteMeasure& mu, double dt, int p, bool sphere_constrained) {
  require_even_exponent(p);
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  Matrix y = mu.points() - dt * pframe_field(mu, p, sphere_constrained);
  if (sphere_constrained) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double n = y.row(i).norm();
      if (n > 0.0 && std::isfinite(n)) y.row(i) /= n;
    }
  }
  return mu.with_points(std::move(y));
}

FlowTrajectory run_explicit(const DiscreteMeasure& mu0, const FlowConfig& config) {
  config.validate();
  if (config.scheme != Scheme::Explicit) throw Error(ErrorCode::InvalidArgument, "run_explicit needs scheme = explicit");
  auto advance = [&](const DiscreteMeasure& mu, const StateMetrics&) {
    StepOutcome out{mu};
    out.dissipation = -1.0;  // trapezoid on the integrand
    if (config.potential == PotentialKind::PFrame) {
      out.measure = pframe_explicit_step(mu, config.dt, config.p, config.sphere_constrained);
    } else if (config.integrator == Integrator::Rk4) {
      out.measure = rk4_step(mu, config.dt);
    } else {
      out.measure = explicit_step(mu, config.dt, config.epsilon);
    }
    return out;
  };
  auto integrand = [](const StepOutcome&) { return std::nan(""); };
  return drive(mu0, config, advance, integrand, config.dt);
}

JkoStepResult jko_step(const DiscreteMeasure& mu, double tau, const InnerSolverConfig& config) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be > 0");
  if (config.inner_iters < 1) throw Error(ErrorCode::InvalidArgument, "inner_iters must be >= 1");
  const Matrix& x = mu.points();
  const Vector& w = mu.weights();
  const double stay_value = tp_value(mu);
  const double m2sq = moment_power(mu, 2.0);
  const double lr0 = config.inner_lr > 0.0 ? config.inner_lr : tau / (1.0 + 8.0 * tau * m2sq);

  struct Evaluation {
    double phi = 0.0;
    double transport = 0.0;  // W_2^2 on the solver's plan
    double tp = 0.0;
    Matrix coupling;
  };
  auto evaluate = [&](const Matrix& y) {
    const DiscreteMeasure nu = mu.with_points(y);
    const TransportResult ot = wasserstein(mu, nu, 2.0, config.ot);
    Evaluation e;
    e.transport = ot.plan.cost;
    e.tp = tp_value(nu);
    e.phi = ot.plan.cost / (2.0 * tau) + e.tp;
    e.coupling = ot.plan.coupling;
    return e;
  };
  // Gradient of Phi w.r.t. atom j, divided by w_j (the flow's metric).
  auto direction = [&](const Matrix& y, const Evaluation& e) {
    const DiscreteMeasure nu = mu.with_points(y);
    const Matrix t = tightness_matrix(nu);
    Matrix g = 4.0 * y * t;
    const Vector col_mass = e.coupling.colwise().sum().transpose();
    const Matrix pulled = e.coupling.transpose() * x;  // sum_i gamma_ij x_i
    for (int j = 0; j < mu.size(); ++j) {
      if (w(j) <= 0.0) {
        g.row(j).setZero();
        continue;
      }
      g.row(j) += (col_mass(j) * y.row(j) - pulled.row(j)) / (tau * w(j));
    }
    return g;
  };
  auto metric_norm_sq = [&](const Matrix& g) {
    CompensatedSum acc;
    for (int j = 0; j < mu.size(); ++j) acc += w(j) * g.row(j).squaredNorm();
    return acc.value();
  };

  Matrix y = x;
  Evaluation current = evaluate(y);
  // Entropic plans charge a positive cost even for staying put; measure
  // progress against that baseline (zero for the exact solver).
  const double stay_phi = stay_value + current.transport / (2.0 * tau);
  bool moved = false;
  double norm0 = -1.0;
  int it = 0;
  for (; it < config.inner_iters; ++it) {
    const Matrix g = direction(y, current);
    const double norm_sq = metric_norm_sq(g);
    if (norm0 < 0.0) norm0 = norm_sq;
    if (norm_sq == 0.0 || norm_sq <= config.inner_tol * config.inner_tol * norm0) break;
    double step = lr0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt, step *= 0.5) {
      const Matrix trial = y - step * g;
      if (!trial.allFinite()) continue;
      Evaluation e = evaluate(trial);
      if (e.phi <= current.phi - 1e-4 * step * norm_sq && e.phi <= stay_phi && e.tp <= stay_value) {
        y = trial;
        current = std::move(e);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    moved = true;
  }

  JkoStepResult result{mu};
  result.inner_iterations = it;
  if (!moved || !(current.phi <= stay_phi) || !(current.tp <= stay_value)) {
    result.stayed = stay_value > 0.0;
    result.objective = stay_value;
    result.w_step = 0.0;
    return result;
  }
  result.measure = mu.with_points(y);
  double transport = current.transport;
  if (config.ot.kind != OtMethod::Kind::Exact) transport = wasserstein_exact(mu, result.measure, 2.0).plan.cost;
  result.objective = transport / (2.0 * tau) + current.tp;
  result.w_step = std::sqrt(std::max(0.0, transport));
  return result;
}

FlowTrajectory run_jko(const DiscreteMeasure& mu0, const FlowConfig& config) {
  config.validate();
  if (config.scheme != Scheme::Jko) throw Error(ErrorCode::InvalidArgument, "run_jko needs scheme = jko");
  const double tau = config.tau;
  auto advance = [&](const DiscreteMeasure& mu, const StateMetrics&) {
    JkoStepResult r = jko_step(mu, tau, config.inner);
    StepOutcome out{std::move(r.measure)};
    out.w_step = r.w_step;
    out.stayed = r.stayed;
    out.dissipation = r.w_step * r.w_step / (2.0 * tau);
    return out;
  };
  // Discrete speed squared over two, so tau * integrand is the step's dissipation.
  auto integrand = [tau](const StepOutcome& out) { return out.w_step * out.w_step / (2.0 * tau * tau); };
  return drive(mu0, config, advance, integrand, tau);
}

FlowTrajectory run_flow(const DiscreteMeasure& mu0, const FlowConfig& config) {
  return config.scheme == Scheme::Jko ? run_jko(mu0, config) : run_explicit(mu0, config);
}

EnergyReport energy_report(const FlowTrajectory& trajectory, std::size_t a, std::size_t b) {
  if (a >= b || b >= trajectory.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "energy_report needs a < b < " + std::to_string(trajectory.size()));
  }
  EnergyReport report;
  report.lhs = trajectory.dissipation[b] - trajectory.dissipation[a] + trajectory.energy_values[b];
  report.rhs = trajectory.energy_values[a];
  report.holds = report.lhs <= report.rhs + 1e-6 * (1.0 + report.rhs);
  return report;
}

}  // namespace framescope
