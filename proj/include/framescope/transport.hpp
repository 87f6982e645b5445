#pragma once

#include <cstdint>

#include "framescope/measure.hpp"

namespace framescope {

struct OtMethod {
  enum class Kind { Exact, Entropic };
  Kind kind = Kind::Exact;
  double reg = 0.0;  // only meaningful for Entropic

  static OtMethod exact() { return {Kind::Exact, 0.0}; }
  static OtMethod entropic(double reg) { return {Kind::Entropic, reg}; }
};

/// Coupling between a source measure (rows) and a target measure (columns).
/// The supports are carried along so the plan can be re-costed with any
/// exponent.
struct TransportPlan {
  Matrix coupling;
  Matrix source_points;
  Matrix target_points;
  Vector source_weights;
  Vector target_weights;
  double p = 2.0;
  double cost = 0.0;  // sum_ij gamma_ij |x_i - y_j|^p
  OtMethod method;

  int rows() const { return static_cast<int>(coupling.rows()); }
  int cols() const { return static_cast<int>(coupling.cols()); }
  /// max over rows/cols of |marginal - weight|.
  double marginal_violation() const;
};

struct TransportResult {
  double distance = 0.0;
  TransportPlan plan;
};

struct EntropicOptions {
  double reg = 1e-3;
  int max_iter = 200000;
  double tol = 1e-9;
};

/// |x_i - y_j|^p for all pairs.
Matrix cost_matrix(const Matrix& source, const Matrix& target, double p);

/// Exact transportation-problem solve (primal simplex on the spanning-tree
/// basis). Returns a basic optimal coupling.
Matrix solve_transportation(const Vector& supply, const Vector& demand, const Matrix& cost);

/// W_p via the exact solver; distance = cost^(1/p).
TransportResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

/// Log-domain Sinkhorn with regularization annealing, followed by a rounding
/// step that makes the plan exactly feasible. The reported distance is the
/// transport cost of that feasible plan, hence an upper bound on W_p.
TransportResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                     const EntropicOptions& options);

TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                            const OtMethod& method);

/// (sum_ij gamma_ij |x_i - y_j|^q)^(1/q) on the stored coupling.
double plan_cost(const TransportPlan& plan, double q);

}  // namespace framescope
