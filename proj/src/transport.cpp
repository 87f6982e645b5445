#include "framescope/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "framescope/error.hpp"
#include "framescope/numeric.hpp"

namespace framescope {

namespace {

constexpr double kPruneWeight = 1e-15;
constexpr int kSweepsBeforeNewton = 200;

struct Cell {
  int row;
  int col;
};

// Primal transportation simplex. The basis is a spanning tree on the
// bipartite graph rows + cols with exactly m + n - 1 cells (zero-flow cells
// allowed). Entering cells are priced by Dantzig's rule; after a run of
// degenerate pivots it switches to Bland's rule until the objective moves
// again, which rules out cycling. All ties go to the smallest row-major index.
class TransportationSimplex {
 public:
  TransportationSimplex(const Vector& supply, const Vector& demand, const Matrix& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        flow_(Matrix::Zero(m_, n_)),
        is_basic_(static_cast<std::size_t>(m_) * n_, 0),
        potential_(static_cast<std::size_t>(m_ + n_), 0.0) {
    north_west_corner(supply, demand);
  }

  Matrix solve() {
    const double cmax = cost_.size() > 0 ? cost_.cwiseAbs().maxCoeff() : 0.0;
    const double tol = 1e-12 * cmax;
    const long max_pivots = 50L * m_ * n_ + 1000;
    int degenerate_streak = 0;
    for (long pivot = 0; pivot < max_pivots; ++pivot) {
      compute_potentials();
      const bool bland = degenerate_streak > kDegenerateLimit;
      const auto entering = price(tol, bland);
      if (!entering) return flow_;
      const double theta = pivot_on(*entering);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
    throw Error(ErrorCode::SolverFailure, "transportation simplex exceeded its pivot budget");
  }

 private:
  static constexpr int kDegenerateLimit = 50;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

  void add_basic(int i, int j, double amount) {
    flow_(i, j) = amount;
    is_basic_[index(i, j)] = 1;
    basis_.push_back({i, j});
  }

  void north_west_corner(const Vector& supply, const Vector& demand) {
    std::vector<double> left(supply.data(), supply.data() + m_);
    std::vector<double> need(demand.data(), demand.data() + n_);
    int i = 0;
    int j = 0;
    while (true) {
      const double q = std::max(0.0, std::min(left[i], need[j]));
      add_basic(i, j, q);
      left[i] -= q;
      need[j] -= q;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (left[i] <= need[j]) {
        ++i;  // on a tie only the row advances; the next cell carries zero flow
      } else {
        ++j;
      }
    }
  }

  void build_adjacency() {
    adjacency_.assign(static_cast<std::size_t>(m_ + n_), {});
    for (int b = 0; b < static_cast<int>(basis_.size()); ++b) {
      adjacency_[basis_[b].row].push_back({m_ + basis_[b].col, b});
      adjacency_[m_ + basis_[b].col].push_back({basis_[b].row, b});
    }
  }

  void compute_potentials() {
    build_adjacency();
    std::vector<char> seen(static_cast<std::size_t>(m_ + n_), 0);
    std::vector<int> queue{0};
    queue.reserve(static_cast<std::size_t>(m_ + n_));
    potential_[0] = 0.0;
    seen[0] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int node = queue[head];
      for (const auto& [next, b] : adjacency_[node]) {
        if (seen[next]) continue;
        const double c = cost_(basis_[b].row, basis_[b].col);
        potential_[next] = c - potential_[node];  // u_i + v_j = c_ij
        seen[next] = 1;
        queue.push_back(next);
      }
    }
    if (static_cast<int>(queue.size()) != m_ + n_) {
      throw Error(ErrorCode::SolverFailure, "transportation basis is not a spanning tree");
    }
  }

  std::optional<Cell> price(double tol, bool bland) const {
    std::optional<Cell> best;
    double best_reduced = -tol;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (is_basic_[index(i, j)]) continue;
        const double reduced = cost_(i, j) - potential_[i] - potential_[m_ + j];
        if (reduced < best_reduced) {
          if (bland) return Cell{i, j};
          best_reduced = reduced;
          best = Cell{i, j};
        }
      }
    }
    return best;
  }

  // Returns the step length theta.
  double pivot_on(Cell entering) {
    // Path in the tree from row node `entering.row` to column node.
    const int start = entering.row;
    const int goal = m_ + entering.col;
    std::vector<int> parent_edge(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<int> parent_node(static_cast<std::size_t>(m_ + n_), -1);
    std::vector<int> queue{start};
    parent_node[start] = start;
    for (std::size_t head = 0; head < queue.size() && parent_node[goal] < 0; ++head) {
      const int node = queue[head];
      for (const auto& [next, b] : adjacency_[node]) {
        if (parent_node[next] >= 0) continue;
        parent_node[next] = node;
        parent_edge[next] = b;
        queue.push_back(next);
      }
    }
    if (parent_node[goal] < 0) throw Error(ErrorCode::SolverFailure, "no cycle through entering cell");

    // Walking back from the column node, edges alternate -, +, -, ...
    std::vector<int> minus;
    std::vector<int> plus;
    bool sign_minus = true;
    for (int node = goal; node != start; node = parent_node[node]) {
      (sign_minus ? minus : plus).push_back(parent_edge[node]);
      sign_minus = !sign_minus;
    }

    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    for (const int b : minus) {
      const double x = flow_(basis_[b].row, basis_[b].col);
      const bool better = x < theta ||
                          (x == theta && index(basis_[b].row, basis_[b].col) <
                                             index(basis_[leaving].row, basis_[leaving].col));
      if (better) {
        theta = x;
        leaving = b;
      }
    }
    for (const int b : minus) flow_(basis_[b].row, basis_[b].col) -= theta;
    for (const int b : plus) flow_(basis_[b].row, basis_[b].col) += theta;

    const Cell out = basis_[leaving];
    flow_(out.row, out.col) = 0.0;
    is_basic_[index(out.row, out.col)] = 0;
    basis_[leaving] = entering;
    is_basic_[index(entering.row, entering.col)] = 1;
    flow_(entering.row, entering.col) = theta;
    return theta;
  }

  int m_;
  int n_;
  const Matrix& cost_;
  Matrix flow_;
  std::vector<char> is_basic_;
  std::vector<Cell> basis_;
  std::vector<double> potential_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

std::vector<int> active_atoms(const Vector& weights) {
  std::vector<int> active;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) >= kPruneWeight) active.push_back(static_cast<int>(i));
  }
  return active;
}

Matrix select_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

Vector select(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(idx[k]);
  return out;
}

void check_inputs(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  if (mu.dim() != nu.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "measures live in R^" + std::to_string(mu.dim()) +
                                                  " and R^" + std::to_string(nu.dim()));
  }
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidExponent, "transport exponent must be >= 1");
}

double coupling_cost(const Matrix& coupling, const Matrix& cost) {
  CompensatedSum acc;
  for (Eigen::Index j = 0; j < coupling.cols(); ++j) {
    for (Eigen::Index i = 0; i < coupling.rows(); ++i) {
      if (coupling(i, j) != 0.0) acc += coupling(i, j) * cost(i, j);
    }
  }
  return acc.value();
}

double root(double cost, double p) {
  if (cost <= 0.0) return 0.0;
  return p == 2.0 ? std::sqrt(cost) : std::pow(cost, 1.0 / p);
}

TransportPlan make_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, OtMethod method,
                        const std::vector<int>& rows, const std::vector<int>& cols,
                        const Matrix& reduced) {
  TransportPlan plan;
  plan.coupling = Matrix::Zero(mu.size(), nu.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      plan.coupling(rows[a], cols[b]) =
          std::max(0.0, reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
  }
  plan.source_points = mu.points();
  plan.target_points = nu.points();
  plan.source_weights = mu.weights();
  plan.target_weights = nu.weights();
  plan.p = p;
  plan.method = method;
  plan.cost = coupling_cost(plan.coupling, cost_matrix(mu.points(), nu.points(), p));
  return plan;
}

std::string format_short(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

double log_sum_exp(const double* x, Eigen::Index n, Eigen::Index stride) {
  double c = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) c = std::max(c, x[k * stride]);
  if (!std::isfinite(c)) return c;
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) s += std::exp(x[k * stride] - c);
  return c + std::log(s);
}

// Makes a nonnegative matrix exactly match marginals (a, b): scale rows and
// columns down where they overshoot, then spread the remaining deficit as a
// rank-one correction.
Matrix round_to_feasible(Matrix plan, const Vector& a, const Vector& b) {
  const Vector r = plan.rowwise().sum();
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (r(i) > a(i)) plan.row(i) *= a(i) / r(i);
  }
  const Vector c = plan.colwise().sum().transpose();
  for (Eigen::Index j = 0; j < plan.cols(); ++j) {
    if (c(j) > b(j)) plan.col(j) *= b(j) / c(j);
  }
  const Vector err_r = (a - plan.rowwise().sum()).cwiseMax(0.0);
  const Vector err_c = (b - plan.colwise().sum().transpose()).cwiseMax(0.0);
  const double mass = err_c.sum();
  if (mass > 0.0) plan += err_r * err_c.transpose() / mass;
  return plan;
}

}  // namespace

double TransportPlan::marginal_violation() const {
  const double row = (coupling.rowwise().sum() - source_weights).cwiseAbs().maxCoeff();
  const double col = (coupling.colwise().sum().transpose() - target_weights).cwiseAbs().maxCoeff();
  return std::max(row, col);
}

Matrix cost_matrix(const Matrix& source, const Matrix& target, double p) {
  Matrix c(source.rows(), target.rows());
  for (Eigen::Index i = 0; i < source.rows(); ++i) {
    for (Eigen::Index j = 0; j < target.rows(); ++j) {
      c(i, j) = distance_power((source.row(i) - target.row(j)).norm(), p);
    }
  }
  return c;
}

Matrix solve_transportation(const Vector& supply, const Vector& demand, const Matrix& cost) {
  if (supply.size() == 0 || demand.size() == 0 || cost.rows() != supply.size() ||
      cost.cols() != demand.size()) {
    throw Error(ErrorCode::DimensionMismatch, "transportation problem shape mismatch");
  }
  TransportationSimplex simplex(supply, demand, cost);
  return simplex.solve();
}

TransportResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  check_inputs(mu, nu, p);
  const auto rows = active_atoms(mu.weights());
  const auto cols = active_atoms(nu.weights());
  const Matrix cost = cost_matrix(select_rows(mu.points(), rows), select_rows(nu.points(), cols), p);
  const Matrix reduced = solve_transportation(select(mu.weights(), rows), select(nu.weights(), cols), cost);
  TransportResult result;
  result.plan = make_plan(mu, nu, p, OtMethod::exact(), rows, cols, reduced);
  result.distance = root(result.plan.cost, p);
  return result;
}

TransportResult wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                                     const EntropicOptions& options) {
  check_inputs(mu, nu, p);
  if (!(options.reg > 0.0) || !std::isfinite(options.reg)) {
    throw Error(ErrorCode::InvalidRegularization, "entropic regularization must be > 0");
  }
  const auto rows = active_atoms(mu.weights());
  const auto cols = active_atoms(nu.weights());
  const Vector a = select(mu.weights(), rows);
  const Vector b = select(nu.weights(), cols);
  const Matrix cost = cost_matrix(select_rows(mu.points(), rows), select_rows(nu.points(), cols), p);
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();

  Vector f = Vector::Zero(n);
  Vector g = Vector::Zero(m);
  Matrix scratch(n, m);

  auto sweep = [&](double eps) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) scratch(i, j) = (g(j) - cost(i, j)) / eps;
      f(i) = eps * (log_a(i) - log_sum_exp(&scratch(i, 0), m, n));
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) scratch(i, j) = (f(i) - cost(i, j)) / eps;
      g(j) = eps * (log_b(j) - log_sum_exp(&scratch(0, j), n, 1));
    }
  };
  auto plan_at = [&](double eps) {
    Matrix plan(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) plan(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / eps);
    }
    return plan;
  };
  auto marginal_gap = [&](const Matrix& plan) {
    return (plan.rowwise().sum() - a).cwiseAbs().sum() + (plan.colwise().sum().transpose() - b).cwiseAbs().sum();
  };

  // Anneal the regularization from the cost scale down to the target; the
  // dual potentials carry over between stages.
  const double cmax = cost.size() > 0 ? cost.maxCoeff() : 0.0;
  int iterations = 0;
  for (double eps = std::max(cmax, options.reg); eps > options.reg; eps = std::max(options.reg, 0.5 * eps)) {
    for (int k = 0; k < 20; ++k) sweep(eps);
    iterations += 20;
  }
  double violation = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= kSweepsBeforeNewton && iterations < options.max_iter; ++k) {
    sweep(options.reg);
    ++iterations;
    if (k % 10 == 0) {
      violation = marginal_gap(plan_at(options.reg));
      if (violation <= options.tol) break;
    }
  }

  // Sinkhorn stalls on near-degenerate instances at small reg; finish with
  // damped Newton ascent on the (concave) dual, last potential held fixed.
  const double reg = options.reg;
  auto plan_at_potentials = [&](const Vector& fv, const Vector& gv) {
    Matrix plan(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) plan(i, j) = std::exp((fv(i) + gv(j) - cost(i, j)) / reg);
    return plan;
  };
  auto dual_value = [&](const Vector& fv, const Vector& gv) {
    double mass = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < n; ++i) mass += std::exp((fv(i) + gv(j) - cost(i, j)) / reg);
    return a.dot(fv) + b.dot(gv) - reg * mass;
  };
  auto newton_step = [&]() {
    const Matrix plan = plan_at(reg);
    const Vector r = plan.rowwise().sum();
    const Vector c = plan.colwise().sum().transpose();
    const Eigen::Index k = n + m - 1;
    Matrix h = Matrix::Zero(k, k);
    Vector grad(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      h(i, i) = r(i);
      grad(i) = a(i) - r(i);
    }
    for (Eigen::Index j = 0; j + 1 < m; ++j) {
      h(n + j, n + j) = c(j);
      grad(n + j) = b(j) - c(j);
      for (Eigen::Index i = 0; i < n; ++i) h(i, n + j) = h(n + j, i) = plan(i, j);
    }
    const Vector delta = reg * h.ldlt().solve(grad);
    if (!delta.allFinite()) return false;
    const double base = dual_value(f, g);
    const double slope = grad.dot(delta);
    const double gap = marginal_gap(plan);
    for (double t = 1.0; t > 1e-12; t *= 0.5) {
      Vector ft = f + t * delta.head(n);
      Vector gt = g;
      gt.head(m - 1) += t * delta.tail(m - 1);
      // Close to the optimum the dual gain drowns in rounding; a shrinking
      // marginal gap is then the acceptance signal.
      const double value = dual_value(ft, gt);
      if (!std::isfinite(value)) continue;
      const double trial_gap = marginal_gap(plan_at_potentials(ft, gt));
      if (value >= base + 1e-4 * t * slope || trial_gap < gap) {
        f = std::move(ft);
        g = std::move(gt);
        return true;
      }
    }
    return false;
  };
  while (!(violation <= options.tol) && iterations < options.max_iter) {
    if (!newton_step()) break;
    ++iterations;
    violation = marginal_gap(plan_at(reg));
  }
  if (!(violation <= options.tol)) {
    violation = marginal_gap(plan_at(options.reg));
    if (!(violation <= options.tol)) {
      throw Error(ErrorCode::NonConvergence,
                  "Sinkhorn marginal violation " + format_short(violation) + " after " +
                      std::to_string(iterations) + " iterations; increase reg");
    }
  }
  const Matrix feasible = round_to_feasible(plan_at(options.reg), a, b);
  TransportResult result;
  result.plan = make_plan(mu, nu, p, OtMethod::entropic(options.reg), rows, cols, feasible);
  result.distance = root(result.plan.cost, p);
  return result;
}

TransportResult wasserstein(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                            const OtMethod& method) {
  if (method.kind == OtMethod::Kind::Exact) return wasserstein_exact(mu, nu, p);
  EntropicOptions options;
  options.reg = method.reg;
  return wasserstein_entropic(mu, nu, p, options);
}

double plan_cost(const TransportPlan& plan, double q) {
  if (!(q >= 1.0)) throw Error(ErrorCode::InvalidExponent, "cost exponent must be >= 1");
  return root(coupling_cost(plan.coupling, cost_matrix(plan.source_points, plan.target_points, q)), q);
}

}  // namespace framescope
