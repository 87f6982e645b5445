#include "framescope/verify.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "framescope/error.hpp"
#include "framescope/generate.hpp"
#include "framescope/io.hpp"
#include "framescope/numeric.hpp"
#include "framescope/potentials.hpp"
#include "framescope/transport.hpp"

namespace framescope {

namespace {

constexpr int kMaxPreconditionRetries = 1000;

CheckResult make_result(std::string name, double lhs, double rhs, double tolerance, json witness) {
  CheckResult r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tolerance;
  r.slack = rhs - lhs;
  r.holds = lhs <= rhs + tolerance;
  r.witness = std::move(witness);
  r.witness["check"] = r.name;
  return r;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, Eigen::Index cols) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw Error(ErrorCode::ParseError, "ragged matrix in witness");
    for (Eigen::Index k = 0; k < cols; ++k) m(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  }
  return m;
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// max_i |fd_i - exact_i| / max_i |exact_i|, over every coordinate.
double fd_relative_error(const DiscreteMeasure& mu, const Matrix& exact, double h,
                         const std::function<double(const DiscreteMeasure&)>& f) {
  Matrix x = mu.points();
  double worst = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    for (int k = 0; k < mu.dim(); ++k) {
      const double saved = x(i, k);
      x(i, k) = saved + h;
      const double up = f(mu.with_points(x));
      x(i, k) = saved - h;
      const double down = f(mu.with_points(x));
      x(i, k) = saved;
      worst = std::max(worst, std::abs((up - down) / (2.0 * h) - exact(i, k)));
    }
  }
  const double scale = exact.cwiseAbs().maxCoeff();
  if (scale == 0.0) return worst == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return worst / scale;
}

double log_log_slope(const std::vector<double>& h, const std::vector<double>& r) {
  const auto n = static_cast<double>(h.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    const double lx = std::log(h[k]);
    const double ly = std::log(r[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

CheckResult check_frame_op_continuity(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const double m_mu = moment(mu, 2.0);
  const double m_nu = moment(nu, 2.0);
  if (mu.dim() != nu.dim()) throw Error(ErrorCode::DimensionMismatch, "measures differ in dimension");
  if (m_nu > std::sqrt(2.0) * m_mu) {
    throw Error(ErrorCode::PreconditionViolated, "needs M_2(nu) <= sqrt(2) M_2(mu)");
  }
  const double lhs =
      SymmetricOperator(frame_operator(nu).matrix() - frame_operator(mu).matrix()).norm();
  const double w2 = wasserstein_exact(mu, nu, 2.0).distance;
  const double rhs = std::sqrt(6.0) * w2 * m_mu;
  return make_result("frame-op", lhs, rhs, 1e-9, json{{"mu", measure_to_json(mu)}, {"nu", measure_to_json(nu)}});
}

CheckResult check_nearest_tight_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu_tight,
                                      double tight_tol) {
  if (mu.dim() != nu_tight.dim()) throw Error(ErrorCode::DimensionMismatch, "measures differ in dimension");
  if (!diagnostics(nu_tight, kDefaultFrameTol, tight_tol).is_tight) {
    throw Error(ErrorCode::PreconditionViolated, "reference measure is not tight");
  }
  const FrameDiagnostics dmu = diagnostics(mu, kDefaultFrameTol, tight_tol);
  if (dmu.is_tight) throw Error(ErrorCode::PreconditionViolated, "measure is already tight");
  const double lhs = dmu.tightness_gap / (4.0 * (moment(mu, 2.0) + moment(nu_tight, 2.0)));
  const double rhs = wasserstein_exact(mu, nu_tight, 2.0).distance;
  return make_result("nearest-tight", lhs, rhs, 1e-9,
                     json{{"mu", measure_to_json(mu)}, {"nu", measure_to_json(nu_tight)}, {"tight_tol", tight_tol}});
}

CheckResult check_tight_iff(const DiscreteMeasure& mu, double tight_tol) {
  const double m2sq = moment_power(mu, 2.0);
  if (m2sq <= 1e-12) throw Error(ErrorCode::PreconditionViolated, "measure is (numerically) delta_0");
  const FrameDiagnostics diag = diagnostics(mu, kDefaultFrameTol, tight_tol);
  const int d = mu.dim();
  const double m4 = m2sq * m2sq;
  const double gap = pfp(mu) - m4 / d;
  const double t = tight_tol * std::max(1.0, diag.upper_bound);
  json witness{{"mu", measure_to_json(mu)}, {"tight_tol", tight_tol}};
  if (diag.is_tight) {
    CheckResult r = make_result("tight-iff", std::abs(gap), d * t * t / 4.0, 1e-10 * m4, std::move(witness));
    r.equality = r.holds;
    return r;
  }
  return make_result("tight-iff", t * t / d, gap, 1e-15 * m4, std::move(witness));
}

CheckResult check_tp_operator_bound(const DiscreteMeasure& mu, double tight_tol) {
  const PotentialReport report = tightness_potential(mu);
  const FrameDiagnostics diag = diagnostics(mu, kDefaultFrameTol, tight_tol);
  CheckResult r = make_result("tp-operator", *report.operator_norm, std::sqrt(std::max(0.0, report.value)), 1e-9,
                              json{{"mu", measure_to_json(mu)}, {"tight_tol", tight_tol}});
  r.equality = diag.is_tight;
  return r;
}

CheckResult check_subdifferential_expansion(const DiscreteMeasure& mu, const Matrix& direction,
                                            std::span<const double> h_values) {
  if (direction.rows() != mu.size() || direction.cols() != mu.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "direction field must have one vector per atom");
  }
  if (h_values.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two step sizes");
  const double base = tp_value(mu);
  const Matrix grad = tp_gradient(mu).euclidean();
  const double linear = grad.cwiseProduct(direction).sum();
  const double floor = 1e-13 * (1.0 + base);
  std::vector<double> hs;
  std::vector<double> rs;
  for (const double h : h_values) {
    const double moved = tp_value(mu.with_points(mu.points() + h * direction));
    const double r = std::abs(moved - base - h * linear);
    if (r > floor) {
      hs.push_back(h);
      rs.push_back(r);
    }
  }
  // Residuals at the rounding floor mean the first-order expansion is exact
  // to working precision; report the nominal second-order slope.
  const double slope = hs.size() >= 2 ? log_log_slope(hs, rs) : 2.0;
  json witness{{"mu", measure_to_json(mu)},
               {"direction", matrix_to_json(direction)},
               {"h", std::vector<double>(h_values.begin(), h_values.end())}};
  return make_result("expansion", 1.9, slope, 0.0, std::move(witness));
}

CheckResult check_pframe_bound(const DiscreteMeasure& mu, int p) {
  const PotentialReport report = pframe_potential(mu, p);
  CheckResult r = make_result("pframe", report.lower_bound, report.value, 1e-10 * (1.0 + std::abs(report.value)),
                              json{{"mu", measure_to_json(mu)}, {"p", p}});
  r.equality = std::abs(report.gap) <= 1e-10 * (1.0 + std::abs(report.value));
  return r;
}

CheckResult check_even_moment_gradient(const DiscreteMeasure& mu, int k, double h) {
  const Matrix exact = even_moment_gradient(mu, k).euclidean();
  auto f = [k](const DiscreteMeasure& m) { return ipow(moment_power(m, 2.0), k); };
  const double err = fd_relative_error(mu, exact, h, f);
  return make_result("moment-grad", err, 1e-5, 0.0, json{{"mu", measure_to_json(mu)}, {"k", k}, {"h", h}});
}

CheckResult check_tp_gradient(const DiscreteMeasure& mu, double h) {
  const Matrix exact = tp_gradient(mu).euclidean();
  const double err = fd_relative_error(mu, exact, h, [](const DiscreteMeasure& m) { return tp_value(m); });
  return make_result("tp-grad", err, 1e-5, 0.0, json{{"mu", measure_to_json(mu)}, {"h", h}});
}

CheckResult check_barycenter_continuity(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const Vector& z,
                                        int p) {
  require_even_exponent(p);
  const double lhs = (pframe_barycenter(mu, z, p) - pframe_barycenter(nu, z, p)).norm();
  const double wp = wasserstein_exact(mu, nu, p).distance;
  const double m_mu = moment(mu, p);
  const double m_nu = moment(nu, p);
  double bracket = ipow(m_mu, p - 1);
  for (int i = 1; i <= p - 1; ++i) bracket += ipow(m_nu, p - i) * ipow(m_mu, i - 1);
  const double rhs = 2.0 * p * ipow(z.norm(), p - 1) * wp * bracket;
  return make_result("barycenter", lhs, rhs, 1e-9 * (1.0 + rhs),
                     json{{"mu", measure_to_json(mu)}, {"nu", measure_to_json(nu)}, {"z", vector_to_json(z)}, {"p", p}});
}

CheckResult replay_check(const json& witness) {
  try {
    const std::string name = witness.at("check").get<std::string>();
    const DiscreteMeasure mu = measure_from_json(witness.at("mu"));
    if (name == "frame-op") return check_frame_op_continuity(mu, measure_from_json(witness.at("nu")));
    if (name == "nearest-tight") {
      return check_nearest_tight_bound(mu, measure_from_json(witness.at("nu")), witness.at("tight_tol").get<double>());
    }
    if (name == "tight-iff") return check_tight_iff(mu, witness.at("tight_tol").get<double>());
    if (name == "tp-operator") return check_tp_operator_bound(mu, witness.at("tight_tol").get<double>());
    if (name == "expansion") {
      const Matrix v = matrix_from_json(witness.at("direction"), mu.dim());
      const auto h = witness.at("h").get<std::vector<double>>();
      return check_subdifferential_expansion(mu, v, h);
    }
    if (name == "pframe") return check_pframe_bound(mu, witness.at("p").get<int>());
    if (name == "moment-grad") {
      return check_even_moment_gradient(mu, witness.at("k").get<int>(), witness.at("h").get<double>());
    }
    if (name == "tp-grad") return check_tp_gradient(mu, witness.at("h").get<double>());
    if (name == "barycenter") {
      const auto z = witness.at("z").get<std::vector<double>>();
      return check_barycenter_continuity(mu, measure_from_json(witness.at("nu")),
                                         Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size())),
                                         witness.at("p").get<int>());
    }
    throw Error(ErrorCode::ParseError, "unknown check '" + name + "' in witness");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("witness: ") + e.what());
  }
}

namespace {

Matrix gaussian_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

// Tight measure: weighted, scaled, rotated copies of an ONB, or a rotated
// harmonic frame.
DiscreteMeasure random_tight(Rng& rng, int d) {
  const Matrix q = random_orthogonal(rng, d);
  const double scale = rng.uniform(0.3, 3.0);
  if (rng.uniform() < 0.5) {
    const DiscreteMeasure h = harmonic_frame(d, d + 1 + rng.uniform_int(0, 4));
    return h.transformed(q).dilated(scale);
  }
  // Weighted basis copies: atom e_k / sqrt(copies w) with weight w contributes e_k e_k^T / copies.
  const int copies = rng.uniform_int(1, 3);
  const int m = d * copies;
  Vector w(m);
  for (int a = 0; a < m; ++a) w(a) = rng.uniform(0.2, 1.0);
  w /= w.sum();
  Matrix x = Matrix::Zero(m, d);
  for (int a = 0; a < m; ++a) x(a, a % d) = 1.0 / std::sqrt(copies * w(a));
  return DiscreteMeasure::create(x * q.transpose() * scale, w);
}

using Instance = std::function<CheckResult(Rng&)>;

const std::map<std::string, Instance>& suite_table() {
  static const std::map<std::string, Instance> table = {
      {"frame-op",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 5);
         const DiscreteMeasure mu = random_measure(rng, d, rng.uniform_int(1, 20));
         if (rng.uniform() < 0.5) {
           const double sigma = rng.uniform(0.01, 1.0);
           const DiscreteMeasure nu = mu.with_points(mu.points() + sigma * gaussian_matrix(rng, mu.size(), d));
           return check_frame_op_continuity(mu, nu);
         }
         return check_frame_op_continuity(mu, random_measure(rng, d, rng.uniform_int(1, 20)));
       }},
      {"nearest-tight",
       [](Rng& rng) {
         const int d = rng.uniform_int(2, 5);
         const DiscreteMeasure mu = random_measure(rng, d, rng.uniform_int(1, 20));
         return check_nearest_tight_bound(mu, random_tight(rng, d));
       }},
      {"tight-iff",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 6);
         if (rng.uniform() < 0.5) return check_tight_iff(random_tight(rng, d));
         return check_tight_iff(random_measure(rng, d, rng.uniform_int(1, 20)));
       }},
      {"tp-operator",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 6);
         return check_tp_operator_bound(random_measure(rng, d, rng.uniform_int(1, 30)));
       }},
      {"expansion",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 5);
         const DiscreteMeasure mu = random_measure(rng, d, rng.uniform_int(1, 20));
         Matrix v = gaussian_matrix(rng, mu.size(), d);
         v /= v.norm();
         const double h[] = {1e-2, 1e-3, 1e-4, 1e-5};
         return check_subdifferential_expansion(mu, v, h);
       }},
      {"pframe",
       [](Rng& rng) {
         if (rng.uniform() < 0.5) return check_pframe_bound(random_unit_norm(rng, 2, rng.uniform_int(1, 20)), 4);
         const int d = rng.uniform_int(1, 5);
         const int p = 2 * rng.uniform_int(1, 3);
         return check_pframe_bound(random_measure(rng, d, rng.uniform_int(1, 20)), p);
       }},
      {"moment-grad",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 5);
         return check_even_moment_gradient(random_measure(rng, d, rng.uniform_int(1, 20)), rng.uniform_int(1, 3));
       }},
      {"tp-grad",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 5);
         return check_tp_gradient(random_measure(rng, d, rng.uniform_int(1, 20)));
       }},
      {"barycenter",
       [](Rng& rng) {
         const int d = rng.uniform_int(1, 4);
         const int p = rng.uniform() < 0.5 ? 2 : 4;
         const DiscreteMeasure mu = random_measure(rng, d, rng.uniform_int(1, 12));
         const DiscreteMeasure nu = random_measure(rng, d, rng.uniform_int(1, 12));
         Vector z(d);
         for (int k = 0; k < d; ++k) z(k) = rng.normal();
         return check_barycenter_continuity(mu, nu, z, p);
       }},
  };
  return table;
}

std::uint64_t suite_stream(const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

SuiteOutcome run_suite(const std::vector<std::string>& suites, int instances, std::uint64_t seed) {
  if (instances < 1) throw Error(ErrorCode::InvalidArgument, "need at least one instance per suite");
  std::vector<std::string> names;
  for (const auto& s : suites) {
    if (s == "all") {
      for (const char* n : kSuiteNames) names.emplace_back(n);
    } else if (suite_table().count(s)) {
      names.push_back(s);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown verification suite '" + s + "'");
    }
  }
  SuiteOutcome outcome;
  const Rng root(seed);
  for (const auto& name : names) {
    const Instance& instance = suite_table().at(name);
    const Rng suite_rng = root.split(suite_stream(name));
    for (int k = 0; k < instances; ++k) {
      const Rng instance_rng = suite_rng.split(static_cast<std::uint64_t>(k));
      bool done = false;
      for (int attempt = 0; attempt < kMaxPreconditionRetries && !done; ++attempt) {
        Rng rng = instance_rng.split(static_cast<std::uint64_t>(attempt));
        try {
          CheckResult r = instance(rng);
          if (!r.holds) ++outcome.failures;
          outcome.results.push_back(std::move(r));
          done = true;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::PreconditionViolated) throw;
        }
      }
      if (!done) {
        throw Error(ErrorCode::GenerationFailed, "no admissible instance for suite '" + name + "'");
      }
    }
  }
  return outcome;
}

}  // namespace framescope
