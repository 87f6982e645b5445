// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "framescope/flow.hpp"
#include "framescope/generate.hpp"
#include "framescope/potentials.hpp"
#include "framescope/rng.hpp"
#include "framescope/transport.hpp"
#include "framescope/verify.hpp"

using namespace framescope;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

bool run_criterion(int id, const char* title, double budget_s, const std::function<Verdict()>& body) {
  const auto start = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
  const bool in_time = elapsed < budget_s;
  const bool pass = v.pass && in_time;
  std::printf("[%s] %d %s: %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), elapsed,
              budget_s, in_time ? "" : " TIMEOUT");
  std::fflush(stdout);
  return pass;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

// Fifty tight measures drawn from four constructions, randomly rotated and scaled.
std::vector<DiscreteMeasure> tight_family() {
  Rng rng(2024);
  std::vector<DiscreteMeasure> out;
  for (int k = 0; k < 50; ++k) {
    const double scale = rng.uniform(0.5, 2.0);
    DiscreteMeasure mu = onb_measure(1);
    switch (k % 4) {
      case 0: {
        const int d = rng.uniform_int(1, 6);
        Vector w(d);
        for (int i = 0; i < d; ++i) w(i) = rng.uniform(0.1, 1.0);
        w /= w.sum();
        Matrix x = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i) x(i, i) = 1.0 / std::sqrt(w(i));
        mu = DiscreteMeasure::create(x, w);
        break;
      }
      case 1:
        mu = mercedes_benz();
        break;
      case 2: {
        const int d = rng.uniform_int(2, 6);
        mu = harmonic_frame(d, rng.uniform_int(d + 1, 2 * d + 4));
        break;
      }
      default:
        mu = circle_discretization(rng.uniform_int(3, 40));
    }
    out.push_back(mu.transformed(random_orthogonal(rng, mu.dim())).dilated(scale));
  }
  return out;
}

Verdict tight_equality() {
  double worst_eq = 0.0, worst_tp = 0.0;
  for (const auto& mu : tight_family()) {
    const double m4 = std::pow(moment(mu, 2.0), 4);
    worst_eq = std::max(worst_eq, std::abs(pfp(mu) - m4 / mu.dim()) / m4);
    worst_tp = std::max(worst_tp, tp_value(mu));
  }
  return {worst_eq <= 1e-10 && worst_tp <= 1e-10,
          fmt("50 measures, max |PFP-M^4/d|/M^4 = %.3g (<= 1e-10), max TP = %.3g (<= 1e-10)", worst_eq, worst_tp)};
}

Verdict spectral_identity() {
  Rng rng(7);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto mu = random_measure(rng, rng.uniform_int(1, 10), rng.uniform_int(1, 100));
    const Vector l = frame_operator(mu).eigenvalues();
    double s = 0.0;
    for (int i = 0; i < l.size(); ++i)
      for (int j = i + 1; j < l.size(); ++j) s += (l(i) - l(j)) * (l(i) - l(j));
    s /= static_cast<double>(l.size());
    const double a = tp_value(mu);
    const double scale = std::max(std::abs(a), std::abs(s));
    if (scale > 0.0) worst = std::max(worst, std::abs(a - s) / scale);
  }
  return {worst <= 1e-8, fmt("200 measures, max relative disagreement %.3g (<= 1e-8)", worst)};
}

Verdict gradient_oracle() {
  Rng rng(13);
  int failures = 0;
  double min_slope = INFINITY;
  const std::vector<double> h{1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5};
  for (int k = 0; k < 50; ++k) {
    const auto mu = random_measure(rng, rng.uniform_int(1, 5), rng.uniform_int(1, 12));
    if (!check_tp_gradient(mu).holds) ++failures;
    for (int order = 1; order <= 3; ++order)
      if (!check_even_moment_gradient(mu, order).holds) ++failures;
    Matrix v(mu.size(), mu.dim());
    for (int i = 0; i < v.rows(); ++i)
      for (int c = 0; c < v.cols(); ++c) v(i, c) = rng.normal();
    const auto e = check_subdifferential_expansion(mu, v, h);
    min_slope = std::min(min_slope, e.rhs);
    if (!e.holds) ++failures;
  }
  return {failures == 0 && min_slope >= 1.9,
          fmt("50 instances, %.0f finite-difference failures (rel err < 1e-5), min residual slope %.3f (>= 1.9)",
              failures, min_slope)};
}

DiscreteMeasure unit_cloud(Rng& rng, int d, int n) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = rng.uniform();
  return DiscreteMeasure::create(x, Vector::Constant(n, 1.0 / n));
}

Verdict ot_correctness() {
  Rng rng(3);
  double worst_exact = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int n = rng.uniform_int(1, 6);
    const int d = rng.uniform_int(1, 3);
    const auto a = unit_cloud(rng, d, n);
    const auto b = unit_cloud(rng, d, n);
    const Matrix c = cost_matrix(a.points(), b.points(), 2.0);
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += c(i, perm[i]);
      best = std::min(best, s / n);
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst_exact = std::max(worst_exact, std::abs(wasserstein_exact(a, b, 2.0).plan.cost - best));
  }
  double worst_ratio = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto a = unit_cloud(rng, 2, 8);
    const auto b = unit_cloud(rng, 2, 8);
    const double exact = wasserstein_exact(a, b, 2.0).plan.cost;
    const double ent = wasserstein_entropic(a, b, 2.0, EntropicOptions{}).plan.cost;
    worst_ratio = std::max(worst_ratio, std::abs(ent - exact) / exact);
  }
  return {worst_exact <= 1e-12 && worst_ratio <= 0.01,
          fmt("max |exact - brute force| = %.3g (<= 1e-12); max entropic relative excess %.3g (<= 0.01)",
              worst_exact, worst_ratio)};
}

Verdict proposition_suite() {
  const auto outcome = run_suite({"frame-op", "nearest-tight", "tp-operator", "pframe"}, 100, 1);
  return {outcome.failures == 0 && outcome.results.size() == 400,
          fmt("%.0f checks, %.0f failures", static_cast<double>(outcome.results.size()), outcome.failures)};
}

DiscreteMeasure perturbed_onb(int d, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::PerturbedOnb;
  spec.d = d;
  spec.n = 2 * d;
  spec.seed = seed;
  spec.magnitude = 0.1;
  return generate(spec);
}

FlowConfig explicit_config() {
  FlowConfig c;
  c.dt = 0.01;
  c.epsilon = 0.0;
  c.max_steps = 10000;
  return c;
}

std::vector<double> explicit_endpoints;

Verdict flow_convergence() {
  int bad = 0;
  double worst_ratio = 0.0, worst_spread = 0.0;
  explicit_endpoints.clear();
  for (int d : {2, 3}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto traj = run_explicit(perturbed_onb(d, seed), explicit_config());
      const double ratio = traj.tp_values.back() / traj.tp_values.front();
      worst_ratio = std::max(worst_ratio, ratio);
      bool ok = ratio < 1e-8 && traj.steps_taken <= 10000;
      for (std::size_t k = 1; k < traj.size(); ++k) {
        ok = ok && traj.tp_values[k] <= traj.tp_values[k - 1];
        ok = ok && energy_report(traj, k - 1, k).holds;
      }
      const double spread = traj.spectra.back().second - traj.spectra.back().first;
      worst_spread = std::max(worst_spread, spread);
      ok = ok && spread <= 1e-6;
      if (!ok) ++bad;
      explicit_endpoints.push_back(traj.tp_values.back());
    }
  }
  return {bad == 0, fmt("20 runs, %.0f failing; max TP_end/TP_0 = %.3g (< 1e-8), max spectral spread %.3g (<= 1e-6)",
                        bad, worst_ratio, worst_spread)};
}

Verdict jko_consistency() {
  if (explicit_endpoints.size() != 20) flow_convergence();
  int bad = 0, idx = 0;
  double worst_increase = 0.0, worst_factor = 1.0;
  for (int d : {2, 3}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed, ++idx) {
      FlowConfig c = explicit_config();
      c.scheme = Scheme::Jko;
      c.tau = 0.05;
      c.max_steps = 200;
      const auto traj = run_jko(perturbed_onb(d, seed), c);
      bool ok = true;
      for (std::size_t k = 1; k < traj.size(); ++k) {
        const double inc = traj.tp_values[k] - traj.tp_values[k - 1];
        worst_increase = std::max(worst_increase, inc);
        ok = ok && inc <= 1e-12;
      }
      const double a = traj.tp_values.back(), b = explicit_endpoints[static_cast<std::size_t>(idx)];
      const double factor = std::max(a, b) / std::max(std::min(a, b), 1e-300);
      worst_factor = std::max(worst_factor, factor);
      ok = ok && factor <= 10.0;
      if (!ok) ++bad;
    }
  }
  return {bad == 0, fmt("20 runs, %.0f failing; max TP increase %.3g (<= 1e-12), max endpoint factor vs explicit %.3g "
                        "(<= 10)",
                        bad, worst_increase, worst_factor)};
}

Verdict pframe_equality() {
  const auto mu = circle_discretization(256);
  const double m4 = moment_power(mu, 4.0);
  const double gap = pframe_potential(mu, 4).value - cp_constant(2, 4) * m4 * m4;
  return {gap <= 1e-3, fmt("PFP_4 - c_{4,2} (M_4^4)^2 = %.3g (<= 1e-3)", gap)};
}

}  // namespace

int main() {
  bool all = true;
  all &= run_criterion(1, "tight-equality identity", 1, tight_equality);
  all &= run_criterion(2, "spectral identity", 5, spectral_identity);
  all &= run_criterion(3, "gradient oracle", 10, gradient_oracle);
  all &= run_criterion(4, "transport correctness", 30, ot_correctness);
  all &= run_criterion(5, "proposition suite", 60, proposition_suite);
  all &= run_criterion(6, "flow convergence", 60, flow_convergence);
  all &= run_criterion(7, "JKO monotonicity and consistency", 300, jko_consistency);
  all &= run_criterion(8, "p-frame equality case", 1, pframe_equality);
  std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
