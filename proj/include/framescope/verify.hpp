#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "framescope/measure.hpp"

namespace framescope {

/// Outcome of one numerical check. `holds` is exactly
/// `lhs <= rhs + tolerance`; `witness` holds everything needed to replay it.
struct CheckResult {
  std::string name;
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  bool equality = false;  // equality case detected, where the check defines one
  nlohmann::json witness;
};

/// |S_nu - S_mu| <= sqrt(6) W_2(mu, nu) M_2(mu); requires M_2(nu) <= sqrt(2) M_2(mu).
CheckResult check_frame_op_continuity(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// delta / (4 (M_2(mu) + M_2(nu))) <= W_2(mu, nu) for tight nu and non-tight mu.
CheckResult check_nearest_tight_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu_tight,
                                      double tight_tol = kDefaultTightTol);

/// PFP(mu) = M_2^4 / d exactly when mu is tight (mu != delta_0). The
/// equality test is made consistent with `diagnostics`: with
/// t = tight_tol * max(1, lambda_d), a tight measure must have
/// TP <= d t^2 / 4 and a non-tight one TP >= t^2 / d.
CheckResult check_tight_iff(const DiscreteMeasure& mu, double tight_tol = kDefaultTightTol);

/// |T_mu| <= sqrt(TP(mu)); equality flagged when all eigenvalues coincide.
CheckResult check_tp_operator_bound(const DiscreteMeasure& mu, double tight_tol = kDefaultTightTol);

/// Residual r(h) = |TP((I + hV)#mu) - TP(mu) - h sum_i w_i <4 T x_i, V_i>|;
/// holds if the log-log slope of r over `h_values` is >= 1.9.
CheckResult check_subdifferential_expansion(const DiscreteMeasure& mu, const Matrix& direction,
                                            std::span<const double> h_values);

/// c_p (M_p^p)^2 <= PFP_p(mu), even p.
CheckResult check_pframe_bound(const DiscreteMeasure& mu, int p);

/// Central differences of M_2^{2k} against w_i 2k M_2^{2(k-1)} x_i.
CheckResult check_even_moment_gradient(const DiscreteMeasure& mu, int k, double h = 1e-6);

/// Central differences of TP against 4 w_k T_mu x_k.
CheckResult check_tp_gradient(const DiscreteMeasure& mu, double h = 1e-6);

/// |g_p^mu(z) - g_p^nu(z)| <= 2p |z|^{p-1} W_p [M_p^{p-1}(mu) + sum_i M_p^{p-i}(nu) M_p^{i-1}(mu)].
CheckResult check_barycenter_continuity(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                        const Vector& z, int p);

/// Re-runs a check from its witness.
CheckResult replay_check(const nlohmann::json& witness);

inline constexpr const char* kSuiteNames[] = {"frame-op",  "nearest-tight", "tight-iff",   "tp-operator",
                                              "expansion", "pframe",        "moment-grad", "tp-grad",
                                              "barycenter"};

struct SuiteOutcome {
  std::vector<CheckResult> results;
  int failures = 0;
};

/// Runs `instances` seeded instances of each named suite ("all" expands to
/// every suite). Instances are drawn until they satisfy the check's
/// preconditions, so every suite contributes exactly `instances` results.
SuiteOutcome run_suite(const std::vector<std::string>& suites, int instances, std::uint64_t seed = 0);

}  // namespace framescope
