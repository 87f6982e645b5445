#include "framescope/generate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "framescope/error.hpp"
#include "framescope/flow.hpp"
#include "framescope/io.hpp"

namespace framescope {

namespace {

constexpr int kMaxPaulsenAttempts = 1000;

Vector random_direction(Rng& rng, int d) {
  Vector u(d);
  double n = 0.0;
  while (n < 1e-12) {
    for (int k = 0; k < d; ++k) u(k) = rng.normal();
    n = u.norm();
  }
  return u / n;
}

void require_shape(int d, int n) {
  if (d < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "generator needs d >= 1 and N >= 1");
}

DiscreteMeasure perturbed_onb(const GeneratorSpec& spec) {
  if (spec.n % spec.d != 0) {
    throw Error(ErrorCode::InvalidArgument, "perturbed ONB needs N to be a multiple of d");
  }
  if (!(spec.magnitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "perturbation magnitude must be >= 0");
  DiscreteMeasure base = onb_measure(spec.d, spec.n / spec.d);
  if (spec.magnitude == 0.0) return base;
  Rng rng(spec.seed);
  Matrix x = base.points();
  for (int i = 0; i < spec.n; ++i) x.row(i) += spec.magnitude * random_direction(rng, spec.d).transpose();
  return base.with_points(std::move(x));
}

// Unit-norm tight configuration from frame-potential descent on the sphere,
// then a bounded perturbation; retried on fresh streams until both Paulsen
// conditions hold.
DiscreteMeasure paulsen_instance(const GeneratorSpec& spec) {
  if (!(spec.eps > 0.0 && spec.eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "Paulsen eps must be in (0, 1)");
  if (spec.n < spec.d) throw Error(ErrorCode::InvalidArgument, "Paulsen instance needs N >= d");
  FlowConfig config;
  config.potential = PotentialKind::PFrame;
  config.p = 2;
  config.sphere_constrained = true;
  config.dt = 0.05;
  config.max_steps = 20000;
  config.stop_tp = 1e-8;
  config.tight_tol = 1e-6;
  const Rng root(spec.seed);
  for (int attempt = 0; attempt < kMaxPaulsenAttempts; ++attempt) {
    Rng rng = root.split(static_cast<std::uint64_t>(attempt));
    const DiscreteMeasure start = random_unit_norm(rng, spec.d, spec.n);
    const FlowTrajectory traj = run_explicit(start, config);
    const DiscreteMeasure& funtf = traj.final_state();
    const double radius = spec.eps / (2.0 * spec.d);
    Matrix x = funtf.points();
    for (int i = 0; i < spec.n; ++i) {
      x.row(i) += radius * rng.uniform() * random_direction(rng, spec.d).transpose();
    }
    DiscreteMeasure candidate = funtf.with_points(std::move(x));
    const PaulsenStatus status = paulsen_status(candidate, spec.eps);
    if (status.almost_unit_norm && status.almost_tight) return candidate;
  }
  throw Error(ErrorCode::GenerationFailed,
              "no Paulsen instance after " + std::to_string(kMaxPaulsenAttempts) + " attempts");
}

}  // namespace

PaulsenStatus paulsen_status(const DiscreteMeasure& mu, double eps) {
  PaulsenStatus status;
  status.almost_unit_norm = true;
  for (int i = 0; i < mu.size(); ++i) {
    const double n = mu.points().row(i).norm();
    if (!(n > 1.0 - eps && n < 1.0 + eps)) status.almost_unit_norm = false;
  }
  // S_Phi = N * S_mu for uniform weights; the condition is scale invariant.
  const SymmetricOperator s = frame_operator(mu);
  const double scale = static_cast<double>(mu.size());
  const double lo = s.lambda_min() * scale;
  const double hi = s.lambda_max() * scale;
  const double a_min = hi / (1.0 + eps);
  const double a_max = lo / (1.0 - eps);
  status.almost_tight = lo > 0.0 && a_min <= a_max;
  status.tight_constant = status.almost_tight ? 0.5 * (a_min + a_max) : 0.0;
  return status;
}

Matrix random_orthogonal(Rng& rng, int d) {
  Matrix g(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int k = 0; k < d; ++k) {
    if (r(k, k) < 0.0) q.col(k) *= -1.0;
  }
  return q;
}

DiscreteMeasure random_measure(Rng& rng, int d, int n) {
  require_shape(d, n);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x(i, k) = rng.normal();
  }
  Vector w(n);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    w(i) = -std::log(u);
  }
  w /= w.sum();
  return DiscreteMeasure::create(std::move(x), std::move(w));
}

DiscreteMeasure random_unit_norm(Rng& rng, int d, int n) {
  require_shape(d, n);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) x.row(i) = random_direction(rng, d).transpose();
  return canonical_from_finite(x);
}

DiscreteMeasure onb_measure(int d, int copies) {
  require_shape(d, copies);
  Matrix x = Matrix::Zero(d * copies, d);
  for (int i = 0; i < d * copies; ++i) x(i, i % d) = 1.0;
  return canonical_from_finite(x);
}

DiscreteMeasure mercedes_benz() {
  Matrix x(3, 2);
  const double degrees[3] = {90.0, 210.0, 330.0};
  for (int i = 0; i < 3; ++i) {
    const double a = degrees[i] * std::numbers::pi / 180.0;
    x(i, 0) = std::cos(a);
    x(i, 1) = std::sin(a);
  }
  return canonical_from_finite(x);
}

DiscreteMeasure circle_discretization(int n) {
  require_shape(2, n);
  Matrix x(n, 2);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    x(i, 0) = std::cos(a);
    x(i, 1) = std::sin(a);
  }
  return canonical_from_finite(x);
}

DiscreteMeasure harmonic_frame(int d, int n) {
  require_shape(d, n);
  if (n < d + 1) throw Error(ErrorCode::InvalidArgument, "harmonic frame needs N >= d + 1");
  Matrix x(n, d);
  const int pairs = d / 2;
  const double amp = std::sqrt(2.0 / d);
  for (int k = 0; k < n; ++k) {
    for (int m = 1; m <= pairs; ++m) {
      const double a = 2.0 * std::numbers::pi * k * m / n;
      x(k, 2 * (m - 1)) = amp * std::cos(a);
      x(k, 2 * (m - 1) + 1) = amp * std::sin(a);
    }
    if (d % 2 == 1) x(k, d - 1) = 1.0 / std::sqrt(static_cast<double>(d));
  }
  return canonical_from_finite(x);
}

DiscreteMeasure generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorKind::RandomUnitNorm: {
      require_shape(spec.d, spec.n);
      Rng rng(spec.seed);
      return random_unit_norm(rng, spec.d, spec.n);
    }
    case GeneratorKind::PerturbedOnb:
      require_shape(spec.d, spec.n);
      return perturbed_onb(spec);
    case GeneratorKind::PaulsenInstance:
      require_shape(spec.d, spec.n);
      return paulsen_instance(spec);
    case GeneratorKind::FromFile:
      return read_measure(spec.path);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown generator kind");
}

}  // namespace framescope
