#include "framescope/potentials.hpp"

#include <cmath>

#include "framescope/error.hpp"
#include "framescope/numeric.hpp"

namespace framescope {

namespace {

double frobenius_squared(const Matrix& m) {
  CompensatedSum acc;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) acc += m(i, j) * m(i, j);
  }
  return acc.value();
}

Matrix tightness_matrix(const SymmetricOperator& s) {
  const int d = s.dim();
  return s.matrix() - (s.trace() / d) * Matrix::Identity(d, d);
}

}  // namespace

void require_even_exponent(int p) {
  if (p < 2) throw Error(ErrorCode::InvalidExponent, "p-frame exponent must be >= 2");
  if (p % 2 != 0) {
    throw Error(ErrorCode::OddExponent, "p-frame exponent must be even, got " + std::to_string(p));
  }
}

double pfp(const DiscreteMeasure& mu) { return frobenius_squared(frame_operator(mu).matrix()); }

double fp(const Matrix& frame) {
  if (frame.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "empty frame");
  const Matrix s = frame.transpose() * frame;
  return frobenius_squared(s);
}

SymmetricOperator tightness_operator(const DiscreteMeasure& mu) {
  return SymmetricOperator(tightness_matrix(frame_operator(mu)));
}

double tp_value(const DiscreteMeasure& mu) {
  return frobenius_squared(tightness_matrix(frame_operator(mu)));
}

PotentialReport tightness_potential(const DiscreteMeasure& mu) {
  const SymmetricOperator s = frame_operator(mu);
  const SymmetricOperator t(tightness_matrix(s));
  const Vector& lambda = s.eigenvalues();
  const int d = s.dim();
  CompensatedSum spectral;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const double diff = lambda(i) - lambda(j);
      spectral += diff * diff;
    }
  }
  PotentialReport report;
  report.value = frobenius_squared(t.matrix());
  report.lower_bound = 0.0;
  report.gap = report.value;
  report.spectral_value = spectral.value() / d;
  report.operator_norm = t.norm();
  return report;
}

GradientField tp_gradient(const DiscreteMeasure& mu) {
  const Matrix t = tightness_matrix(frame_operator(mu));
  // Rows are atoms: (4 T x_k)^T = 4 x_k^T T since T is symmetric.
  return GradientField{4.0 * mu.points() * t, mu.weights(), 2.0};
}

GradientField even_moment_gradient(const DiscreteMeasure& mu, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidExponent, "even moment order k must be >= 1");
  const double m2sq = moment_power(mu, 2.0);
  const double factor = 2.0 * k * ipow(m2sq, k - 1);
  return GradientField{factor * mu.points(), mu.weights(), 2.0 * k};
}

double cp_constant(int d, int p) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  require_even_exponent(p);
  double value = 1.0;
  for (int k = 0; k < p / 2; ++k) {
    value *= static_cast<double>(p - 1 - 2 * k) / static_cast<double>(d + p - 2 - 2 * k);
  }
  return value;
}

PotentialReport pframe_potential(const DiscreteMeasure& mu, int p) {
  require_even_exponent(p);
  PotentialReport report;
  if (p == 2) {
    report.value = pfp(mu);
  } else {
    const Matrix gram = mu.points() * mu.points().transpose();
    const Vector& w = mu.weights();
    CompensatedSum acc;
    for (int i = 0; i < mu.size(); ++i) {
      CompensatedSum row;
      for (int j = 0; j < mu.size(); ++j) row += w(j) * ipow(gram(i, j), p);
      acc += w(i) * row.value();
    }
    report.value = acc.value();
  }
  const double mpp = moment_power(mu, p);
  report.lower_bound = cp_constant(mu.dim(), p) * mpp * mpp;
  report.gap = report.value - report.lower_bound;
  return report;
}

Vector pframe_barycenter(const DiscreteMeasure& mu, const Vector& z, int p) {
  require_even_exponent(p);
  if (z.size() != mu.dim()) throw Error(ErrorCode::DimensionMismatch, "barycenter argument has wrong length");
  const Vector inner = mu.points() * z;
  Vector coeff(mu.size());
  for (int i = 0; i < mu.size(); ++i) coeff(i) = mu.weights()(i) * ipow(inner(i), p - 1);
  return 2.0 * p * (mu.points().transpose() * coeff);
}

GradientField pframe_gradient(const DiscreteMeasure& mu, int p) {
  require_even_exponent(p);
  const Matrix gram = mu.points() * mu.points().transpose();
  Matrix coeff(mu.size(), mu.size());
  for (int k = 0; k < mu.size(); ++k) {
    for (int j = 0; j < mu.size(); ++j) coeff(k, j) = mu.weights()(j) * ipow(gram(k, j), p - 1);
  }
  return GradientField{2.0 * p * coeff * mu.points(), mu.weights(), static_cast<double>(p)};
}

}  // namespace framescope
