#include "framescope/measure.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "framescope/error.hpp"
#include "framescope/numeric.hpp"

namespace framescope {

namespace {

constexpr double kWeightSumWindow = 1e-6;

void require_finite(const Matrix& points) {
  if (!points.allFinite()) {
    throw Error(ErrorCode::NonFinite, "measure support contains non-finite coordinates");
  }
}

}  // namespace

SymmetricOperator::SymmetricOperator(const Matrix& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "operator must be a nonempty square matrix");
  }
  if (!matrix.allFinite()) throw Error(ErrorCode::NonFinite, "operator has non-finite entries");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::NotSymmetric, "operator matrix is not symmetric");
  }
  matrix_ = 0.5 * (matrix + matrix.transpose());
  // Householder tridiagonalization + implicit QL: deterministic for a given input.
  Eigen::SelfAdjointEigenSolver<Matrix> solver(matrix_);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::SolverFailure, "symmetric eigensolver did not converge");
  }
  eigenvalues_ = solver.eigenvalues();
  eigenvectors_ = solver.eigenvectors();
}

double SymmetricOperator::norm() const {
  return std::max(std::abs(lambda_min()), std::abs(lambda_max()));
}

DiscreteMeasure DiscreteMeasure::create(Matrix points, Vector weights) {
  if (points.rows() == 0 || points.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "measure needs at least one atom in dimension >= 1");
  }
  if (weights.size() != points.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "got " + std::to_string(points.rows()) + " points but " +
                    std::to_string(weights.size()) + " weights");
  }
  require_finite(points);
  CompensatedSum total;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights(i))) throw Error(ErrorCode::NonFinite, "non-finite weight");
    if (weights(i) < 0.0) {
      throw Error(ErrorCode::NegativeWeight, "weight " + std::to_string(i) + " is negative");
    }
    total += weights(i);
  }
  const double sum = total.value();
  if (std::abs(sum - 1.0) > kWeightSumWindow) {
    throw Error(ErrorCode::WeightSumOutOfRange,
                "weights sum to " + std::to_string(sum) + ", expected 1");
  }
  weights /= sum;
  return DiscreteMeasure(std::move(points), std::move(weights));
}

DiscreteMeasure DiscreteMeasure::with_points(Matrix points) const {
  if (points.rows() != points_.rows() || points.cols() != points_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "replacement support has the wrong shape");
  }
  require_finite(points);
  return DiscreteMeasure(std::move(points), weights_);
}

DiscreteMeasure DiscreteMeasure::transformed(const Matrix& q) const {
  if (q.rows() != dim() || q.cols() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "transform must be d x d");
  }
  return with_points(points_ * q.transpose());
}

DiscreteMeasure DiscreteMeasure::dilated(double c) const { return with_points(c * points_); }

DiscreteMeasure DiscreteMeasure::dirac(const Vector& x) {
  return create(x.transpose(), Vector::Ones(1));
}

DiscreteMeasure new_measure(const std::vector<std::vector<double>>& points,
                            const std::vector<double>& weights) {
  if (points.empty()) throw Error(ErrorCode::DimensionMismatch, "no points given");
  if (points.size() != weights.size()) {
    throw Error(ErrorCode::DimensionMismatch, "points and weights differ in length");
  }
  const auto d = points.front().size();
  Matrix x(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != d) {
      throw Error(ErrorCode::DimensionMismatch,
                  "point " + std::to_string(i) + " has length " + std::to_string(points[i].size()) +
                      ", expected " + std::to_string(d));
    }
    for (std::size_t k = 0; k < d; ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = points[i][k];
    }
  }
  Vector w = Eigen::Map<const Vector>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return DiscreteMeasure::create(std::move(x), std::move(w));
}

DiscreteMeasure canonical_from_finite(const Matrix& frame, const std::optional<Vector>& alpha) {
  if (frame.rows() == 0) throw Error(ErrorCode::DimensionMismatch, "empty frame");
  if (alpha) return DiscreteMeasure::create(frame, *alpha);
  return DiscreteMeasure::create(frame, Vector::Constant(frame.rows(), 1.0 / frame.rows()));
}

double moment_power(const DiscreteMeasure& mu, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::InvalidExponent, "moment order must be >= 1");
  CompensatedSum acc;
  for (int i = 0; i < mu.size(); ++i) {
    acc += mu.weights()(i) * distance_power(mu.points().row(i).norm(), p);
  }
  return acc.value();
}

double moment(const DiscreteMeasure& mu, double p) {
  const double mp = moment_power(mu, p);
  return p == 2.0 ? std::sqrt(mp) : std::pow(mp, 1.0 / p);
}

SymmetricOperator frame_operator(const DiscreteMeasure& mu) {
  const int d = mu.dim();
  Matrix s = Matrix::Zero(d, d);
  const Matrix& x = mu.points();
  const Vector& w = mu.weights();
  for (int a = 0; a < d; ++a) {
    for (int b = a; b < d; ++b) {
      CompensatedSum acc;
      for (int i = 0; i < mu.size(); ++i) acc += w(i) * x(i, a) * x(i, b);
      s(a, b) = acc.value();
      s(b, a) = s(a, b);
    }
  }
  return SymmetricOperator(s);
}

FrameDiagnostics diagnostics(const DiscreteMeasure& mu, double frame_tol, double tight_tol) {
  if (!(frame_tol > 0.0) || !(tight_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "diagnostic tolerances must be positive");
  }
  const SymmetricOperator s = frame_operator(mu);
  FrameDiagnostics out;
  out.lower_bound = s.lambda_min();
  out.upper_bound = s.lambda_max();
  out.tightness_gap = std::max(0.0, out.upper_bound - out.lower_bound);
  out.second_moment = s.trace();
  out.is_frame = out.lower_bound > frame_tol;
  out.is_tight = out.tightness_gap <= tight_tol * std::max(1.0, out.upper_bound);
  return out;
}

}  // namespace framescope
