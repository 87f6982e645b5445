#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace framescope {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultFrameTol = 1e-10;
inline constexpr double kDefaultTightTol = 1e-8;

/// Dense symmetric d x d operator with its spectrum computed once at
/// construction. Eigenvalues are ascending; eigenvectors are the columns of
/// `eigenvectors()`.
class SymmetricOperator {
 public:
  /// Throws NotSymmetric if the input deviates from symmetry by more than
  /// 1e-12 relative to its largest entry; the stored matrix is symmetrized.
  explicit SymmetricOperator(const Matrix& matrix);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }

  double lambda_min() const { return eigenvalues_(0); }
  double lambda_max() const { return eigenvalues_(eigenvalues_.size() - 1); }
  /// Spectral norm, max |lambda|.
  double norm() const;
  double trace() const { return matrix_.trace(); }
  Vector apply(const Vector& x) const { return matrix_ * x; }

 private:
  Matrix matrix_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
};

/// Finitely supported probability measure sum_i w_i delta_{x_i} on R^d.
/// Points are stored one atom per row (N x d). Weights are nonnegative and
/// normalized to sum to one. Duplicate points are allowed.
class DiscreteMeasure {
 public:
  /// Validating constructor (see `new_measure`).
  static DiscreteMeasure create(Matrix points, Vector weights);

  int dim() const { return static_cast<int>(points_.cols()); }
  int size() const { return static_cast<int>(points_.rows()); }
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  Vector point(int i) const { return points_.row(i).transpose(); }

  /// Same weights, new support locations (push-forward of the atoms).
  DiscreteMeasure with_points(Matrix points) const;
  /// x -> Q x for every atom.
  DiscreteMeasure transformed(const Matrix& q) const;
  /// x -> c x for every atom.
  DiscreteMeasure dilated(double c) const;

  static DiscreteMeasure dirac(const Vector& x);

 private:
  DiscreteMeasure(Matrix points, Vector weights)
      : points_(std::move(points)), weights_(std::move(weights)) {}

  Matrix points_;
  Vector weights_;
};

struct FrameDiagnostics {
  double lower_bound = 0.0;  // lambda_1 of the frame operator
  double upper_bound = 0.0;  // lambda_d
  bool is_frame = false;
  bool is_tight = false;
  double tightness_gap = 0.0;  // lambda_d - lambda_1
  double second_moment = 0.0;  // M_2^2
};

/// Builds a measure from rows of `points` and matching weights. Weights whose
/// sum lies within 1e-6 of one are renormalized; anything else is rejected.
DiscreteMeasure new_measure(const std::vector<std::vector<double>>& points,
                            const std::vector<double>& weights);

/// Canonical alpha-weighted measure of a finite frame; uniform 1/N weights
/// when alpha is omitted. Frame vectors are the rows of `frame`.
DiscreteMeasure canonical_from_finite(const Matrix& frame,
                                      const std::optional<Vector>& alpha = std::nullopt);

/// M_p(mu) = (sum_i w_i |x_i|^p)^(1/p), p >= 1.
double moment(const DiscreteMeasure& mu, double p);

/// sum_i w_i |x_i|^p without the outer root.
double moment_power(const DiscreteMeasure& mu, double p);

/// S_mu = sum_i w_i x_i x_i^T.
SymmetricOperator frame_operator(const DiscreteMeasure& mu);

FrameDiagnostics diagnostics(const DiscreteMeasure& mu, double frame_tol = kDefaultFrameTol,
                             double tight_tol = kDefaultTightTol);

}  // namespace framescope
