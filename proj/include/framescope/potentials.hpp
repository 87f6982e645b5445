#pragma once

#include <optional>

#include "framescope/measure.hpp"

namespace framescope {

/// Value of a frame-type potential together with its analytic lower bound.
struct PotentialReport {
  double value = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;  // value - lower_bound
  std::optional<double> spectral_value;
  std::optional<double> operator_norm;
};

/// One vector per atom. `vectors` holds the measure-level field (what the
/// flow moves each atom along); `euclidean()` multiplies row k by w_k, which
/// is the gradient with respect to the coordinates of atom k.
struct GradientField {
  Matrix vectors;
  Vector weights;
  double exponent_p = 2.0;

  Matrix euclidean() const { return weights.asDiagonal() * vectors; }
};

/// PFP(mu) = sum_ij w_i w_j <x_i, x_j>^2, evaluated as trace(S_mu^2).
double pfp(const DiscreteMeasure& mu);

/// FP(Phi) = sum_ij <phi_i, phi_j>^2 for frame vectors stored as rows.
double fp(const Matrix& frame);

/// T_mu = S_mu - (M_2^2 / d) I.
SymmetricOperator tightness_operator(const DiscreteMeasure& mu);

/// TP(mu) = PFP(mu) - M_2^4 / d, evaluated as |T_mu|_F^2 (same quantity,
/// no cancellation near tight measures).
double tp_value(const DiscreteMeasure& mu);

/// Full report: value = |T_mu|_F^2, lower_bound = 0, spectral_value =
/// (1/d) sum_{i<j} (lambda_i - lambda_j)^2, operator_norm = |T_mu|.
PotentialReport tightness_potential(const DiscreteMeasure& mu);

/// Field x_k -> 4 T_mu x_k.
GradientField tp_gradient(const DiscreteMeasure& mu);

/// Gradient field of M_2^{2k}: x -> 2k M_2^{2(k-1)} x.
GradientField even_moment_gradient(const DiscreteMeasure& mu, int k);

/// (p-1)(p-3)...1 / ((d+p-2)(d+p-4)...d) for even p >= 2.
double cp_constant(int d, int p);

/// PFP_p(mu) = sum_ij w_i w_j <x_i, x_j>^p with lower bound c_p (M_p^p)^2.
/// Even p only.
PotentialReport pframe_potential(const DiscreteMeasure& mu, int p);

/// g_p(z) = 2p sum_i w_i <z, x_i>^{p-1} x_i.
Vector pframe_barycenter(const DiscreteMeasure& mu, const Vector& z, int p);

/// Field x_k -> g_p(x_k); its Euclidean form is the gradient of PFP_p.
GradientField pframe_gradient(const DiscreteMeasure& mu, int p);

/// Throws OddExponent / InvalidExponent unless p is even and >= 2.
void require_even_exponent(int p);

}  // namespace framescope
