#pragma once

#include <cstdint>
#include <string>

#include "framescope/measure.hpp"
#include "framescope/rng.hpp"

namespace framescope {

enum class GeneratorKind { RandomUnitNorm, PerturbedOnb, PaulsenInstance, FromFile };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::RandomUnitNorm;
  int d = 2;
  int n = 2;
  std::uint64_t seed = 0;
  double magnitude = 0.1;  // PerturbedOnb
  double eps = 0.1;        // PaulsenInstance
  std::string path;        // FromFile
};

/// Deterministic for a fixed spec.
DiscreteMeasure generate(const GeneratorSpec& spec);

/// Frame-level Paulsen conditions for the support of a uniform measure:
/// |phi_i| in (1 - eps, 1 + eps) and (1 - eps) A <= S_Phi <= (1 + eps) A for
/// some A > 0 (reported as the midpoint of the admissible interval).
struct PaulsenStatus {
  bool almost_unit_norm = false;
  bool almost_tight = false;
  double tight_constant = 0.0;
};
PaulsenStatus paulsen_status(const DiscreteMeasure& mu, double eps);

Matrix random_orthogonal(Rng& rng, int d);
/// Gaussian points with Dirichlet(1) weights.
DiscreteMeasure random_measure(Rng& rng, int d, int n);
/// Uniform weights on n independent uniform directions.
DiscreteMeasure random_unit_norm(Rng& rng, int d, int n);

/// Uniform measure on `copies` repetitions of the standard basis.
DiscreteMeasure onb_measure(int d, int copies = 1);
/// Three unit vectors at 90, 210 and 330 degrees, uniform weights.
DiscreteMeasure mercedes_benz();
/// n equally spaced unit vectors on the circle, uniform weights.
DiscreteMeasure circle_discretization(int n);
/// Real harmonic unit-norm tight frame of n >= d + 1 vectors in R^d.
DiscreteMeasure harmonic_frame(int d, int n);

}  // namespace framescope
