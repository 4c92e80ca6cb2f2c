#pragma once

/// Seeded synthetic dataset generators used as desk-scale benchmark
/// surrogates and by the numeric tests.

#include <cstdint>
#include <string>
#include <vector>

#include "trimet/dataset.hpp"

namespace trimet {

struct SyntheticSpec {
  // One of: gaussians, anisotropic_gaussians, concentric.
  std::string generator = "gaussians";
  int classes = 2;
  int per_class = 50;
  int dim = 2;
  // Center spacing along the class axes (gaussians, anisotropic) or ring
  // radius step (concentric).
  double separation = 5.0;
  // Standard deviation of the non-discriminative axes (anisotropic) or of
  // the radial jitter (concentric). Ignored by plain gaussians.
  double noise_std = 1.0;
};

std::vector<std::string> known_generators();

/// Deterministic per (spec, seed). Generators:
///   gaussians: unit-covariance classes with centers separation * e_i on a
///     scaled simplex; requires classes <= dim.
///   anisotropic_gaussians: axis 0 carries the classes (center i *
///     separation, within-class std 1); every other axis is pure
///     N(0, noise_std) noise.
///   concentric: 2-D rings of radius separation * (i + 1) with radial
///     jitter noise_std; requires dim == 2.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace trimet
