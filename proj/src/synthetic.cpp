#include "trimet/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "trimet/rng.hpp"

namespace trimet {

namespace {

void check_common(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw std::invalid_argument("need at least 2 classes");
  if (spec.per_class < 1) throw std::invalid_argument("per_class must be positive");
  if (spec.dim < 1) throw std::invalid_argument("dim must be positive");
  if (spec.separation <= 0.0)
    throw std::invalid_argument("separation must be positive");
  if (spec.noise_std < 0.0)
    throw std::invalid_argument("noise_std must be non-negative");
}

Dataset make_empty(const SyntheticSpec& spec) {
  Dataset x;
  x.points.resize(static_cast<Eigen::Index>(spec.classes) * spec.per_class, spec.dim);
  x.labels.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  return x;
}

Dataset gen_gaussians(const SyntheticSpec& spec, std::mt19937_64& rng) {
  if (spec.classes > spec.dim)
    throw std::invalid_argument(
        "gaussians places centers on the scaled simplex and needs classes <= dim");
  Dataset x = make_empty(spec);
  Eigen::Index row = 0;
  for (int cls = 0; cls < spec.classes; ++cls) {
    for (int j = 0; j < spec.per_class; ++j, ++row) {
      for (int f = 0; f < spec.dim; ++f) {
        const double center = f == cls ? spec.separation : 0.0;
        x.points(row, f) = center + normal01(rng);
      }
      x.labels.push_back(cls);
    }
  }
  return x;
}

Dataset gen_anisotropic(const SyntheticSpec& spec, std::mt19937_64& rng) {
  if (spec.dim < 2)
    throw std::invalid_argument("anisotropic_gaussians needs dim >= 2");
  Dataset x = make_empty(spec);
  Eigen::Index row = 0;
  for (int cls = 0; cls < spec.classes; ++cls) {
    for (int j = 0; j < spec.per_class; ++j, ++row) {
      x.points(row, 0) = cls * spec.separation + normal01(rng);
      for (int f = 1; f < spec.dim; ++f)
        x.points(row, f) = spec.noise_std * normal01(rng);
      x.labels.push_back(cls);
    }
  }
  return x;
}

Dataset gen_concentric(const SyntheticSpec& spec, std::mt19937_64& rng) {
  if (spec.dim != 2) throw std::invalid_argument("concentric generates 2-D rings");
  Dataset x = make_empty(spec);
  Eigen::Index row = 0;
  for (int cls = 0; cls < spec.classes; ++cls) {
    const double radius = spec.separation * (cls + 1);
    for (int j = 0; j < spec.per_class; ++j, ++row) {
      const double angle = 2.0 * std::numbers::pi * uniform01(rng);
      const double r = radius + spec.noise_std * normal01(rng);
      x.points(row, 0) = r * std::cos(angle);
      x.points(row, 1) = r * std::sin(angle);
      x.labels.push_back(cls);
    }
  }
  return x;
}

}  // namespace

std::vector<std::string> known_generators() {
  return {"gaussians", "anisotropic_gaussians", "concentric"};
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  check_common(spec);
  std::mt19937_64 rng(derive_seed(seed, "synth." + spec.generator));

  Dataset x;
  if (spec.generator == "gaussians") {
    x = gen_gaussians(spec, rng);
  } else if (spec.generator == "anisotropic_gaussians") {
    x = gen_anisotropic(spec, rng);
  } else if (spec.generator == "concentric") {
    x = gen_concentric(spec, rng);
  } else {
    std::string names;
    for (const std::string& g : known_generators())
      names += (names.empty() ? "" : ", ") + g;
    throw std::invalid_argument("unknown generator '" + spec.generator +
                                "' (known: " + names + ")");
  }
  x.validate();
  return x;
}

}  // namespace trimet
