#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/metric.hpp"

namespace trimet {

/// The seven triplet selection strategies.
enum class MiningStrategy { KBA, KBH, KBSH, KHPEN, KEPEN, KEPHN, KNS };

std::string to_string(MiningStrategy s);
MiningStrategy strategy_from_string(const std::string& name);
std::vector<MiningStrategy> all_strategies();

/// Per-anchor neighbor lists under a given metric. Near lists are sorted by
/// ascending distance, far lists by descending distance; ties break toward
/// the smaller point index. Lists never contain the anchor itself and are
/// truncated to the available candidates.
struct NeighborIndicators {
  std::vector<std::vector<int>> same_class_near;
  std::vector<std::vector<int>> same_class_far;
  std::vector<std::vector<int>> diff_class_near;
  std::vector<std::vector<int>> diff_class_far;
};

struct Triplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  std::vector<Triplet> triplets;
  MiningStrategy strategy = MiningStrategy::KBA;
  int k = 1;
};

/// Negative-sampling parameters. `lambda` caps the inverse-density weight
/// so every negative keeps a minimum chance of selection; `seed` feeds one
/// RNG stream per anchor (seed + anchor index). When
/// `normalize_unit_scale` is set, candidate distances are rescaled to the
/// unit-sphere support [0, 2] before density evaluation.
struct NegSamplingConfig {
  double lambda = 1.4;
  std::int64_t seed = 0;
  bool normalize_unit_scale = false;
};

/// Builds the four neighbor lists for every anchor. Distances are taken
/// under `metric`. Every class must have at least two members.
NeighborIndicators build_indicators(const Dataset& x, int k, const MetricMatrix& metric);

/// Runs one mining strategy over the dataset. `ns_cfg` is consulted only
/// for the KNS strategy.
TripletSet mine(MiningStrategy strategy, const Dataset& x, int k,
                const MetricMatrix& metric, const NegSamplingConfig& ns_cfg = {});

/// Density of pairwise distances of uniform points in dimension d:
/// D^(d-2) * (1 - 0.25 D^2)^((d-3)/2), with the base clamped at zero.
double negative_density(double dist, int d);

/// Selection probability for each candidate negative of `anchor`:
/// min(lambda, 1/q) per candidate, normalized to sum 1. q is floored at
/// 1e-12 before inversion.
std::vector<double> negative_selection_probabilities(int anchor,
                                                     const std::vector<int>& candidates,
                                                     const Dataset& x,
                                                     const MetricMatrix& metric,
                                                     const NegSamplingConfig& cfg);

/// Draws `count` distinct indices by cumulative-sum inversion, removing
/// and renormalizing after each draw. `probs` must sum to 1 within 1e-9.
std::vector<int> roulette_select(const std::vector<double>& probs, int count,
                                 std::mt19937_64& rng);
std::vector<int> roulette_select(const std::vector<double>& probs, int count,
                                 std::uint64_t seed);

/// Plain text form: header `# strategy=<tag> k=<k>`, then one
/// `anchor positive negative` line per triplet.
void write_triplets(std::ostream& os, const TripletSet& t);
TripletSet read_triplets(std::istream& is);

}  // namespace trimet
