#pragma once

#include <cstdint>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"
#include "trimet/solver.hpp"

namespace trimet {

/// Schedule parameters for the sphere-sampling training loop. The defaults
/// are the documented initialization: r = 0.1 sigma, n_s = floor(0.01 n)
/// clipped to [10, 20], p = 1, with updates dr = 0.3 sigma,
/// n_s -> max(n_s - ceil(0.2 n_s), 1), p -> max(p - 0.05, 0.2).
struct HierarchicalConfig {
  int t_outer = 5;
  double r0_factor = 0.1;
  double dr_factor = 0.3;
  double ns_init_frac = 0.01;
  int ns_clip_low = 10;
  int ns_clip_high = 20;
  double ns_shrink_frac = 0.2;
  double p_init = 1.0;
  double p_decrement = 0.05;
  double p_floor = 0.2;
  std::int64_t seed = 0;
};

struct HierarchicalState {
  int tau = 1;
  double radius = 0.0;
  int n_spheres = 0;
  double portion = 1.0;
  double sigma = 0.0;  // average per-feature standard deviation of the input
};

/// One hypersphere draw: all points within `radius` of the center plus the
/// stratified subset actually used for training.
struct SphereSample {
  Vector center;
  std::vector<int> member_indices;
  std::vector<int> sampled_indices;

  bool empty() const { return sampled_indices.empty(); }
};

struct SphereTraceRow {
  int tau = 0;
  int sphere_index = 0;
  double radius = 0.0;
  int n_members = 0;
  int n_sampled = 0;
  int n_triplets = 0;
  double final_objective = 0.0;
  double wall_time_ms = 0.0;
};

struct HierarchicalResult {
  ProjectionMatrix composite;  // ordered product of all per-sphere factors
  Dataset final_data;
  std::vector<SphereTraceRow> trace;
};

/// Computes sigma and the tau = 1 schedule values.
HierarchicalState init_schedule(const Dataset& x, const HierarchicalConfig& cfg);

/// Advances the schedule by one outer iteration.
HierarchicalState update_schedule(const HierarchicalState& s,
                                  const HierarchicalConfig& cfg);

/// Draws a sphere center uniformly from the bounding box of the current
/// points and stratifies a per-class sample of its members with portion
/// p_tau (rounded up, at least one per present class). Spheres with fewer
/// than 4 members or fewer than 2 classes are re-drawn up to 50 times;
/// after that an empty sample is returned for the caller to skip.
SphereSample sample_sphere(const Dataset& x, const HierarchicalState& s,
                           std::uint64_t seed);

/// Full training loop: per sphere, mine triplets on the sampled subset in
/// the current projected space, solve for a metric, factorize it, and
/// project the whole dataset by the factor. Deterministic given the seeds
/// in `hcfg` and `ns_cfg`.
HierarchicalResult hierarchical_train(const Dataset& x, int k,
                                      MiningStrategy strategy,
                                      const HierarchicalConfig& hcfg,
                                      const SolverConfig& scfg,
                                      const NegSamplingConfig& ns_cfg = {});

}  // namespace trimet
