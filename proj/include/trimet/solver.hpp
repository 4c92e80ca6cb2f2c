#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"

namespace trimet {

/// Projected-subgradient settings for the large-margin objective.
///
/// When `scale_step_by_triplets` is set (the default), the effective
/// initial step is step0 / |triplets|, which keeps the update magnitude
/// independent of how many terms the mining strategy emitted.
struct SolverConfig {
  double c = 1.0;
  int max_iter = 2000;
  double step0 = 1e-3;
  double step_decay = 0.999;
  double tol = 1e-6;
  int project_every = 10;
  bool scale_step_by_triplets = true;
};

/// Objective value split into its pull and push parts.
/// total = pull + c * push; active_count is the number of triplets whose
/// hinge is strictly positive.
struct ObjectiveBreakdown {
  double pull = 0.0;
  double push = 0.0;
  double total = 0.0;
  int active_count = 0;
};

/// Evaluates the large-margin objective: the pull term sums the metric
/// distance over the distinct anchor-positive pairs of `t`; the push term
/// sums the unit-margin hinge max(0, 1 + D(a,p) - D(a,n)) over all
/// triplets.
ObjectiveBreakdown objective(const MetricMatrix& m, const Dataset& x,
                             const TripletSet& t, double c);

/// Subgradient of the objective at `m`:
///   sum_{(a,p)} C_ap  +  c * sum_{active} (C_ap - C_an),
/// where C_uv is the outer product of (x_u - x_v) with itself.
Matrix subgradient(const MetricMatrix& m, const Dataset& x, const TripletSet& t,
                   double c);

/// Minimizes the objective over PSD matrices by projected subgradient
/// descent starting from `m0`. Returns the best PSD iterate seen together
/// with the per-iteration objective history (entry 0 is the objective at
/// m0). Stops early when the running best improves by less than
/// cfg.tol (relative) for 10 consecutive iterations.
std::pair<MetricMatrix, std::vector<ObjectiveBreakdown>> solve(
    const Dataset& x, const TripletSet& t, const SolverConfig& cfg,
    const MetricMatrix& m0);

}  // namespace trimet
