#include "trimet/hierarchical.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>

#include "trimet/rng.hpp"

namespace trimet {

namespace {

constexpr int kMaxCenterAttempts = 50;
constexpr int kMinSphereMembers = 4;

void check_config(const HierarchicalConfig& cfg) {
  if (cfg.t_outer < 1) throw std::invalid_argument("t_outer must be positive");
  if (cfg.r0_factor <= 0.0) throw std::invalid_argument("r0_factor must be positive");
  if (cfg.dr_factor <= 0.0) throw std::invalid_argument("dr_factor must be positive");
  if (cfg.ns_init_frac <= 0.0 || cfg.ns_init_frac > 1.0)
    throw std::invalid_argument("ns_init_frac must be in (0, 1]");
  if (cfg.ns_clip_low < 1 || cfg.ns_clip_low > cfg.ns_clip_high)
    throw std::invalid_argument("sphere-count clip bounds must satisfy 1 <= low <= high");
  if (cfg.ns_shrink_frac <= 0.0 || cfg.ns_shrink_frac >= 1.0)
    throw std::invalid_argument("ns_shrink_frac must be in (0, 1)");
  if (cfg.p_init <= 0.0 || cfg.p_init > 1.0)
    throw std::invalid_argument("p_init must be in (0, 1]");
  if (cfg.p_decrement <= 0.0) throw std::invalid_argument("p_decrement must be positive");
  if (cfg.p_floor <= 0.0 || cfg.p_floor > cfg.p_init)
    throw std::invalid_argument("p_floor must be in (0, p_init]");
}

// Partial Fisher-Yates; result returned in ascending index order.
std::vector<int> sample_without_replacement(std::vector<int> pool, int take,
                                            std::mt19937_64& rng) {
  for (int i = 0; i < take; ++i) {
    const std::uint64_t span = static_cast<std::uint64_t>(pool.size() - i);
    const int j = i + static_cast<int>(bounded_uint(rng, span));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(take));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

HierarchicalState init_schedule(const Dataset& x, const HierarchicalConfig& cfg) {
  x.validate();
  check_config(cfg);
  const Eigen::Index n = x.size();
  if (n < 2) throw std::invalid_argument("schedule needs at least 2 points");

  // sigma: average per-feature sample standard deviation.
  const Eigen::RowVectorXd mean = x.points.colwise().mean();
  const Matrix centered = x.points.rowwise() - mean;
  const Eigen::RowVectorXd var =
      centered.array().square().colwise().sum() / static_cast<double>(n - 1);
  const double sigma = var.array().sqrt().mean();
  if (sigma <= 0.0)
    throw std::invalid_argument("dataset has zero variance; the sphere radius would be 0");

  HierarchicalState s;
  s.tau = 1;
  s.sigma = sigma;
  s.radius = cfg.r0_factor * sigma;
  const int raw = static_cast<int>(std::floor(cfg.ns_init_frac * static_cast<double>(n)));
  s.n_spheres = std::clamp(raw, cfg.ns_clip_low, cfg.ns_clip_high);
  s.portion = cfg.p_init;
  return s;
}

HierarchicalState update_schedule(const HierarchicalState& s,
                                  const HierarchicalConfig& cfg) {
  check_config(cfg);
  HierarchicalState out = s;
  out.tau = s.tau + 1;
  out.radius = s.radius + cfg.dr_factor * s.sigma;
  const int shrink = static_cast<int>(
      std::ceil(cfg.ns_shrink_frac * static_cast<double>(s.n_spheres)));
  out.n_spheres = std::max(s.n_spheres - shrink, 1);
  out.portion = std::max(s.portion - cfg.p_decrement, cfg.p_floor);
  return out;
}

SphereSample sample_sphere(const Dataset& x, const HierarchicalState& s,
                           std::uint64_t seed) {
  x.validate();
  const Eigen::Index n = x.size();
  const Eigen::Index d = x.dim();
  const Vector lo = x.points.colwise().minCoeff().transpose();
  const Vector hi = x.points.colwise().maxCoeff().transpose();
  const double r2 = s.radius * s.radius;

  std::mt19937_64 rng(seed);
  SphereSample sample;
  for (int attempt = 0; attempt < kMaxCenterAttempts; ++attempt) {
    Vector center(d);
    for (Eigen::Index f = 0; f < d; ++f)
      center(f) = lo(f) + uniform01(rng) * (hi(f) - lo(f));

    std::vector<int> members;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dist2 = (x.points.row(i).transpose() - center).squaredNorm();
      if (dist2 <= r2) members.push_back(static_cast<int>(i));
    }

    std::map<int, std::vector<int>> by_class;
    for (int i : members) by_class[x.labels[static_cast<std::size_t>(i)]].push_back(i);
    if (static_cast<int>(members.size()) < kMinSphereMembers || by_class.size() < 2)
      continue;

    sample.center = std::move(center);
    sample.member_indices = std::move(members);
    for (auto& [cls, idx] : by_class) {
      const int count = static_cast<int>(idx.size());
      const int take = std::clamp(
          static_cast<int>(std::ceil(s.portion * static_cast<double>(count))), 1, count);
      for (int i : sample_without_replacement(std::move(idx), take, rng))
        sample.sampled_indices.push_back(i);
    }
    std::sort(sample.sampled_indices.begin(), sample.sampled_indices.end());
    return sample;
  }
  return sample;  // empty: caller skips this sphere
}

HierarchicalResult hierarchical_train(const Dataset& x, int k,
                                      MiningStrategy strategy,
                                      const HierarchicalConfig& hcfg,
                                      const SolverConfig& scfg,
                                      const NegSamplingConfig& ns_cfg) {
  x.validate();
  HierarchicalState state = init_schedule(x, hcfg);

  HierarchicalResult result;
  result.composite = ProjectionMatrix::identity(x.dim());
  result.final_data = x;

  const std::uint64_t ns_base =
      splitmix64(static_cast<std::uint64_t>(hcfg.seed) ^
                 splitmix64(static_cast<std::uint64_t>(ns_cfg.seed)));

  for (int tau = 1; tau <= hcfg.t_outer; ++tau) {
    if (tau > 1) state = update_schedule(state, hcfg);
    for (int sph = 1; sph <= state.n_spheres; ++sph) {
      const auto t0 = std::chrono::steady_clock::now();
      SphereTraceRow row;
      row.tau = tau;
      row.sphere_index = sph;
      row.radius = state.radius;

      const std::uint64_t sphere_seed = derive_seed(
          static_cast<std::uint64_t>(hcfg.seed), "hier.sphere",
          static_cast<std::uint64_t>(tau), static_cast<std::uint64_t>(sph));
      const SphereSample sample = sample_sphere(result.final_data, state, sphere_seed);
      row.n_members = static_cast<int>(sample.member_indices.size());
      row.n_sampled = static_cast<int>(sample.sampled_indices.size());

      if (!sample.empty()) {
        // Mining needs two points per class; classes that came through the
        // stratified draw with a single point sit this sphere out.
        std::map<int, int> counts;
        for (int i : sample.sampled_indices)
          ++counts[result.final_data.labels[static_cast<std::size_t>(i)]];
        int kept_classes = 0;
        for (const auto& [cls, cnt] : counts)
          if (cnt >= 2) ++kept_classes;
        if (kept_classes >= 2) {
          std::vector<int> usable;
          for (int i : sample.sampled_indices)
            if (counts[result.final_data.labels[static_cast<std::size_t>(i)]] >= 2)
              usable.push_back(i);
          const Dataset sub = result.final_data.subset(usable);

          NegSamplingConfig ns_local = ns_cfg;
          ns_local.seed = static_cast<std::int64_t>(
              derive_seed(ns_base, "hier.ns", static_cast<std::uint64_t>(tau),
                          static_cast<std::uint64_t>(sph)));
          const TripletSet triplets =
              mine(strategy, sub, k, MetricMatrix::identity(sub.dim()), ns_local);
          row.n_triplets = static_cast<int>(triplets.triplets.size());

          if (!triplets.triplets.empty()) {
            auto [metric, history] =
                solve(sub, triplets, scfg, MetricMatrix::identity(sub.dim()));
            row.final_objective = objective(metric, sub, triplets, scfg.c).total;

            const ProjectionMatrix factor =
                factorize_metric(metric, default_strengthen_eps(metric));
            result.final_data = project_dataset(result.final_data, factor);
            result.composite.l = result.composite.l * factor.l;
          }
        }
      }

      row.wall_time_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
      result.trace.push_back(row);
    }
  }
  return result;
}

}  // namespace trimet
