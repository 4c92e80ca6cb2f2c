#include "trimet/solver.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

namespace trimet {

namespace {

// The data and the triplet set are fixed for the whole descent, so every
// pair difference and outer product is precomputed once. Per iteration only
// the pair distances under the current metric and the hinge pass remain.
struct CompiledProblem {
  Eigen::Index d = 0;
  Matrix diffs;        // d x P, one column per distinct (u, v) pair
  Matrix outers_flat;  // d*d x P, vec(C_uv) per column
  std::vector<int> pull_pairs;          // distinct (anchor, positive) pairs
  std::vector<int> triplet_ap;          // per triplet: pair index of (a, p)
  std::vector<int> triplet_an;          // per triplet: pair index of (a, n)
  Matrix pull_grad;                     // sum of C_ap over pull_pairs
};

CompiledProblem compile(const Dataset& x, const TripletSet& t) {
  const Eigen::Index n = x.size();
  const Eigen::Index d = x.dim();
  std::unordered_map<std::int64_t, int> pair_index;
  std::vector<std::pair<int, int>> pairs;
  auto intern = [&](int u, int v) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw std::invalid_argument("triplet index out of range");
    const std::int64_t key = static_cast<std::int64_t>(u) * n + v;
    auto [it, inserted] = pair_index.emplace(key, static_cast<int>(pairs.size()));
    if (inserted) pairs.emplace_back(u, v);
    return it->second;
  };

  CompiledProblem cp;
  cp.d = d;
  cp.triplet_ap.reserve(t.triplets.size());
  cp.triplet_an.reserve(t.triplets.size());
  for (const Triplet& tr : t.triplets) {
    cp.triplet_ap.push_back(intern(tr.anchor, tr.positive));
    cp.triplet_an.push_back(intern(tr.anchor, tr.negative));
  }
  std::vector<char> is_pull(pairs.size(), 0);
  for (int ap : cp.triplet_ap) is_pull[static_cast<std::size_t>(ap)] = 1;

  const Eigen::Index P = static_cast<Eigen::Index>(pairs.size());
  cp.diffs.resize(d, P);
  cp.outers_flat.resize(d * d, P);
  cp.pull_grad = Matrix::Zero(d, d);
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto [u, v] = pairs[static_cast<std::size_t>(p)];
    const Vector diff = x.points.row(u).transpose() - x.points.row(v).transpose();
    cp.diffs.col(p) = diff;
    const Matrix outer = diff * diff.transpose();
    cp.outers_flat.col(p) = Eigen::Map<const Vector>(outer.data(), d * d);
    if (is_pull[static_cast<std::size_t>(p)]) {
      cp.pull_pairs.push_back(static_cast<int>(p));
      cp.pull_grad += outer;
    }
  }
  return cp;
}

void pair_distances(const CompiledProblem& cp, const Matrix& m, Vector& out) {
  const Eigen::Index P = cp.diffs.cols();
  out.resize(P);
  const Matrix transformed = m * cp.diffs;
  for (Eigen::Index p = 0; p < P; ++p) {
    const double v = cp.diffs.col(p).dot(transformed.col(p));
    out(p) = v < 0.0 ? 0.0 : v;
  }
}

ObjectiveBreakdown eval_objective(const CompiledProblem& cp, const Vector& dist,
                                  double c) {
  ObjectiveBreakdown bd;
  for (int p : cp.pull_pairs) bd.pull += dist(p);
  for (std::size_t i = 0; i < cp.triplet_ap.size(); ++i) {
    const double hinge = 1.0 + dist(cp.triplet_ap[i]) - dist(cp.triplet_an[i]);
    if (hinge > 0.0) {
      bd.push += hinge;
      ++bd.active_count;
    }
  }
  bd.total = bd.pull + c * bd.push;
  return bd;
}

Matrix eval_subgradient(const CompiledProblem& cp, const Vector& dist, double c) {
  Vector coeff = Vector::Zero(cp.diffs.cols());
  for (std::size_t i = 0; i < cp.triplet_ap.size(); ++i) {
    const double hinge = 1.0 + dist(cp.triplet_ap[i]) - dist(cp.triplet_an[i]);
    if (hinge > 0.0) {
      coeff(cp.triplet_ap[i]) += 1.0;
      coeff(cp.triplet_an[i]) -= 1.0;
    }
  }
  const Vector flat = cp.outers_flat * coeff;
  return cp.pull_grad + c * Eigen::Map<const Matrix>(flat.data(), cp.d, cp.d);
}

void check_config(const SolverConfig& cfg) {
  if (cfg.c <= 0.0) throw std::invalid_argument("c must be positive");
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (cfg.step0 <= 0.0) throw std::invalid_argument("step0 must be positive");
  if (cfg.step_decay <= 0.0 || cfg.step_decay > 1.0)
    throw std::invalid_argument("step_decay must be in (0, 1]");
  if (cfg.tol <= 0.0) throw std::invalid_argument("tol must be positive");
  if (cfg.project_every < 1) throw std::invalid_argument("project_every must be positive");
}

}  // namespace

ObjectiveBreakdown objective(const MetricMatrix& m, const Dataset& x,
                             const TripletSet& t, double c) {
  if (x.dim() != m.dim())
    throw std::invalid_argument("metric dimension does not match data");
  if (t.triplets.empty()) return {};
  const CompiledProblem cp = compile(x, t);
  Vector dist;
  pair_distances(cp, m.m, dist);
  return eval_objective(cp, dist, c);
}

Matrix subgradient(const MetricMatrix& m, const Dataset& x, const TripletSet& t,
                   double c) {
  if (x.dim() != m.dim())
    throw std::invalid_argument("metric dimension does not match data");
  if (t.triplets.empty()) return Matrix::Zero(x.dim(), x.dim());
  const CompiledProblem cp = compile(x, t);
  Vector dist;
  pair_distances(cp, m.m, dist);
  return eval_subgradient(cp, dist, c);
}

std::pair<MetricMatrix, std::vector<ObjectiveBreakdown>> solve(
    const Dataset& x, const TripletSet& t, const SolverConfig& cfg,
    const MetricMatrix& m0) {
  check_config(cfg);
  if (t.triplets.empty())
    throw std::invalid_argument("solve requires a non-empty triplet set");
  if (x.dim() != m0.dim())
    throw std::invalid_argument("metric dimension does not match data");
  if (!m0.is_valid())
    throw std::invalid_argument("initial metric must be symmetric PSD");

  const CompiledProblem cp = compile(x, t);
  const double step_base =
      cfg.scale_step_by_triplets
          ? cfg.step0 / static_cast<double>(t.triplets.size())
          : cfg.step0;

  Matrix m = m0.m;
  Vector dist;
  pair_distances(cp, m, dist);
  ObjectiveBreakdown current = eval_objective(cp, dist, cfg.c);

  std::vector<ObjectiveBreakdown> history;
  history.reserve(static_cast<std::size_t>(cfg.max_iter) + 1);
  history.push_back(current);

  Matrix best = m;
  double best_total = current.total;
  double running_best = current.total;
  int stall_count = 0;
  double step = step_base;

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const Matrix grad = eval_subgradient(cp, dist, cfg.c);
    m -= step * grad;
    step *= cfg.step_decay;

    const bool projected = (iter + 1) % cfg.project_every == 0;
    if (projected) m = psd_project(m).m;

    pair_distances(cp, m, dist);
    current = eval_objective(cp, dist, cfg.c);
    history.push_back(current);

    // Only PSD-projected iterates are candidates for the returned metric.
    if (projected && current.total < best_total) {
      best = m;
      best_total = current.total;
    }

    const double prev = running_best;
    if (current.total < running_best) running_best = current.total;
    const double improvement = (prev - running_best) / std::max(std::abs(prev), 1e-12);
    if (improvement < cfg.tol) {
      if (++stall_count >= 10) break;
    } else {
      stall_count = 0;
    }
  }

  m = psd_project(m).m;
  pair_distances(cp, m, dist);
  current = eval_objective(cp, dist, cfg.c);
  if (current.total < best_total) {
    best = m;
    best_total = current.total;
  }
  return {MetricMatrix{best}, history};
}

}  // namespace trimet
