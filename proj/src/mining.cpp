#include "trimet/mining.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "trimet/rng.hpp"

namespace trimet {

namespace {

constexpr double kDensityFloor = 1e-12;

Matrix pairwise_distance_sq(const Dataset& x, const MetricMatrix& metric) {
  const Eigen::Index n = x.size();
  Matrix dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = mahalanobis_distance_sq(x.points.row(i).transpose(),
                                               x.points.row(j).transpose(), metric);
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }
  return dist;
}

void check_classes(const Dataset& x) {
  for (const auto& [cls, count] : x.class_counts()) {
    if (count < 2) {
      throw std::invalid_argument("class " + std::to_string(cls) +
                                  " has a single member; mining needs at least two per class");
    }
  }
}

// Candidates sorted by (ascending distance, ascending index), truncated to k.
std::vector<int> nearest_of(const std::vector<int>& candidates,
                            const Matrix& dist, int anchor, int k) {
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
    const double da = dist(anchor, a), db = dist(anchor, b);
    return da != db ? da < db : a < b;
  });
  if (static_cast<int>(sorted.size()) > k) sorted.resize(k);
  return sorted;
}

std::vector<int> farthest_of(const std::vector<int>& candidates,
                             const Matrix& dist, int anchor, int k) {
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
    const double da = dist(anchor, a), db = dist(anchor, b);
    return da != db ? da > db : a < b;
  });
  if (static_cast<int>(sorted.size()) > k) sorted.resize(k);
  return sorted;
}

NeighborIndicators indicators_from(const Matrix& dist,
                                   const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(labels.size());
  NeighborIndicators out;
  out.same_class_near.resize(n);
  out.same_class_far.resize(n);
  out.diff_class_near.resize(n);
  out.diff_class_far.resize(n);
  std::vector<int> same, diff;
  for (int i = 0; i < n; ++i) {
    same.clear();
    diff.clear();
    for (int l = 0; l < n; ++l) {
      if (l == i) continue;
      (labels[l] == labels[i] ? same : diff).push_back(l);
    }
    out.same_class_near[i] = nearest_of(same, dist, i, k);
    out.same_class_far[i] = farthest_of(same, dist, i, k);
    out.diff_class_near[i] = nearest_of(diff, dist, i, k);
    out.diff_class_far[i] = farthest_of(diff, dist, i, k);
  }
  return out;
}

}  // namespace

std::string to_string(MiningStrategy s) {
  switch (s) {
    case MiningStrategy::KBA: return "k-BA";
    case MiningStrategy::KBH: return "k-BH";
    case MiningStrategy::KBSH: return "k-BSH";
    case MiningStrategy::KHPEN: return "k-HPEN";
    case MiningStrategy::KEPEN: return "k-EPEN";
    case MiningStrategy::KEPHN: return "k-EPHN";
    case MiningStrategy::KNS: return "k-NS";
  }
  throw std::invalid_argument("unknown strategy tag");
}

MiningStrategy strategy_from_string(const std::string& name) {
  std::string up;
  up.reserve(name.size());
  for (char c : name)
    if (c != '-' && c != '_') up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "KBA") return MiningStrategy::KBA;
  if (up == "KBH") return MiningStrategy::KBH;
  if (up == "KBSH") return MiningStrategy::KBSH;
  if (up == "KHPEN") return MiningStrategy::KHPEN;
  if (up == "KEPEN") return MiningStrategy::KEPEN;
  if (up == "KEPHN") return MiningStrategy::KEPHN;
  if (up == "KNS") return MiningStrategy::KNS;
  throw std::invalid_argument("unknown mining strategy '" + name +
                              "' (expected one of kba, kbh, kbsh, khpen, kepen, kephn, kns)");
}

std::vector<MiningStrategy> all_strategies() {
  return {MiningStrategy::KBA,   MiningStrategy::KBH,   MiningStrategy::KBSH,
          MiningStrategy::KHPEN, MiningStrategy::KEPEN, MiningStrategy::KEPHN,
          MiningStrategy::KNS};
}

NeighborIndicators build_indicators(const Dataset& x, int k, const MetricMatrix& metric) {
  x.validate();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  check_classes(x);
  const Matrix dist = pairwise_distance_sq(x, metric);
  return indicators_from(dist, x.labels, k);
}

TripletSet mine(MiningStrategy strategy, const Dataset& x, int k,
                const MetricMatrix& metric, const NegSamplingConfig& ns_cfg) {
  x.validate();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  check_classes(x);
  const int n = static_cast<int>(x.size());
  const Matrix dist = pairwise_distance_sq(x, metric);
  const NeighborIndicators ind = indicators_from(dist, x.labels, k);

  TripletSet out;
  out.strategy = strategy;
  out.k = k;

  auto emit_product = [&](const std::vector<std::vector<int>>& positives,
                          const std::vector<std::vector<int>>& negatives) {
    for (int i = 0; i < n; ++i)
      for (int j : positives[i])
        for (int l : negatives[i]) out.triplets.push_back({i, j, l});
  };

  switch (strategy) {
    case MiningStrategy::KBA: {
      // k nearest positives crossed with every different-class point.
      std::vector<int> negs;
      for (int i = 0; i < n; ++i) {
        negs.clear();
        for (int l = 0; l < n; ++l)
          if (x.labels[l] != x.labels[i]) negs.push_back(l);
        for (int j : ind.same_class_near[i])
          for (int l : negs) out.triplets.push_back({i, j, l});
      }
      break;
    }
    case MiningStrategy::KBH:
      emit_product(ind.same_class_far, ind.diff_class_near);
      break;
    case MiningStrategy::KBSH: {
      // Semi-hard: nearest negatives that still lie farther than the
      // positive. Pairs with no qualifying negative contribute nothing.
      std::vector<int> qualifying;
      for (int i = 0; i < n; ++i) {
        for (int j : ind.same_class_near[i]) {
          qualifying.clear();
          for (int l = 0; l < n; ++l)
            if (x.labels[l] != x.labels[i] && dist(i, l) > dist(i, j))
              qualifying.push_back(l);
          for (int l : nearest_of(qualifying, dist, i, k))
            out.triplets.push_back({i, j, l});
        }
      }
      break;
    }
    case MiningStrategy::KHPEN:
      emit_product(ind.same_class_far, ind.diff_class_far);
      break;
    case MiningStrategy::KEPEN:
      emit_product(ind.same_class_near, ind.diff_class_far);
      break;
    case MiningStrategy::KEPHN:
      emit_product(ind.same_class_near, ind.diff_class_near);
      break;
    case MiningStrategy::KNS: {
      std::vector<int> candidates;
      for (int i = 0; i < n; ++i) {
        candidates.clear();
        for (int l = 0; l < n; ++l)
          if (x.labels[l] != x.labels[i]) candidates.push_back(l);
        if (candidates.empty() || ind.same_class_near[i].empty()) continue;
        const std::vector<double> probs =
            negative_selection_probabilities(i, candidates, x, metric, ns_cfg);
        const int count = std::min<int>(k, static_cast<int>(candidates.size()));
        // One stream per anchor keeps parallel and serial mining identical.
        std::mt19937_64 rng(static_cast<std::uint64_t>(ns_cfg.seed) +
                            static_cast<std::uint64_t>(i));
        for (int j : ind.same_class_near[i])
          for (int pick : roulette_select(probs, count, rng))
            out.triplets.push_back({i, j, candidates[pick]});
      }
      break;
    }
  }
  return out;
}

double negative_density(double dist, int d) {
  if (d < 2) throw std::invalid_argument("density is defined for d >= 2");
  if (dist < 0.0) throw std::invalid_argument("distance must be non-negative");
  const double base = std::max(0.0, 1.0 - 0.25 * dist * dist);
  return std::pow(dist, d - 2) * std::pow(base, 0.5 * (d - 3));
}

std::vector<double> negative_selection_probabilities(int anchor,
                                                     const std::vector<int>& candidates,
                                                     const Dataset& x,
                                                     const MetricMatrix& metric,
                                                     const NegSamplingConfig& cfg) {
  if (candidates.empty())
    throw std::invalid_argument("candidate list must not be empty");
  if (cfg.lambda <= 0.0)
    throw std::invalid_argument("lambda must be positive");
  const int n = static_cast<int>(x.size());
  if (anchor < 0 || anchor >= n)
    throw std::invalid_argument("anchor index out of range");
  std::vector<double> d2(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const int l = candidates[c];
    if (l < 0 || l >= n) throw std::invalid_argument("candidate index out of range");
    if (x.labels[l] == x.labels[anchor])
      throw std::invalid_argument("candidate " + std::to_string(l) +
                                  " has the anchor's class");
    d2[c] = mahalanobis_distance_sq(x.points.row(anchor).transpose(),
                                    x.points.row(l).transpose(), metric);
  }
  if (cfg.normalize_unit_scale) {
    const double dmax = *std::max_element(d2.begin(), d2.end());
    if (dmax > 0.0)
      for (double& v : d2) v *= 2.0 / dmax;
  }
  std::vector<double> weights(candidates.size());
  double total = 0.0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double q = negative_density(d2[c], static_cast<int>(x.dim()));
    weights[c] = std::min(cfg.lambda, 1.0 / std::max(q, kDensityFloor));
    total += weights[c];
  }
  if (total <= 0.0) {
    // Every weight collapsed (possible only at the d=2 singularity).
    std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(weights.size()));
    return weights;
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::vector<int> roulette_select(const std::vector<double>& probs, int count,
                                 std::mt19937_64& rng) {
  if (probs.empty()) throw std::invalid_argument("probability list must not be empty");
  if (count < 1 || count > static_cast<int>(probs.size()))
    throw std::invalid_argument("count must be in [1, len(probs)]");
  double total = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("probabilities must sum to 1");

  std::vector<double> w = probs;
  std::vector<bool> drawn(probs.size(), false);
  std::vector<int> picks;
  picks.reserve(count);
  for (int t = 0; t < count; ++t) {
    double remaining = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (!drawn[i]) remaining += w[i];
    int pick = -1;
    if (remaining <= 0.0) {
      // Only zero-probability entries left; fall back to index order.
      for (std::size_t i = 0; i < w.size(); ++i)
        if (!drawn[i]) { pick = static_cast<int>(i); break; }
    } else {
      const double u = uniform01(rng) * remaining;
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (drawn[i]) continue;
        acc += w[i];
        if (acc > u) { pick = static_cast<int>(i); break; }
        if (w[i] > 0.0) pick = static_cast<int>(i);  // guard against round-off at the top end
      }
    }
    drawn[static_cast<std::size_t>(pick)] = true;
    picks.push_back(pick);
  }
  return picks;
}

std::vector<int> roulette_select(const std::vector<double>& probs, int count,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return roulette_select(probs, count, rng);
}

void write_triplets(std::ostream& os, const TripletSet& t) {
  os << "# strategy=" << to_string(t.strategy) << " k=" << t.k << "\n";
  for (const Triplet& tr : t.triplets)
    os << tr.anchor << ' ' << tr.positive << ' ' << tr.negative << "\n";
}

TripletSet read_triplets(std::istream& is) {
  TripletSet out;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("triplet file is empty");
  std::string tag;
  int k = 0;
  {
    std::istringstream hs(line);
    std::string hash, strat_kv, k_kv;
    hs >> hash >> strat_kv >> k_kv;
    if (hash != "#" || strat_kv.rfind("strategy=", 0) != 0 || k_kv.rfind("k=", 0) != 0)
      throw std::runtime_error("bad triplet header: " + line);
    tag = strat_kv.substr(9);
    k = std::stoi(k_kv.substr(2));
  }
  out.strategy = strategy_from_string(tag);
  out.k = k;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    Triplet t;
    if (!(ls >> t.anchor >> t.positive >> t.negative))
      throw std::runtime_error("bad triplet at line " + std::to_string(lineno));
    out.triplets.push_back(t);
  }
  return out;
}

}  // namespace trimet
