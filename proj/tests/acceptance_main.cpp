// Acceptance runner: executes the eight release criteria end to end and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.
//
// Usage: trimet_acceptance [path/to/iris.csv]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oracle_mining.hpp"
#include "trimet/eval.hpp"
#include "trimet/hierarchical.hpp"
#include "trimet/io.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"
#include "trimet/rng.hpp"
#include "trimet/solver.hpp"
#include "trimet/synthetic.hpp"

using namespace trimet;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Dataset random_labeled(int n, int d, int classes, std::mt19937_64& rng) {
  Dataset x;
  x.points.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x.points(i, j) = normal01(rng);
    x.labels.push_back(i % classes);
  }
  return x;
}

MetricMatrix random_psd(int d, std::mt19937_64& rng) {
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal01(rng);
  return MetricMatrix{Matrix(a * a.transpose())};
}

double mean_accuracy(const BenchmarkReport& report, MiningStrategy s, TrainMode mode) {
  double sum = 0.0;
  int count = 0;
  for (const BenchmarkRow& r : report.rows) {
    if (r.strategy == s && r.mode == mode) {
      sum += r.accuracy_pct;
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

double mean_time(const BenchmarkReport& report, TrainMode mode) {
  double sum = 0.0;
  int count = 0;
  for (const BenchmarkRow& r : report.rows) {
    if (r.mode == mode) {
      sum += r.train_time_s;
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

BenchmarkConfig benchmark_defaults() {
  BenchmarkConfig cfg;
  cfg.solver.max_iter = 500;  // the per-cell budget the CLI uses
  return cfg;
}

// Hierarchical training beats 95% mean test accuracy on iris for every
// strategy, inside a 120 s budget.
Outcome criterion_1(const Dataset& iris) {
  const auto t0 = std::chrono::steady_clock::now();
  const BenchmarkReport report = run_benchmark(
      {{"iris", iris}}, all_strategies(), {TrainMode::Hierarchical},
      benchmark_defaults());
  const double wall = elapsed_s(t0);

  double worst = 101.0;
  MiningStrategy worst_strategy = MiningStrategy::KBA;
  for (MiningStrategy s : all_strategies()) {
    const double acc = mean_accuracy(report, s, TrainMode::Hierarchical);
    if (acc < worst) {
      worst = acc;
      worst_strategy = s;
    }
  }
  std::string detail = "worst strategy " + to_string(worst_strategy) + " at " +
                       fmt("%.2f", worst) + "%, " + fmt("%.1f", wall) + "s wall";
  if (worst < 95.0) return {false, "mean accuracy " + detail};
  if (wall >= 120.0) return {false, "exceeded 120s budget: " + detail};
  return {true, detail};
}

// Non-hierarchical hard mining reaches 93% mean accuracy on iris and the
// all-negatives strategy completes.
Outcome criterion_2(const Dataset& iris) {
  const BenchmarkReport report = run_benchmark(
      {{"iris", iris}}, {MiningStrategy::KBH, MiningStrategy::KBA},
      {TrainMode::NonHierarchical}, benchmark_defaults());
  const double kbh = mean_accuracy(report, MiningStrategy::KBH, TrainMode::NonHierarchical);
  int kba_rows = 0;
  for (const BenchmarkRow& r : report.rows)
    if (r.strategy == MiningStrategy::KBA) ++kba_rows;
  const std::string detail = "k-BH mean " + fmt("%.2f", kbh) + "%, k-BA " +
                             std::to_string(kba_rows) + " rows";
  if (kbh < 93.0) return {false, detail};
  if (kba_rows != 5) return {false, "k-BA did not complete: " + detail};
  return {true, detail};
}

// On the all-negatives strategy the sphere-sampled mode trains at least
// twice as fast as whole-dataset training (measured serially).
Outcome criterion_3(const Dataset& iris) {
  BenchmarkConfig cfg = benchmark_defaults();
  cfg.max_threads = 1;
  const BenchmarkReport report = run_benchmark(
      {{"iris", iris}}, {MiningStrategy::KBA},
      {TrainMode::NonHierarchical, TrainMode::Hierarchical}, cfg);
  const double flat = mean_time(report, TrainMode::NonHierarchical);
  const double hier = mean_time(report, TrainMode::Hierarchical);
  const std::string detail = "non-hierarchical " + fmt("%.3f", flat) +
                             "s vs hierarchical " + fmt("%.3f", hier) + "s (" +
                             fmt("%.1f", hier > 0 ? flat / hier : 0.0) + "x)";
  if (!(flat >= 2.0 * hier)) return {false, detail};
  return {true, detail};
}

// Every deterministic strategy matches a brute-force reference miner on
// 200 random datasets, inside a 30 s budget.
Outcome criterion_4() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  const MiningStrategy deterministic[] = {
      MiningStrategy::KBA,   MiningStrategy::KBH,   MiningStrategy::KBSH,
      MiningStrategy::KHPEN, MiningStrategy::KEPEN, MiningStrategy::KEPHN};
  for (int trial = 0; trial < 200; ++trial) {
    const int classes = 2 + static_cast<int>(bounded_uint(rng, 3));
    const int n = 2 * classes + static_cast<int>(bounded_uint(rng, 31 - 2 * classes));
    const int d = 1 + static_cast<int>(bounded_uint(rng, 5));
    const int k = 1 + static_cast<int>(bounded_uint(rng, 4));
    const Dataset x = random_labeled(n, d, classes, rng);
    const MetricMatrix m =
        (trial % 2 == 0) ? MetricMatrix::identity(d) : random_psd(d, rng);
    for (MiningStrategy s : deterministic) {
      const TripletSet mined = mine(s, x, k, m);
      if (!trimet_test::same_triplets(mined.triplets, trimet_test::oracle_mine(s, x, k, m)))
        return {false, "mismatch on trial " + std::to_string(trial) + " strategy " +
                           to_string(s) + " (n=" + std::to_string(n) +
                           ", d=" + std::to_string(d) + ", k=" + std::to_string(k) + ")"};
    }
  }
  const double wall = elapsed_s(t0);
  if (wall >= 30.0)
    return {false, "exceeded 30s budget: " + fmt("%.1f", wall) + "s"};
  return {true, "200 datasets x 6 strategies, " + fmt("%.1f", wall) + "s"};
}

// Numerical backbone: PSD projection, factorization, projection/metric
// equivalence, and the subgradient against finite differences.
Outcome criterion_5() {
  std::mt19937_64 rng(505);

  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + static_cast<int>(bounded_uint(rng, 5));
    Matrix a(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a(i, j) = 2.0 * normal01(rng);
    const Matrix sym = 0.5 * (a + a.transpose());
    const MetricMatrix p = psd_project(sym);
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.m);
    if (es.eigenvalues().minCoeff() < -1e-8)
      return {false, "projection left eigenvalue " +
                         fmt("%.2e", es.eigenvalues().minCoeff())};

    const ProjectionMatrix l = factorize_metric(p, 0.0);
    const double rel = (l.l * l.l.transpose() - p.m).norm() / std::max(p.m.norm(), 1e-12);
    if (rel > 1e-8)
      return {false, "factorization residual " + fmt("%.2e", rel)};
  }

  Dataset x = random_labeled(30, 4, 2, rng);
  const MetricMatrix m = random_psd(4, rng);
  const Dataset projected = project_dataset(x, factorize_metric(m, 0.0));
  for (int trial = 0; trial < 100; ++trial) {
    const int i = static_cast<int>(bounded_uint(rng, 30));
    const int j = static_cast<int>(bounded_uint(rng, 30));
    const double dm = mahalanobis_distance_sq(x.points.row(i).transpose(),
                                              x.points.row(j).transpose(), m);
    const double de = (projected.points.row(i) - projected.points.row(j)).squaredNorm();
    if (std::abs(dm - de) > 1e-6 * std::max(1.0, std::abs(dm)))
      return {false, "projection/metric distance gap " + fmt("%.2e", std::abs(dm - de))};
  }

  const TripletSet t = mine(MiningStrategy::KEPHN, x, 2, MetricMatrix::identity(4));
  const double h = 1e-6;
  int tested = 0;
  for (int trial = 0; trial < 400 && tested < 50; ++trial) {
    Matrix base(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) base(i, j) = normal01(rng);
    const MetricMatrix mm{Matrix(base * base.transpose() + 0.1 * Matrix::Identity(4, 4))};

    bool near_kink = false;
    for (const Triplet& tr : t.triplets) {
      const double dap = mahalanobis_distance_sq(x.points.row(tr.anchor).transpose(),
                                                 x.points.row(tr.positive).transpose(), mm);
      const double dan = mahalanobis_distance_sq(x.points.row(tr.anchor).transpose(),
                                                 x.points.row(tr.negative).transpose(), mm);
      if (std::abs(1.0 + dap - dan) < 1e-3) {
        near_kink = true;
        break;
      }
    }
    if (near_kink) continue;

    Matrix dir(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) dir(i, j) = normal01(rng);
    dir = 0.5 * (dir + dir.transpose());
    dir /= dir.norm();
    const Matrix g = subgradient(mm, x, t, 1.0);
    const double analytic = (g.array() * dir.array()).sum();
    const double fp = objective(MetricMatrix{Matrix(mm.m + h * dir)}, x, t, 1.0).total;
    const double fm = objective(MetricMatrix{Matrix(mm.m - h * dir)}, x, t, 1.0).total;
    const double numeric = (fp - fm) / (2.0 * h);
    if (std::abs(analytic - numeric) > 1e-4 * std::max(1.0, std::abs(numeric)))
      return {false, "subgradient/finite-difference gap " +
                         fmt("%.2e", std::abs(analytic - numeric))};
    ++tested;
  }
  if (tested < 50)
    return {false, "only " + std::to_string(tested) + " finite-difference points away from kinks"};
  return {true, "100 projections, 100 factorizations, 100 distance pairs, 50 gradient checks"};
}

// A learned metric lifts 1-NN accuracy on anisotropic gaussians by at
// least 10 points over plain Euclidean distance.
Outcome criterion_6() {
  SyntheticSpec spec;
  spec.generator = "anisotropic_gaussians";
  spec.classes = 3;
  spec.per_class = 40;
  spec.dim = 6;
  spec.separation = 4.0;
  spec.noise_std = 5.0;
  const Dataset data = generate_synthetic(spec, 7);

  auto accuracy = [](const std::vector<int>& pred, const std::vector<int>& truth) {
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == truth[i]) ++hits;
    return 100.0 * hits / static_cast<double>(pred.size());
  };

  double euclid_sum = 0.0;
  double learned_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SplitIndices split = stratified_split(data, seed);
    const Dataset train = data.subset(split.train);
    const Dataset test = data.subset(split.test);

    const MetricMatrix id = MetricMatrix::identity(train.dim());
    euclid_sum += accuracy(knn_classify(train, test.points, 1, id), test.labels);

    const TripletSet t = mine(MiningStrategy::KBH, train, 3, id);
    SolverConfig scfg;
    scfg.max_iter = 500;
    const MetricMatrix learned = solve(train, t, scfg, id).first;
    learned_sum += accuracy(knn_classify(train, test.points, 1, learned), test.labels);
  }
  const double euclid = euclid_sum / 5.0;
  const double learned = learned_sum / 5.0;
  const std::string detail = "euclidean " + fmt("%.2f", euclid) + "%, learned " +
                             fmt("%.2f", learned) + "%, gap " +
                             fmt("%.2f", learned - euclid);
  if (learned - euclid < 10.0) return {false, detail};
  return {true, detail};
}

// Negative-sampling probabilities are a distribution, cap zero-distance
// candidates at lambda, and follow the documented density: the chord
// lengths of uniform point pairs on the unit sphere histogram to the
// d = 3 density within 5% per bin.
Outcome criterion_7() {
  std::mt19937_64 rng(707);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(bounded_uint(rng, 5));
    const int n = 6 + static_cast<int>(bounded_uint(rng, 20));
    const Dataset x = random_labeled(n, d, 2, rng);
    std::vector<int> candidates;
    for (int i = 1; i < n; ++i)
      if (x.labels[i] != x.labels[0]) candidates.push_back(i);
    const auto probs =
        negative_selection_probabilities(0, candidates, x, MetricMatrix::identity(d), {});
    double sum = 0.0;
    for (double p : probs) {
      if (p < 0.0) return {false, "negative probability"};
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      return {false, "probabilities summed to " + fmt("%.17g", sum)};
  }

  {
    Dataset x;
    x.points.resize(3, 3);
    x.points << 0, 0, 0, 0, 0, 0, 1, 0, 0;
    x.labels = {0, 1, 1};
    const auto probs =
        negative_selection_probabilities(0, {1, 2}, x, MetricMatrix::identity(3), {});
    if (std::abs(probs[0] - 1.4 / 2.4) > 1e-15)
      return {false, "zero-distance weight not capped at lambda: " + fmt("%.17g", probs[0])};
  }

  // Histogram of 100000 pairwise chord lengths, 10 bins over [0, 2].
  constexpr int kPairs = 100000;
  constexpr int kBins = 10;
  std::mt19937_64 mc(424242);
  auto sphere_point = [&mc] {
    Vector v(3);
    double norm = 0.0;
    do {
      for (int i = 0; i < 3; ++i) v(i) = normal01(mc);
      norm = v.norm();
    } while (norm == 0.0);
    return Vector(v / norm);
  };
  int counts[kBins] = {};
  for (int i = 0; i < kPairs; ++i) {
    const double chord = (sphere_point() - sphere_point()).norm();
    int bin = static_cast<int>(chord / 2.0 * kBins);
    if (bin >= kBins) bin = kBins - 1;
    ++counts[bin];
  }

  // Expected bin mass by trapezoidal integration of the density.
  double bin_mass[kBins] = {};
  double total_mass = 0.0;
  constexpr int kSteps = 2000;
  for (int b = 0; b < kBins; ++b) {
    const double lo = 2.0 * b / kBins;
    const double hi = 2.0 * (b + 1) / kBins;
    double acc = 0.0;
    for (int s = 0; s < kSteps; ++s) {
      const double a = lo + (hi - lo) * s / kSteps;
      const double z = lo + (hi - lo) * (s + 1) / kSteps;
      acc += 0.5 * (negative_density(a, 3) + negative_density(z, 3)) * (z - a);
    }
    bin_mass[b] = acc;
    total_mass += acc;
  }

  double worst_rel = 0.0;
  for (int b = 0; b < kBins; ++b) {
    const double expected = kPairs * bin_mass[b] / total_mass;
    const double rel = std::abs(counts[b] - expected) / expected;
    worst_rel = std::max(worst_rel, rel);
  }
  const std::string detail = "50 distributions exact, worst histogram bin off by " +
                             fmt("%.2f", 100.0 * worst_rel) + "%";
  if (worst_rel > 0.05) return {false, detail};
  return {true, detail};
}

// With timing off, two full benchmark runs produce byte-identical reports
// even on the multi-threaded pool.
Outcome criterion_8(const Dataset& iris) {
  BenchmarkConfig cfg = benchmark_defaults();
  cfg.measure_time = false;

  auto render = [&] {
    const BenchmarkReport report = run_benchmark(
        {{"iris", iris}}, all_strategies(),
        {TrainMode::NonHierarchical, TrainMode::Hierarchical}, cfg);
    std::ostringstream report_csv, trace_csv;
    write_report_csv(report, report_csv);
    write_trace_csv(report, trace_csv);
    return std::make_pair(report_csv.str(), trace_csv.str());
  };

  const auto first = render();
  const auto second = render();
  if (first.first != second.first)
    return {false, "report.csv differs between runs"};
  if (first.second != second.second)
    return {false, "trace.csv differs between runs"};
  const auto rows = std::count(first.first.begin(), first.first.end(), '\n') - 1;
  return {true, std::to_string(rows) + " rows byte-identical across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string iris_path = argc > 1 ? argv[1] : "data/iris.csv";
  Dataset iris;
  try {
    iris = load_csv(iris_path);
  } catch (const std::exception& e) {
    std::printf("cannot load iris data: %s\n", e.what());
    return 2;
  }

  const std::vector<std::function<Outcome()>> criteria = {
      [&] { return criterion_1(iris); }, [&] { return criterion_2(iris); },
      [&] { return criterion_3(iris); }, [] { return criterion_4(); },
      [] { return criterion_5(); },      [] { return criterion_6(); },
      [] { return criterion_7(); },      [&] { return criterion_8(iris); },
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i]();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (outcome.ok) {
      std::printf("[AC-%zu] PASS (%s)\n", i + 1, outcome.detail.c_str());
    } else {
      std::printf("[AC-%zu] FAIL: %s\n", i + 1, outcome.detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
