#pragma once

/// kNN classification under a learned metric plus the benchmark grid that
/// sweeps dataset x mode x strategy x seed combinations over stratified
/// splits, selecting k and c on a validation set.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/hierarchical.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"
#include "trimet/solver.hpp"

namespace trimet {

enum class TrainMode { NonHierarchical, Hierarchical };

std::string to_string(TrainMode mode);
TrainMode mode_from_string(const std::string& text);

/// Majority vote among the k nearest training points under `m`. Distance
/// ties prefer the smaller training index; vote ties go to the class of
/// the nearest neighbor among the tied classes.
std::vector<int> knn_classify(const Dataset& train, const Matrix& test_points,
                              int k, const MetricMatrix& m);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Stratified 70/15/15 split. Per class, max(1, floor(0.15 * count))
/// points go to each of validation and test and the rest to train; a
/// class whose train share would drop below 2 is an error.
SplitIndices stratified_split(const Dataset& x, std::uint64_t seed);

struct BenchmarkRow {
  std::string dataset;
  TrainMode mode = TrainMode::NonHierarchical;
  MiningStrategy strategy = MiningStrategy::KBA;
  int k = 0;          // selected on validation
  double c = 0.0;     // selected on validation
  std::uint64_t seed = 0;
  double accuracy_pct = 0.0;  // test accuracy of the selected cell
  double train_time_s = 0.0;  // mining + solve + project of the selected cell
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  // Per row, the sphere trace of the selected training (empty for the
  // non-hierarchical mode). Kept aligned with `rows`.
  std::vector<std::vector<SphereTraceRow>> traces;
};

struct BenchmarkConfig {
  std::vector<int> k_values{1, 3, 5};
  std::vector<double> c_values{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  HierarchicalConfig hier;
  SolverConfig solver;
  NegSamplingConfig neg_sampling;
  // When false every reported time is written as 0 so that two runs with
  // the same seed produce byte-identical files.
  bool measure_time = true;
  int max_threads = 0;  // 0: TRIMET_THREADS, then hardware concurrency
};

/// Runs every dataset x mode x strategy x seed combination: split, sweep
/// the (k, c) grid on validation accuracy (ties prefer smaller k, then
/// smaller c), report the selected cell's test accuracy and training
/// time. Combinations run on a worker pool; row order is deterministic.
BenchmarkReport run_benchmark(
    const std::vector<std::pair<std::string, Dataset>>& datasets,
    const std::vector<MiningStrategy>& strategies,
    const std::vector<TrainMode>& modes, const BenchmarkConfig& cfg);

/// Columns: dataset,mode,strategy,k,c,seed,accuracy_pct,train_time_s.
void write_report_csv(const BenchmarkReport& report, std::ostream& out);

/// Aligned per-dataset tables with mean +/- std accuracy and mean time
/// per strategy and mode, aggregated over seeds.
void write_report_text(const BenchmarkReport& report, std::ostream& out);

/// Columns: dataset,mode,strategy,seed,tau,sphere,radius,n_members,
/// n_sampled,n_triplets,final_objective,wall_time_ms.
void write_trace_csv(const BenchmarkReport& report, std::ostream& out);

/// Worker cap: `requested` if positive, else TRIMET_THREADS if set (must
/// parse as a positive integer), else hardware concurrency.
int resolve_thread_cap(int requested);

}  // namespace trimet
