#include "trimet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

#include "trimet/rng.hpp"

namespace trimet {

namespace {

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double accuracy_percent(const std::vector<int>& pred, const std::vector<int>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("prediction/truth size mismatch");
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

int holdout_count(int class_count) {
  return std::max(1, static_cast<int>(std::floor(0.15 * class_count)));
}

}  // namespace

std::string to_string(TrainMode mode) {
  return mode == TrainMode::Hierarchical ? "hierarchical" : "non-hierarchical";
}

TrainMode mode_from_string(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (ch != '-' && ch != '_')
      t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "hier" || t == "hierarchical") return TrainMode::Hierarchical;
  if (t == "nonhier" || t == "nonhierarchical") return TrainMode::NonHierarchical;
  throw std::invalid_argument("unknown mode '" + text +
                              "' (expected hier or nonhier)");
}

std::vector<int> knn_classify(const Dataset& train, const Matrix& test_points,
                              int k, const MetricMatrix& m) {
  train.validate();
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (k > train.size())
    throw std::invalid_argument("k exceeds the number of training points");
  if (test_points.cols() != train.dim() || m.dim() != train.dim())
    throw std::invalid_argument("train/test/metric dimension mismatch");

  const Eigen::Index n = train.size();
  std::vector<std::pair<double, int>> order(static_cast<std::size_t>(n));
  std::vector<int> labels(static_cast<std::size_t>(test_points.rows()));
  for (Eigen::Index q = 0; q < test_points.rows(); ++q) {
    const Vector query = test_points.row(q).transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      order[static_cast<std::size_t>(i)] = {
          mahalanobis_distance_sq(query, train.points.row(i).transpose(), m),
          static_cast<int>(i)};
    // Pair order sorts by distance first, then index: the smaller train
    // index wins distance ties.
    std::sort(order.begin(), order.end());

    std::map<int, int> votes;
    for (int i = 0; i < k; ++i)
      ++votes[train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)]];
    int best_count = 0;
    for (const auto& [cls, cnt] : votes) best_count = std::max(best_count, cnt);
    std::set<int> tied;
    for (const auto& [cls, cnt] : votes)
      if (cnt == best_count) tied.insert(cls);

    int label = *tied.begin();
    if (tied.size() > 1) {
      for (int i = 0; i < k; ++i) {
        const int cls =
            train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)].second)];
        if (tied.count(cls)) {
          label = cls;
          break;
        }
      }
    }
    labels[static_cast<std::size_t>(q)] = label;
  }
  return labels;
}

SplitIndices stratified_split(const Dataset& x, std::uint64_t seed) {
  x.validate();
  std::map<int, std::vector<int>> by_class;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    by_class[x.labels[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));
  if (by_class.size() < 2)
    throw std::invalid_argument("splitting needs at least 2 classes");

  SplitIndices out;
  for (auto& [cls, idx] : by_class) {
    const int count = static_cast<int>(idx.size());
    const int hold = holdout_count(count);
    if (count - 2 * hold < 2)
      throw std::invalid_argument("class " + std::to_string(cls) + " has only " +
                                  std::to_string(count) +
                                  " points, too few for a 70/15/15 split");
    std::mt19937_64 rng(derive_seed(seed, "split", static_cast<std::uint64_t>(cls)));
    for (int i = count - 1; i > 0; --i) {
      const int j = static_cast<int>(bounded_uint(rng, static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    out.val.insert(out.val.end(), idx.begin(), idx.begin() + hold);
    out.test.insert(out.test.end(), idx.begin() + hold, idx.begin() + 2 * hold);
    out.train.insert(out.train.end(), idx.begin() + 2 * hold, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

namespace {

struct Combo {
  std::size_t dataset_index = 0;
  TrainMode mode = TrainMode::NonHierarchical;
  MiningStrategy strategy = MiningStrategy::KBA;
  std::uint64_t seed = 0;
};

struct ComboOutcome {
  BenchmarkRow row;
  std::vector<SphereTraceRow> trace;
};

ComboOutcome run_combo(const std::string& name, const Dataset& x,
                       const Combo& combo, const BenchmarkConfig& cfg) {
  const SplitIndices split = stratified_split(x, combo.seed);
  const Dataset train = x.subset(split.train);
  const Dataset val = x.subset(split.val);
  const Dataset test = x.subset(split.test);

  struct Cell {
    int k = 0;
    double c = 0.0;
    double val_acc = -1.0;
    double time_s = 0.0;
    MetricMatrix metric;          // non-hierarchical model
    ProjectionMatrix composite;   // hierarchical model
    Dataset projected_train;
    std::vector<SphereTraceRow> trace;
  };
  Cell best;

  for (int k : cfg.k_values) {
    if (k > train.size()) continue;
    for (double c : cfg.c_values) {
      SolverConfig scfg = cfg.solver;
      scfg.c = c;
      Cell cell;
      cell.k = k;
      cell.c = c;

      const auto t0 = std::chrono::steady_clock::now();
      std::vector<int> val_pred;
      if (combo.mode == TrainMode::NonHierarchical) {
        NegSamplingConfig ns = cfg.neg_sampling;
        ns.seed = static_cast<std::int64_t>(derive_seed(combo.seed, "bench.ns"));
        const MetricMatrix id = MetricMatrix::identity(train.dim());
        const TripletSet t = mine(combo.strategy, train, k, id, ns);
        if (t.triplets.empty()) {
          cell.metric = id;
        } else {
          cell.metric = solve(train, t, scfg, id).first;
        }
        cell.time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        val_pred = knn_classify(train, val.points, k, cell.metric);
      } else {
        HierarchicalConfig hcfg = cfg.hier;
        hcfg.seed = static_cast<std::int64_t>(derive_seed(combo.seed, "bench.hier"));
        NegSamplingConfig ns = cfg.neg_sampling;
        ns.seed = static_cast<std::int64_t>(derive_seed(combo.seed, "bench.ns"));
        HierarchicalResult res =
            hierarchical_train(train, k, combo.strategy, hcfg, scfg, ns);
        cell.time_s = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        cell.composite = std::move(res.composite);
        cell.projected_train = std::move(res.final_data);
        cell.trace = std::move(res.trace);
        const Matrix val_proj = val.points * cell.composite.l;
        val_pred = knn_classify(cell.projected_train, val_proj, k,
                                MetricMatrix::identity(cell.composite.out_dim()));
      }
      cell.val_acc = accuracy_percent(val_pred, val.labels);

      // Strictly-greater keeps the first best; the loop runs k then c
      // ascending, so ties already prefer smaller k, then smaller c.
      if (cell.val_acc > best.val_acc) best = std::move(cell);
    }
  }
  if (best.val_acc < 0.0)
    throw std::invalid_argument("dataset '" + name +
                                "' is smaller than every k in the grid");

  BenchmarkRow row;
  row.dataset = name;
  row.mode = combo.mode;
  row.strategy = combo.strategy;
  row.k = best.k;
  row.c = best.c;
  row.seed = combo.seed;
  row.train_time_s = cfg.measure_time ? best.time_s : 0.0;

  std::vector<int> test_pred;
  if (combo.mode == TrainMode::NonHierarchical) {
    test_pred = knn_classify(train, test.points, best.k, best.metric);
  } else {
    const Matrix test_proj = test.points * best.composite.l;
    test_pred = knn_classify(best.projected_train, test_proj, best.k,
                             MetricMatrix::identity(best.composite.out_dim()));
  }
  row.accuracy_pct = accuracy_percent(test_pred, test.labels);

  if (!cfg.measure_time)
    for (SphereTraceRow& tr : best.trace) tr.wall_time_ms = 0.0;
  return {row, std::move(best.trace)};
}

}  // namespace

BenchmarkReport run_benchmark(
    const std::vector<std::pair<std::string, Dataset>>& datasets,
    const std::vector<MiningStrategy>& strategies,
    const std::vector<TrainMode>& modes, const BenchmarkConfig& cfg) {
  if (datasets.empty() || strategies.empty() || modes.empty())
    throw std::invalid_argument("benchmark needs datasets, strategies and modes");
  if (cfg.k_values.empty() || cfg.c_values.empty() || cfg.seeds.empty())
    throw std::invalid_argument("benchmark needs k values, c values and seeds");

  for (const auto& [name, ds] : datasets) {
    ds.validate();
    const auto counts = ds.class_counts();
    if (counts.size() < 2)
      throw std::invalid_argument("dataset '" + name + "' has fewer than 2 classes");
    for (const auto& [cls, cnt] : counts) {
      if (cnt - 2 * holdout_count(cnt) < 2)
        throw std::invalid_argument(
            "dataset '" + name + "' is too small to stratify-split: class " +
            std::to_string(cls) + " has only " + std::to_string(cnt) + " points");
    }
  }

  std::vector<Combo> combos;
  for (std::size_t di = 0; di < datasets.size(); ++di)
    for (TrainMode mode : modes)
      for (MiningStrategy strategy : strategies)
        for (std::uint64_t seed : cfg.seeds)
          combos.push_back({di, mode, strategy, seed});

  BenchmarkReport report;
  report.rows.resize(combos.size());
  report.traces.resize(combos.size());

  const int workers = std::min<int>(resolve_thread_cap(cfg.max_threads),
                                    static_cast<int>(combos.size()));
  auto work_one = [&](std::size_t i) {
    const Combo& combo = combos[i];
    const auto& [name, ds] = datasets[combo.dataset_index];
    ComboOutcome out = run_combo(name, ds, combo, cfg);
    report.rows[i] = std::move(out.row);
    report.traces[i] = std::move(out.trace);
  };

  if (workers <= 1) {
    for (std::size_t i = 0; i < combos.size(); ++i) work_one(i);
    return report;
  }

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= combos.size()) return;
      try {
        work_one(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (!first_error.empty()) throw std::runtime_error(first_error);
  return report;
}

void write_report_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "dataset,mode,strategy,k,c,seed,accuracy_pct,train_time_s\n";
  for (const BenchmarkRow& r : report.rows)
    out << r.dataset << ',' << to_string(r.mode) << ',' << to_string(r.strategy)
        << ',' << r.k << ',' << fmt(r.c, "%.6g") << ',' << r.seed << ','
        << fmt(r.accuracy_pct, "%.4f") << ',' << fmt(r.train_time_s, "%.6f")
        << '\n';
}

void write_trace_csv(const BenchmarkReport& report, std::ostream& out) {
  out << "dataset,mode,strategy,seed,tau,sphere,radius,n_members,n_sampled,"
         "n_triplets,final_objective,wall_time_ms\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const BenchmarkRow& r = report.rows[i];
    for (const SphereTraceRow& tr : report.traces[i])
      out << r.dataset << ',' << to_string(r.mode) << ','
          << to_string(r.strategy) << ',' << r.seed << ',' << tr.tau << ','
          << tr.sphere_index << ',' << fmt(tr.radius, "%.6g") << ','
          << tr.n_members << ',' << tr.n_sampled << ',' << tr.n_triplets << ','
          << fmt(tr.final_objective, "%.6g") << ','
          << fmt(tr.wall_time_ms, "%.3f") << '\n';
  }
}

void write_report_text(const BenchmarkReport& report, std::ostream& out) {
  // Aggregate over seeds, remembering first-appearance order of keys.
  struct Agg {
    std::vector<double> acc;
    std::vector<double> time;
  };
  std::vector<std::string> dataset_order;
  std::vector<MiningStrategy> strategy_order;
  std::vector<TrainMode> mode_order;
  std::map<std::string, std::map<int, std::map<int, Agg>>> agg;  // ds -> strategy -> mode

  auto remember = [](auto& order, const auto& value) {
    if (std::find(order.begin(), order.end(), value) == order.end())
      order.push_back(value);
  };
  for (const BenchmarkRow& r : report.rows) {
    remember(dataset_order, r.dataset);
    remember(strategy_order, r.strategy);
    remember(mode_order, r.mode);
    Agg& a = agg[r.dataset][static_cast<int>(r.strategy)][static_cast<int>(r.mode)];
    a.acc.push_back(r.accuracy_pct);
    a.time.push_back(r.train_time_s);
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto std_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  const std::size_t seeds = report.rows.empty()
                                ? 0
                                : agg.begin()->second.begin()->second.begin()->second.acc.size();
  for (const std::string& ds : dataset_order) {
    out << "dataset: " << ds << " (" << seeds << " seed"
        << (seeds == 1 ? "" : "s") << ")\n";
    out << pad("strategy", 12);
    for (TrainMode mode : mode_order)
      out << pad(to_string(mode), 34);
    out << '\n';
    out << pad("", 12);
    for (std::size_t i = 0; i < mode_order.size(); ++i)
      out << pad("acc_pct", 22) << pad("time_s", 12);
    out << '\n';
    for (MiningStrategy strategy : strategy_order) {
      out << pad(to_string(strategy), 12);
      for (TrainMode mode : mode_order) {
        const Agg& a = agg[ds][static_cast<int>(strategy)][static_cast<int>(mode)];
        const std::string acc =
            fmt(mean_of(a.acc), "%.2f") + " +/- " + fmt(std_of(a.acc), "%.2f");
        out << pad(acc, 22) << pad(fmt(mean_of(a.time), "%.3f"), 12);
      }
      out << '\n';
    }
    out << '\n';
  }
}

int resolve_thread_cap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TRIMET_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw std::invalid_argument("TRIMET_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace trimet
