// trimet command line: mine | train | train-hier | eval | benchmark |
// ghost | synth. Each subcommand takes an optional --config JSON file
// whose keys mirror the long option names ('-' becomes '_'); values from
// the file fill in only the options not given on the command line, and
// unknown keys are an error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "trimet/dataset.hpp"
#include "trimet/eval.hpp"
#include "trimet/hierarchical.hpp"
#include "trimet/io.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"
#include "trimet/solver.hpp"
#include "trimet/synthetic.hpp"

namespace {

using trimet::Dataset;
using trimet::Matrix;
using trimet::MetricMatrix;
using trimet::ProjectionMatrix;

class ConfigBinder {
 public:
  explicit ConfigBinder(CLI::App* app) : app_(app) {
    app->add_option("--config", config_path_,
                    "JSON config file; explicit flags override its values");
  }
  // CLI11 holds pointers into this object; it must stay put.
  ConfigBinder(const ConfigBinder&) = delete;
  ConfigBinder& operator=(const ConfigBinder&) = delete;

  template <typename T>
  CLI::Option* option(const std::string& flag_spec, T& var, const std::string& desc) {
    CLI::Option* opt = app_->add_option(flag_spec, var, desc);
    register_setter(flag_spec, var, opt);
    return opt;
  }

  template <typename T>
  CLI::Option* flag(const std::string& flag_spec, T& var, const std::string& desc) {
    CLI::Option* opt = app_->add_flag(flag_spec, var, desc);
    register_setter(flag_spec, var, opt);
    return opt;
  }

  void apply() const {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw std::runtime_error("cannot open config '" + config_path_ + "'");
    nlohmann::json cfg;
    try {
      in >> cfg;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("config '" + config_path_ + "': " + e.what());
    }
    if (!cfg.is_object())
      throw std::runtime_error("config '" + config_path_ + "' must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      const auto it = setters_.find(key);
      if (it == setters_.end()) {
        std::string known;
        for (const auto& [k, fn] : setters_)
          known += (known.empty() ? "" : ", ") + k;
        throw std::runtime_error("unknown config key '" + key + "' (known: " +
                                 known + ")");
      }
      try {
        it->second(value);
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config key '" + key + "': " + e.what());
      }
    }
  }

 private:
  template <typename T>
  void register_setter(const std::string& flag_spec, T& var, CLI::Option* opt) {
    setters_[json_key(flag_spec)] = [&var, opt](const nlohmann::json& v) {
      if (opt->count() == 0) var = v.get<T>();
    };
  }

  static std::string json_key(const std::string& flag_spec) {
    std::string first = flag_spec.substr(0, flag_spec.find(','));
    while (!first.empty() && (first.front() == '-' || first.front() == '!'))
      first.erase(first.begin());
    std::replace(first.begin(), first.end(), '-', '_');
    return first;
  }

  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, std::function<void(const nlohmann::json&)>> setters_;
};

template <typename Opts>
struct SubState {
  Opts o;
  ConfigBinder b;
  explicit SubState(CLI::App* sub) : b(sub) {}
};

struct DataOpts {
  std::string path;
  bool has_header = true;
  std::string label_col = "label";
};

void bind_data(ConfigBinder& b, DataOpts& o, bool required) {
  CLI::Option* opt = b.option("--data", o.path, "input dataset CSV");
  if (required) opt->required();
  b.flag("--has-header,!--no-header", o.has_header,
         "whether the CSV starts with a header row");
  b.option("--label-col", o.label_col, "label column name or 0-based index");
}

Dataset load_data(const DataOpts& o) {
  trimet::CsvOptions opts;
  opts.has_header = o.has_header;
  opts.label_column = o.label_col;
  return trimet::load_csv(o.path, opts);
}

MetricMatrix load_metric_or_identity(const std::string& path, Eigen::Index dim) {
  if (path.empty()) return MetricMatrix::identity(dim);
  MetricMatrix m{trimet::load_matrix_csv(path)};
  if (m.m.rows() != dim || m.m.cols() != dim)
    throw std::runtime_error("metric in '" + path + "' is " +
                             std::to_string(m.m.rows()) + "x" +
                             std::to_string(m.m.cols()) + ", dataset dimension is " +
                             std::to_string(dim));
  return m;
}

void bind_solver(ConfigBinder& b, trimet::SolverConfig& s) {
  b.option("--c", s.c, "hinge weight in the objective");
  b.option("--max-iter", s.max_iter, "subgradient iteration cap");
  b.option("--step0", s.step0, "initial step size (scaled by 1/n_triplets)");
  b.option("--step-decay", s.step_decay, "multiplicative step decay per iteration");
  b.option("--tol", s.tol, "relative improvement tolerance for early stopping");
  b.option("--project-every", s.project_every, "PSD projection period in iterations");
}

void bind_mining(ConfigBinder& b, int& k, trimet::NegSamplingConfig& ns) {
  b.option("--k", k, "neighbor count used for mining and classification");
  b.option("--lambda", ns.lambda, "probability clamp for negative sampling");
}

std::string dataset_name(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string render_to_string(const std::function<void(std::ostream&)>& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

// ---- synth ----------------------------------------------------------------

struct SynthOpts {
  trimet::SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::string out = "synthetic.csv";
};

void setup_synth(CLI::App& app) {
  auto* sub = app.add_subcommand("synth", "generate a synthetic dataset CSV");
  auto state = std::make_shared<SubState<SynthOpts>>(sub);
  auto& [o, b] = *state;
  b.option("--generator", o.spec.generator,
           "gaussians | anisotropic_gaussians | concentric");
  b.option("--classes", o.spec.classes, "number of classes");
  b.option("--per-class", o.spec.per_class, "points per class");
  b.option("--dim", o.spec.dim, "feature dimension");
  b.option("--separation", o.spec.separation, "class center spacing");
  b.option("--noise-std", o.spec.noise_std, "noise standard deviation");
  b.option("--seed", o.seed, "generator seed");
  b.option("--out", o.out, "output CSV path");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    const Dataset x = trimet::generate_synthetic(o.spec, o.seed);
    trimet::save_csv(o.out, x);
    std::cout << "wrote " << o.out << ": " << x.size() << " points, dim "
              << x.dim() << ", " << x.class_counts().size() << " classes\n";
  });
}

// ---- mine -----------------------------------------------------------------

struct MineOpts {
  DataOpts data;
  std::string strategy = "k-BH";
  int k = 3;
  trimet::NegSamplingConfig ns;
  std::string metric_path;
  std::string out = "triplets.txt";
};

void setup_mine(CLI::App& app) {
  auto* sub = app.add_subcommand("mine", "mine triplets from a dataset");
  auto state = std::make_shared<SubState<MineOpts>>(sub);
  auto& [o, b] = *state;
  bind_data(b, o.data, true);
  b.option("--strategy", o.strategy, "mining strategy tag");
  bind_mining(b, o.k, o.ns);
  b.option("--seed", o.ns.seed, "sampling seed (k-NS only)");
  b.option("--metric", o.metric_path, "metric CSV to mine under (default identity)");
  b.option("--out", o.out, "output triplet file");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    const Dataset x = load_data(o.data);
    const MetricMatrix m = load_metric_or_identity(o.metric_path, x.dim());
    const trimet::TripletSet t =
        trimet::mine(trimet::strategy_from_string(o.strategy), x, o.k, m, o.ns);
    trimet::atomic_write(
        o.out, render_to_string([&](std::ostream& os) { trimet::write_triplets(os, t); }));
    std::cout << "wrote " << o.out << ": " << t.triplets.size() << " triplets ("
              << trimet::to_string(t.strategy) << ", k=" << t.k << ")\n";
  });
}

// ---- train ----------------------------------------------------------------

struct TrainOpts {
  DataOpts data;
  std::string strategy = "k-BH";
  int k = 3;
  trimet::NegSamplingConfig ns;
  trimet::SolverConfig solver;
  std::string out_dir = "out";
};

void setup_train(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "train", "mine triplets and fit a metric on the whole dataset");
  auto state = std::make_shared<SubState<TrainOpts>>(sub);
  auto& [o, b] = *state;
  bind_data(b, o.data, true);
  b.option("--strategy", o.strategy, "mining strategy tag");
  bind_mining(b, o.k, o.ns);
  b.option("--seed", o.ns.seed, "sampling seed (k-NS only)");
  bind_solver(b, o.solver);
  b.option("--out-dir", o.out_dir, "directory for metric.csv, l.csv, triplets.txt");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    std::filesystem::create_directories(o.out_dir);
    const Dataset x = load_data(o.data);
    const MetricMatrix id = MetricMatrix::identity(x.dim());
    const trimet::TripletSet t =
        trimet::mine(trimet::strategy_from_string(o.strategy), x, o.k, id, o.ns);
    if (t.triplets.empty())
      throw std::runtime_error("mining produced no triplets; nothing to train on");
    const auto [m, history] = trimet::solve(x, t, o.solver, id);
    const ProjectionMatrix l =
        trimet::factorize_metric(m, trimet::default_strengthen_eps(m));

    const std::filesystem::path dir(o.out_dir);
    trimet::save_matrix_csv((dir / "metric.csv").string(), m.m);
    trimet::save_matrix_csv((dir / "l.csv").string(), l.l);
    trimet::atomic_write(
        (dir / "triplets.txt").string(),
        render_to_string([&](std::ostream& os) { trimet::write_triplets(os, t); }));
    std::cout << "triplets: " << t.triplets.size() << "\n"
              << "objective: " << history.front().total << " -> "
              << history.back().total << " over " << history.size() - 1
              << " iterations (" << history.back().active_count
              << " active hinges)\n"
              << "wrote " << (dir / "metric.csv").string() << ", "
              << (dir / "l.csv").string() << "\n";
  });
}

// ---- train-hier -----------------------------------------------------------

struct TrainHierOpts {
  DataOpts data;
  std::string strategy = "k-BH";
  int k = 3;
  trimet::NegSamplingConfig ns;
  trimet::SolverConfig solver;
  trimet::HierarchicalConfig hier;
  std::string out_dir = "out";
};

void setup_train_hier(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "train-hier", "hierarchical training over sampled hyperspheres");
  auto state = std::make_shared<SubState<TrainHierOpts>>(sub);
  auto& [o, b] = *state;
  bind_data(b, o.data, true);
  b.option("--strategy", o.strategy, "mining strategy tag");
  bind_mining(b, o.k, o.ns);
  bind_solver(b, o.solver);
  b.option("--t-outer", o.hier.t_outer, "outer rounds");
  b.option("--seed", o.hier.seed, "sphere sampling seed");
  b.option("--out-dir", o.out_dir, "directory for l.csv, projected.csv, trace.csv");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    std::filesystem::create_directories(o.out_dir);
    const Dataset x = load_data(o.data);
    o.solver.max_iter = std::min(o.solver.max_iter, 500);
    const trimet::HierarchicalResult res = trimet::hierarchical_train(
        x, o.k, trimet::strategy_from_string(o.strategy), o.hier, o.solver, o.ns);

    const std::filesystem::path dir(o.out_dir);
    trimet::save_matrix_csv((dir / "l.csv").string(), res.composite.l);
    trimet::save_csv((dir / "projected.csv").string(), res.final_data);
    std::string trace = "tau,sphere,radius,n_members,n_sampled,n_triplets,"
                        "final_objective,wall_time_ms\n";
    int trained = 0;
    for (const trimet::SphereTraceRow& r : res.trace) {
      char line[160];
      std::snprintf(line, sizeof line, "%d,%d,%.6g,%d,%d,%d,%.6g,%.3f\n", r.tau,
                    r.sphere_index, r.radius, r.n_members, r.n_sampled,
                    r.n_triplets, r.final_objective, r.wall_time_ms);
      trace += line;
      if (r.n_triplets > 0) ++trained;
    }
    trimet::atomic_write((dir / "trace.csv").string(), trace);
    std::cout << "spheres: " << res.trace.size() << " (" << trained
              << " trained)\n"
              << "wrote " << (dir / "l.csv").string() << ", "
              << (dir / "projected.csv").string() << ", "
              << (dir / "trace.csv").string() << "\n";
  });
}

// ---- eval -----------------------------------------------------------------

struct EvalOpts {
  DataOpts data;
  std::string metric_path;
  int k = 1;
  std::uint64_t seed = 1;
};

void setup_eval(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "eval", "kNN test accuracy under a metric on a stratified split");
  auto state = std::make_shared<SubState<EvalOpts>>(sub);
  auto& [o, b] = *state;
  bind_data(b, o.data, true);
  b.option("--metric", o.metric_path, "metric CSV (default identity = Euclidean)");
  b.option("--k", o.k, "neighbor count");
  b.option("--seed", o.seed, "split seed");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    const Dataset x = load_data(o.data);
    const MetricMatrix m = load_metric_or_identity(o.metric_path, x.dim());
    const trimet::SplitIndices split = trimet::stratified_split(x, o.seed);
    const Dataset train = x.subset(split.train);
    const Dataset test = x.subset(split.test);
    const std::vector<int> pred =
        trimet::knn_classify(train, test.points, o.k, m);
    int hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
      if (pred[i] == test.labels[i]) ++hits;
    std::cout << "test_accuracy_pct="
              << 100.0 * hits / static_cast<double>(pred.size()) << " ("
              << hits << "/" << pred.size() << ")\n";
  });
}

// ---- benchmark ------------------------------------------------------------

struct BenchmarkOpts {
  std::vector<std::string> data_paths{"data/iris.csv"};
  bool has_header = true;
  std::string label_col = "label";
  bool add_synthetic = false;
  std::vector<std::string> strategies;
  std::vector<std::string> modes{"nonhier", "hier"};
  trimet::BenchmarkConfig cfg;
  std::string timing = "on";
  int threads = 0;
  std::string out_dir = "out";
};

std::vector<std::pair<std::string, Dataset>> benchmark_datasets(
    const BenchmarkOpts& o) {
  std::vector<std::pair<std::string, Dataset>> datasets;
  trimet::CsvOptions opts;
  opts.has_header = o.has_header;
  opts.label_column = o.label_col;
  for (const std::string& path : o.data_paths)
    datasets.emplace_back(dataset_name(path), trimet::load_csv(path, opts));
  if (o.add_synthetic) {
    // Desk-scale stand-ins for the image benchmarks: a well separated
    // blob problem and one whose signal hides on a single axis.
    trimet::SyntheticSpec blobs;
    blobs.generator = "gaussians";
    blobs.classes = 3;
    blobs.per_class = 40;
    blobs.dim = 5;
    blobs.separation = 4.0;
    datasets.emplace_back("synthetic-gaussians", trimet::generate_synthetic(blobs, 7));
    trimet::SyntheticSpec aniso;
    aniso.generator = "anisotropic_gaussians";
    aniso.classes = 3;
    aniso.per_class = 40;
    aniso.dim = 6;
    aniso.separation = 4.0;
    aniso.noise_std = 5.0;
    datasets.emplace_back("synthetic-anisotropic",
                          trimet::generate_synthetic(aniso, 7));
  }
  return datasets;
}

void setup_benchmark(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "benchmark", "accuracy/time grid over datasets, strategies and modes");
  auto state = std::make_shared<SubState<BenchmarkOpts>>(sub);
  auto& [o, b] = *state;
  b.option("--data", o.data_paths, "dataset CSV paths (default bundled iris)");
  b.flag("--has-header,!--no-header", o.has_header,
         "whether the CSVs start with a header row");
  b.option("--label-col", o.label_col, "label column name or 0-based index");
  b.flag("--synthetic", o.add_synthetic,
         "add labeled synthetic surrogate datasets");
  b.option("--strategies", o.strategies, "strategy tags (default all seven)");
  b.option("--modes", o.modes, "training modes: nonhier, hier");
  b.option("--k-values", o.cfg.k_values, "k grid for validation selection");
  b.option("--c-values", o.cfg.c_values, "c grid for validation selection");
  b.option("--seeds", o.cfg.seeds, "split seeds, one run per seed");
  b.option("--lambda", o.cfg.neg_sampling.lambda,
           "probability clamp for negative sampling");
  b.option("--timing", o.timing,
           "on | off; off writes 0 for all time fields (reproducible bytes)");
  b.option("--threads", o.threads, "worker cap (default TRIMET_THREADS or cores)");
  b.option("--out-dir", o.out_dir, "directory for report.csv, report.txt, trace.csv");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    if (o.timing != "on" && o.timing != "off")
      throw std::runtime_error("--timing must be 'on' or 'off'");
    std::filesystem::create_directories(o.out_dir);

    std::vector<trimet::MiningStrategy> strategies;
    if (o.strategies.empty()) {
      strategies = trimet::all_strategies();
    } else {
      for (const std::string& tag : o.strategies)
        strategies.push_back(trimet::strategy_from_string(tag));
    }
    std::vector<trimet::TrainMode> modes;
    for (const std::string& tag : o.modes)
      modes.push_back(trimet::mode_from_string(tag));

    trimet::BenchmarkConfig cfg = o.cfg;
    cfg.measure_time = o.timing == "on";
    cfg.max_threads = o.threads;
    cfg.solver.max_iter = std::min(cfg.solver.max_iter, 500);

    const auto datasets = benchmark_datasets(o);
    const trimet::BenchmarkReport report =
        trimet::run_benchmark(datasets, strategies, modes, cfg);

    const std::filesystem::path dir(o.out_dir);
    trimet::atomic_write((dir / "report.csv").string(),
                         render_to_string([&](std::ostream& os) {
                           trimet::write_report_csv(report, os);
                         }));
    trimet::atomic_write((dir / "report.txt").string(),
                         render_to_string([&](std::ostream& os) {
                           trimet::write_report_text(report, os);
                         }));
    trimet::atomic_write((dir / "trace.csv").string(),
                         render_to_string([&](std::ostream& os) {
                           trimet::write_trace_csv(report, os);
                         }));
    std::cout << report.rows.size() << " benchmark rows\n"
              << "wrote " << (dir / "report.csv").string() << ", "
              << (dir / "report.txt").string() << ", "
              << (dir / "trace.csv").string() << "\n";
  });
}

// ---- ghost ----------------------------------------------------------------

struct GhostOpts {
  std::string l_path;
  int height = 0;
  int width = 0;
  int top_m = 10;
  std::string out_dir = "out";
};

void setup_ghost(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "ghost", "export projection columns as grayscale PGM images");
  auto state = std::make_shared<SubState<GhostOpts>>(sub);
  auto& [o, b] = *state;
  b.option("--l", o.l_path, "projection matrix CSV")->required();
  b.option("--height", o.height, "image height in pixels")->required();
  b.option("--width", o.width, "image width in pixels")->required();
  b.option("--top-m", o.top_m, "number of leading columns to export");
  b.option("--out-dir", o.out_dir, "directory for ghost_###.pgm files");
  sub->callback([state] {
    auto& [o, b] = *state;
    b.apply();
    const ProjectionMatrix l{trimet::load_matrix_csv(o.l_path)};
    const std::vector<std::string> files =
        trimet::export_ghost_images(l, o.height, o.width, o.top_m, o.out_dir);
    std::cout << "wrote " << files.size() << " images: " << files.front()
              << " .. " << files.back() << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mahalanobis metric learning with triplet mining"};
  app.require_subcommand(1);
  setup_synth(app);
  setup_mine(app);
  setup_train(app);
  setup_train_hier(app);
  setup_eval(app);
  setup_benchmark(app);
  setup_ghost(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
