#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "trimet/dataset.hpp"
#include "trimet/eval.hpp"
#include "trimet/hierarchical.hpp"
#include "trimet/io.hpp"
#include "trimet/metric.hpp"
#include "trimet/mining.hpp"
#include "trimet/solver.hpp"
#include "trimet/synthetic.hpp"

namespace py = pybind11;

namespace {

using trimet::Dataset;
using trimet::Matrix;
using trimet::MetricMatrix;

MetricMatrix metric_or_identity(const std::optional<Matrix>& m, Eigen::Index dim) {
  return m ? MetricMatrix{*m} : MetricMatrix::identity(dim);
}

trimet::TripletSet to_triplet_set(const std::vector<std::tuple<int, int, int>>& triplets) {
  trimet::TripletSet t;
  t.triplets.reserve(triplets.size());
  for (const auto& [a, p, n] : triplets) t.triplets.push_back({a, p, n});
  return t;
}

}  // namespace

PYBIND11_MODULE(_trimet, m) {
  m.doc() = "Mahalanobis metric learning with triplet mining";

  py::class_<Dataset>(m, "Dataset")
      .def(py::init([](Matrix points, std::vector<int> labels) {
             Dataset d;
             d.points = std::move(points);
             d.labels = std::move(labels);
             d.validate();
             return d;
           }),
           py::arg("points"), py::arg("labels"))
      .def_readonly("points", &Dataset::points)
      .def_readonly("labels", &Dataset::labels)
      .def_property_readonly("dim", &Dataset::dim)
      .def("__len__", [](const Dataset& d) { return d.size(); });

  m.def(
      "load_csv",
      [](const std::string& path, bool has_header, const std::string& label_col) {
        trimet::CsvOptions opts;
        opts.has_header = has_header;
        opts.label_column = label_col;
        return trimet::load_csv(path, opts);
      },
      py::arg("path"), py::arg("has_header") = true, py::arg("label_col") = "label");

  m.def(
      "generate_synthetic",
      [](const std::string& generator, int classes, int per_class, int dim,
         double separation, double noise_std, std::uint64_t seed) {
        trimet::SyntheticSpec spec;
        spec.generator = generator;
        spec.classes = classes;
        spec.per_class = per_class;
        spec.dim = dim;
        spec.separation = separation;
        spec.noise_std = noise_std;
        return trimet::generate_synthetic(spec, seed);
      },
      py::arg("generator"), py::arg("classes") = 2, py::arg("per_class") = 50,
      py::arg("dim") = 2, py::arg("separation") = 5.0, py::arg("noise_std") = 1.0,
      py::arg("seed") = 0);

  m.def(
      "mahalanobis_distance_sq",
      [](const trimet::Vector& x, const trimet::Vector& y, const Matrix& metric) {
        return trimet::mahalanobis_distance_sq(x, y, MetricMatrix{metric});
      },
      py::arg("x"), py::arg("y"), py::arg("metric"));

  m.def(
      "psd_project", [](const Matrix& m_in) { return trimet::psd_project(m_in).m; },
      py::arg("m"));

  m.def(
      "factorize_metric",
      [](const Matrix& m_in) {
        const MetricMatrix mm{m_in};
        return trimet::factorize_metric(mm, trimet::default_strengthen_eps(mm)).l;
      },
      py::arg("m"));

  m.def(
      "mine",
      [](const Dataset& x, const std::string& strategy, int k,
         const std::optional<Matrix>& metric, double lam, std::int64_t seed) {
        trimet::NegSamplingConfig ns;
        ns.lambda = lam;
        ns.seed = seed;
        const trimet::TripletSet t =
            trimet::mine(trimet::strategy_from_string(strategy), x, k,
                         metric_or_identity(metric, x.dim()), ns);
        std::vector<std::tuple<int, int, int>> out;
        out.reserve(t.triplets.size());
        for (const trimet::Triplet& tr : t.triplets)
          out.emplace_back(tr.anchor, tr.positive, tr.negative);
        return out;
      },
      py::arg("data"), py::arg("strategy"), py::arg("k"),
      py::arg("metric") = std::nullopt, py::arg("lam") = 1.4, py::arg("seed") = 0);

  m.def(
      "solve",
      [](const Dataset& x, const std::vector<std::tuple<int, int, int>>& triplets,
         double c, int max_iter, double tol) {
        trimet::SolverConfig cfg;
        cfg.c = c;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        const auto [metric, history] = trimet::solve(
            x, to_triplet_set(triplets), cfg, MetricMatrix::identity(x.dim()));
        std::vector<double> totals;
        totals.reserve(history.size());
        for (const trimet::ObjectiveBreakdown& h : history) totals.push_back(h.total);
        return py::make_tuple(metric.m, totals);
      },
      py::arg("data"), py::arg("triplets"), py::arg("c") = 1.0,
      py::arg("max_iter") = 2000, py::arg("tol") = 1e-6);

  m.def(
      "hierarchical_train",
      [](const Dataset& x, const std::string& strategy, int k, std::int64_t seed,
         int t_outer, double c) {
        trimet::HierarchicalConfig hcfg;
        hcfg.seed = seed;
        hcfg.t_outer = t_outer;
        trimet::SolverConfig scfg;
        scfg.c = c;
        scfg.max_iter = 500;
        const trimet::HierarchicalResult res = trimet::hierarchical_train(
            x, k, trimet::strategy_from_string(strategy), hcfg, scfg, {});
        return py::make_tuple(res.composite.l, res.final_data);
      },
      py::arg("data"), py::arg("strategy"), py::arg("k"), py::arg("seed") = 0,
      py::arg("t_outer") = 5, py::arg("c") = 1.0);

  m.def(
      "knn_classify",
      [](const Dataset& train, const Matrix& test_points, int k,
         const std::optional<Matrix>& metric) {
        return trimet::knn_classify(train, test_points, k,
                                    metric_or_identity(metric, train.dim()));
      },
      py::arg("train"), py::arg("test_points"), py::arg("k"),
      py::arg("metric") = std::nullopt);

  m.def(
      "stratified_split",
      [](const Dataset& x, std::uint64_t seed) {
        const trimet::SplitIndices s = trimet::stratified_split(x, seed);
        return py::make_tuple(s.train, s.val, s.test);
      },
      py::arg("data"), py::arg("seed"));
}
