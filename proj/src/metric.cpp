#include "trimet/metric.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace trimet {

namespace {

// Eigenvectors come out of the solver with arbitrary sign; fix each column
// so its largest-magnitude entry is positive (first such entry on ties).
void fix_column_signs(Matrix& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      const double a = std::abs(v(r, c));
      if (a > amax) {
        amax = a;
        imax = r;
      }
    }
    if (v(imax, c) < 0.0) v.col(c) = -v.col(c);
  }
}

// Eigen returns ascending eigenvalues; we want descending throughout.
void eigs_descending(const Matrix& sym, Vector& evals, Matrix& evecs) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  const Eigen::Index d = sym.rows();
  evals.resize(d);
  evecs.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    evals(i) = solver.eigenvalues()(d - 1 - i);
    evecs.col(i) = solver.eigenvectors().col(d - 1 - i);
  }
  fix_column_signs(evecs);
}

}  // namespace

bool MetricMatrix::is_valid(double sym_tol, double psd_tol) const {
  if (m.rows() != m.cols() || m.rows() < 1) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -psd_tol;
}

double mahalanobis_distance_sq(const Eigen::Ref<const Vector>& xi,
                               const Eigen::Ref<const Vector>& xj,
                               const MetricMatrix& m) {
  if (xi.size() != xj.size())
    throw std::invalid_argument("points have different dimensions");
  if (xi.size() != m.dim())
    throw std::invalid_argument("point dimension does not match metric");
  const Vector diff = xi - xj;
  const double d = diff.dot(m.m * diff);
  return d < 0.0 ? 0.0 : d;
}

MetricMatrix psd_project(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw std::invalid_argument("psd_project requires a square matrix");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("psd_project requires a symmetric matrix");
  Vector evals;
  Matrix evecs;
  eigs_descending(Matrix(0.5 * (m + m.transpose())), evals, evecs);
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    if (evals(i) < 0.0) evals(i) = 0.0;
  Matrix out = evecs * evals.asDiagonal() * evecs.transpose();
  out = 0.5 * (out + out.transpose());
  return MetricMatrix{std::move(out)};
}

ProjectionMatrix factorize_metric(const MetricMatrix& m, double strengthen_eps) {
  if (m.m.rows() != m.m.cols() || m.m.rows() < 1)
    throw std::invalid_argument("metric must be square");
  if (strengthen_eps < 0.0)
    throw std::invalid_argument("strengthen_eps must be non-negative");
  const Eigen::Index d = m.dim();
  Matrix strengthened = 0.5 * (m.m + m.m.transpose());
  strengthened.diagonal().array() += strengthen_eps;
  Vector evals;
  Matrix evecs;
  eigs_descending(strengthened, evals, evecs);
  Vector scale(d);
  for (Eigen::Index i = 0; i < d; ++i)
    scale(i) = evals(i) > 0.0 ? std::sqrt(evals(i)) : 0.0;
  return ProjectionMatrix{evecs * scale.asDiagonal()};
}

double default_strengthen_eps(const MetricMatrix& m) {
  const Eigen::Index d = m.dim();
  return d > 0 ? 1e-6 * m.m.trace() / static_cast<double>(d) : 0.0;
}

Dataset project_dataset(const Dataset& x, const ProjectionMatrix& l) {
  if (x.points.cols() != l.in_dim())
    throw std::invalid_argument("dataset dimension does not match projection");
  Dataset out;
  out.points = x.points * l.l;  // row-per-point form of L^T x
  out.labels = x.labels;
  return out;
}

std::pair<Dataset, Matrix> pca_fit_project(const Dataset& x, int dims) {
  const Eigen::Index n = x.size();
  const Eigen::Index d = x.dim();
  if (dims < 1 || dims > d)
    throw std::invalid_argument("pca dims must be in [1, d]");
  const Eigen::RowVectorXd mean = x.points.colwise().mean();
  const Matrix centered = x.points.rowwise() - mean;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const Matrix cov = centered.transpose() * centered / denom;
  Vector evals;
  Matrix evecs;
  eigs_descending(cov, evals, evecs);
  const Matrix basis = evecs.leftCols(dims);
  Dataset out;
  out.points = centered * basis;
  out.labels = x.labels;
  return {std::move(out), basis};
}

}  // namespace trimet
