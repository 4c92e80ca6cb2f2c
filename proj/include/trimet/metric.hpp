#pragma once

#include <utility>

#include "trimet/dataset.hpp"

namespace trimet {

/// Symmetric positive semi-definite matrix defining a Mahalanobis distance.
/// Symmetry and PSD-ness are contract obligations of the producers
/// (psd_project, solve); is_valid() checks them explicitly.
struct MetricMatrix {
  Matrix m;

  static MetricMatrix identity(Eigen::Index d) {
    return MetricMatrix{Matrix::Identity(d, d)};
  }

  Eigen::Index dim() const { return m.rows(); }

  /// True if symmetric within sym_tol and the smallest eigenvalue is
  /// >= -psd_tol.
  bool is_valid(double sym_tol = 1e-10, double psd_tol = 1e-8) const;
};

/// Factor L of a metric, M = L * L^T. Columns are ordered by descending
/// eigenvalue of the source metric.
struct ProjectionMatrix {
  Matrix l;  // d x d'

  static ProjectionMatrix identity(Eigen::Index d) {
    return ProjectionMatrix{Matrix::Identity(d, d)};
  }

  Eigen::Index in_dim() const { return l.rows(); }
  Eigen::Index out_dim() const { return l.cols(); }
};

/// Squared Mahalanobis distance (xi - xj)^T M (xi - xj). Round-off below
/// zero is clamped to 0.
double mahalanobis_distance_sq(const Eigen::Ref<const Vector>& xi,
                               const Eigen::Ref<const Vector>& xj,
                               const MetricMatrix& m);

/// Nearest PSD matrix in Frobenius norm: eigenvalues clamped at zero.
/// Input must be square and symmetric within 1e-8.
MetricMatrix psd_project(const Matrix& m);

/// Eigendecomposition factor L = Psi * Sigma^(1/2), columns by descending
/// eigenvalue. `strengthen_eps` is added to the diagonal first so that
/// near-singular metrics do not collapse the projected data onto a
/// low-rank subspace. Negative eigenvalues within the PSD tolerance are
/// clamped to zero. Column signs are fixed so the largest-magnitude entry
/// of each eigenvector is positive.
ProjectionMatrix factorize_metric(const MetricMatrix& m, double strengthen_eps);

/// Default diagonal strengthening: 1e-6 * trace(M) / d.
double default_strengthen_eps(const MetricMatrix& m);

/// Applies L^T to every point; labels are unchanged.
Dataset project_dataset(const Dataset& x, const ProjectionMatrix& l);

/// Centers the data and projects it onto the top `dims` principal
/// directions. Returns the projected dataset and the orthonormal basis
/// (d x dims).
std::pair<Dataset, Matrix> pca_fit_project(const Dataset& x, int dims);

}  // namespace trimet
