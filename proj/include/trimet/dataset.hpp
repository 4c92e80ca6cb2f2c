#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <vector>

namespace trimet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A labeled point set. One row of `points` per sample, `labels[i]` is the
/// class of row i. Class identifiers are small non-negative integers; they
/// need not be contiguous.
struct Dataset {
  Matrix points;            // n x d
  std::vector<int> labels;  // size n

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  /// Throws std::invalid_argument if the shape invariants do not hold.
  void validate() const;

  /// Number of points per class, keyed by class identifier.
  std::map<int, int> class_counts() const;

  /// Rows selected by `indices`, in the given order.
  Dataset subset(const std::vector<int>& indices) const;
};

inline void Dataset::validate() const {
  if (points.rows() < 1 || points.cols() < 1)
    throw std::invalid_argument("dataset must have at least one point and one feature");
  if (static_cast<Eigen::Index>(labels.size()) != points.rows())
    throw std::invalid_argument("label count does not match point count");
  for (int y : labels)
    if (y < 0) throw std::invalid_argument("class labels must be non-negative");
}

inline std::map<int, int> Dataset::class_counts() const {
  std::map<int, int> counts;
  for (int y : labels) ++counts[y];
  return counts;
}

inline Dataset Dataset::subset(const std::vector<int>& indices) const {
  Dataset out;
  out.points.resize(static_cast<Eigen::Index>(indices.size()), points.cols());
  out.labels.reserve(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int i = indices[r];
    if (i < 0 || i >= points.rows())
      throw std::invalid_argument("subset index out of range");
    out.points.row(static_cast<Eigen::Index>(r)) = points.row(i);
    out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace trimet
