#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "trimet/dataset.hpp"
#include "trimet/metric.hpp"
#include "trimet/rng.hpp"

using namespace trimet;

namespace {

Matrix random_symmetric(int d, std::mt19937_64& rng, double scale = 1.0) {
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = scale * normal01(rng);
  return Matrix(0.5 * (a + a.transpose()));
}

MetricMatrix random_psd(int d, std::mt19937_64& rng, double scale = 1.0) {
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = scale * normal01(rng);
  return MetricMatrix{Matrix(a * a.transpose())};
}

Dataset random_dataset(int n, int d, std::mt19937_64& rng) {
  Dataset x;
  x.points.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x.points(i, j) = normal01(rng);
    x.labels.push_back(i % 2);
  }
  return x;
}

}  // namespace

TEST_CASE("squared distance of a point to itself is zero") {
  std::mt19937_64 rng(11);
  const MetricMatrix m = random_psd(3, rng);
  Vector v(3);
  v << 1.5, -2.0, 0.25;
  CHECK(mahalanobis_distance_sq(v, v, m) == 0.0);
}

TEST_CASE("identity metric reduces to squared Euclidean distance") {
  Vector a(2), b(2);
  a << 1, 2;
  b << 0, 0;
  CHECK(mahalanobis_distance_sq(a, b, MetricMatrix::identity(2)) == doctest::Approx(5.0));
}

TEST_CASE("diagonal metric weights coordinates") {
  Vector a(2), b(2);
  a << 1, 1;
  b << 0, 0;
  MetricMatrix m{Matrix::Zero(2, 2)};
  m.m(0, 0) = 2;
  m.m(1, 1) = 1;
  CHECK(mahalanobis_distance_sq(a, b, m) == doctest::Approx(3.0));
}

TEST_CASE("distance rejects dimension mismatch") {
  Vector a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(mahalanobis_distance_sq(a, b, MetricMatrix::identity(2)),
                  std::invalid_argument);
  Vector c(3);
  c.setZero();
  CHECK_THROWS_AS(mahalanobis_distance_sq(b, c, MetricMatrix::identity(2)),
                  std::invalid_argument);
}

TEST_CASE("distance is symmetric in its arguments") {
  std::mt19937_64 rng(12);
  const MetricMatrix m = random_psd(4, rng);
  for (int trial = 0; trial < 20; ++trial) {
    Vector a(4), b(4);
    for (int i = 0; i < 4; ++i) {
      a(i) = normal01(rng);
      b(i) = normal01(rng);
    }
    CHECK(mahalanobis_distance_sq(a, b, m) == mahalanobis_distance_sq(b, a, m));
  }
}

TEST_CASE("square-rooted distance satisfies the triangle inequality") {
  std::mt19937_64 rng(13);
  const MetricMatrix m = random_psd(3, rng);
  for (int trial = 0; trial < 50; ++trial) {
    Vector a(3), b(3), c(3);
    for (int i = 0; i < 3; ++i) {
      a(i) = normal01(rng);
      b(i) = normal01(rng);
      c(i) = normal01(rng);
    }
    const double ab = std::sqrt(mahalanobis_distance_sq(a, b, m));
    const double bc = std::sqrt(mahalanobis_distance_sq(b, c, m));
    const double ac = std::sqrt(mahalanobis_distance_sq(a, c, m));
    CHECK(ac <= ab + bc + 1e-8);
  }
}

TEST_CASE("psd projection keeps the identity") {
  const MetricMatrix p = psd_project(Matrix::Identity(3, 3));
  CHECK((p.m - Matrix::Identity(3, 3)).norm() == doctest::Approx(0.0));
}

TEST_CASE("psd projection clamps negative eigenvalues of a diagonal matrix") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1;
  m(1, 1) = -2;
  const MetricMatrix p = psd_project(m);
  CHECK(p.m(0, 0) == doctest::Approx(1.0));
  CHECK(p.m(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(p.m(0, 1)) < 1e-12);
}

TEST_CASE("psd projection is the Frobenius-nearest psd matrix") {
  std::mt19937_64 rng(14);
  const Matrix m = random_symmetric(5, rng, 2.0);
  const MetricMatrix p = psd_project(m);

  Eigen::SelfAdjointEigenSolver<Matrix> es(p.m);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);

  // No sampled PSD perturbation may sit closer to the input.
  const double base = (m - p.m).norm();
  for (int trial = 0; trial < 60; ++trial) {
    const Matrix q = psd_project(Matrix(p.m + random_symmetric(5, rng, 0.2))).m;
    CHECK((m - q).norm() >= base - 1e-9);
  }
}

TEST_CASE("psd projection is idempotent and fixes psd inputs") {
  std::mt19937_64 rng(15);
  const MetricMatrix p = random_psd(4, rng);
  const MetricMatrix once = psd_project(p.m);
  CHECK((once.m - p.m).norm() < 1e-10 * std::max(1.0, p.m.norm()));
  const MetricMatrix twice = psd_project(once.m);
  CHECK((twice.m - once.m).norm() < 1e-10);
}

TEST_CASE("psd projection rejects non-square and asymmetric input") {
  CHECK_THROWS_AS(psd_project(Matrix::Zero(2, 3)), std::invalid_argument);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;  // m(1, 0) stays 0
  CHECK_THROWS_AS(psd_project(m), std::invalid_argument);
}

TEST_CASE("factorizing the identity reconstructs it") {
  const ProjectionMatrix l = factorize_metric(MetricMatrix::identity(3), 0.0);
  CHECK((l.l * l.l.transpose() - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("factorizing diag(4,1) yields diag(2,1) with positive columns") {
  MetricMatrix m{Matrix::Zero(2, 2)};
  m.m(0, 0) = 4;
  m.m(1, 1) = 1;
  const ProjectionMatrix l = factorize_metric(m, 0.0);
  CHECK(l.l(0, 0) == doctest::Approx(2.0));
  CHECK(l.l(1, 1) == doctest::Approx(1.0));
  CHECK(std::abs(l.l(0, 1)) < 1e-12);
  CHECK(std::abs(l.l(1, 0)) < 1e-12);
}

TEST_CASE("rank-1 metric factorizes to one scaled column") {
  Vector v(3);
  v << 1, -2, 2;
  const MetricMatrix m{Matrix(v * v.transpose())};
  const ProjectionMatrix l = factorize_metric(m, 0.0);
  // First column proportional to v (norm |v|, sign fixed), the rest zero.
  const Vector c0 = l.l.col(0);
  CHECK((c0 * c0.transpose() - m.m).norm() < 1e-10);
  for (int j = 1; j < 3; ++j) CHECK(l.l.col(j).norm() < 1e-10);
}

TEST_CASE("factorization reconstructs random psd metrics") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 25; ++trial) {
    const MetricMatrix m = random_psd(5, rng);
    const ProjectionMatrix l = factorize_metric(m, 0.0);
    const double rel =
        (l.l * l.l.transpose() - m.m).norm() / std::max(m.m.norm(), 1e-12);
    CHECK(rel <= 1e-8);
  }
}

TEST_CASE("diagonal strengthening shifts the reconstruction by eps") {
  std::mt19937_64 rng(17);
  const MetricMatrix m = random_psd(4, rng);
  const double eps = 0.01;
  const ProjectionMatrix l = factorize_metric(m, eps);
  const Matrix target = m.m + eps * Matrix::Identity(4, 4);
  CHECK((l.l * l.l.transpose() - target).norm() < 1e-8 * target.norm());
  CHECK(default_strengthen_eps(m) ==
        doctest::Approx(1e-6 * m.m.trace() / 4.0));
}

TEST_CASE("identity projection leaves a dataset unchanged") {
  std::mt19937_64 rng(18);
  const Dataset x = random_dataset(6, 3, rng);
  const Dataset y = project_dataset(x, ProjectionMatrix::identity(3));
  CHECK((y.points - x.points).norm() == 0.0);
  CHECK(y.labels == x.labels);
}

TEST_CASE("basis-vector projection selects a coordinate") {
  std::mt19937_64 rng(19);
  const Dataset x = random_dataset(5, 3, rng);
  ProjectionMatrix l;
  l.l = Matrix::Zero(3, 1);
  l.l(0, 0) = 1.0;
  const Dataset y = project_dataset(x, l);
  CHECK(y.dim() == 1);
  CHECK((y.points.col(0) - x.points.col(0)).norm() == 0.0);
  CHECK(y.labels == x.labels);
}

TEST_CASE("projection rejects dimension mismatch") {
  std::mt19937_64 rng(20);
  const Dataset x = random_dataset(4, 3, rng);
  CHECK_THROWS_AS(project_dataset(x, ProjectionMatrix::identity(2)),
                  std::invalid_argument);
}

TEST_CASE("projected Euclidean distances equal metric distances") {
  std::mt19937_64 rng(21);
  const Dataset x = random_dataset(30, 4, rng);
  const MetricMatrix m = random_psd(4, rng);
  const Dataset y = project_dataset(x, factorize_metric(m, 0.0));
  for (int trial = 0; trial < 100; ++trial) {
    const int i = static_cast<int>(bounded_uint(rng, 30));
    const int j = static_cast<int>(bounded_uint(rng, 30));
    const double dm = mahalanobis_distance_sq(x.points.row(i).transpose(),
                                              x.points.row(j).transpose(), m);
    const double de = (y.points.row(i) - y.points.row(j)).squaredNorm();
    CHECK(std::abs(dm - de) <= 1e-6 * std::max(1.0, std::abs(dm)));
  }
}

TEST_CASE("full-rank pca is an isometry") {
  std::mt19937_64 rng(22);
  const Dataset x = random_dataset(40, 5, rng);
  const auto [y, basis] = pca_fit_project(x, 5);
  CHECK((basis.transpose() * basis - Matrix::Identity(5, 5)).norm() < 1e-8);
  for (int trial = 0; trial < 50; ++trial) {
    const int i = static_cast<int>(bounded_uint(rng, 40));
    const int j = static_cast<int>(bounded_uint(rng, 40));
    const double before = (x.points.row(i) - x.points.row(j)).squaredNorm();
    const double after = (y.points.row(i) - y.points.row(j)).squaredNorm();
    CHECK(before == doctest::Approx(after).epsilon(1e-8));
  }
}

TEST_CASE("pca recovers exactly low-rank data") {
  std::mt19937_64 rng(23);
  Dataset x;
  x.points.resize(20, 3);
  Vector dir(3);
  dir << 1, 2, -1;
  dir.normalize();
  for (int i = 0; i < 20; ++i) {
    x.points.row(i) = (normal01(rng) * dir).transpose();
    x.labels.push_back(i % 2);
  }
  const auto [y, basis] = pca_fit_project(x, 1);
  const Eigen::RowVectorXd mean = x.points.colwise().mean();
  const Matrix centered = x.points.rowwise() - mean;
  const Matrix reconstructed = y.points * basis.transpose();
  CHECK((reconstructed - centered).norm() < 1e-8);
}

TEST_CASE("pca projected variance equals the top covariance eigenvalues") {
  std::mt19937_64 rng(24);
  const Dataset x = random_dataset(50, 10, rng);
  const auto [y, basis] = pca_fit_project(x, 3);

  // Covariance assembled by explicit loops, independent of the library path.
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(10);
  for (int i = 0; i < 50; ++i) mean += x.points.row(i);
  mean /= 50.0;
  Matrix cov = Matrix::Zero(10, 10);
  for (int i = 0; i < 50; ++i) {
    const Eigen::RowVectorXd c = x.points.row(i) - mean;
    cov += c.transpose() * c;
  }
  cov /= 49.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  const Vector evals = es.eigenvalues();  // ascending
  const double top3 = evals(9) + evals(8) + evals(7);

  double projected_var = 0.0;
  const Eigen::RowVectorXd pmean = y.points.colwise().mean();
  for (int i = 0; i < 50; ++i)
    projected_var += (y.points.row(i) - pmean).squaredNorm();
  projected_var /= 49.0;
  CHECK(projected_var == doctest::Approx(top3).epsilon(1e-6));
}

TEST_CASE("pca rejects more dimensions than the data has") {
  std::mt19937_64 rng(25);
  const Dataset x = random_dataset(10, 3, rng);
  CHECK_THROWS_AS(pca_fit_project(x, 4), std::invalid_argument);
}
