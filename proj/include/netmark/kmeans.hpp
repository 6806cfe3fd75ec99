#pragma once

// Seeded Lloyd k-means over the columns of a dense Eigen matrix.

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "netmark/rng.hpp"

namespace netmark {

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct KMeansResult {
  /// Cluster of each point (column), in 0..k-1.
  std::vector<int> assignment;
  /// One centroid per column.
  DenseMatrix<Scalar> centroids;
  std::size_t iterations = 0;
  /// Within-cluster sum of squares after every centroid update.
  std::vector<double> distortion;
};

namespace detail {

template <class Scalar>
struct ClusterSums {
  DenseMatrix<Scalar> sums;
  std::vector<std::size_t> sizes;
};

template <class Derived>
ClusterSums<typename Derived::Scalar> cluster_sums(const Eigen::MatrixBase<Derived>& points,
                                                   const std::vector<int>& assignment, std::size_t k) {
  using Scalar = typename Derived::Scalar;
  ClusterSums<Scalar> s{DenseMatrix<Scalar>::Zero(points.rows(), static_cast<Eigen::Index>(k)),
                        std::vector<std::size_t>(k, 0)};
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    const auto c = static_cast<Eigen::Index>(assignment[static_cast<std::size_t>(i)]);
    s.sums.col(c) += points.col(i);
    ++s.sizes[static_cast<std::size_t>(c)];
  }
  return s;
}

// sum ||x - mean||^2 = sum ||x||^2 - sum_c ||S_c||^2 / n_c
template <class Scalar>
double distortion(const DenseVector<Scalar>& point_norms, const ClusterSums<Scalar>& s) {
  double total = point_norms.template cast<double>().sum();
  for (std::size_t c = 0; c < s.sizes.size(); ++c) {
    if (s.sizes[c] == 0) continue;
    total -= s.sums.col(static_cast<Eigen::Index>(c)).template cast<double>().squaredNorm() /
             static_cast<double>(s.sizes[c]);
  }
  return total < 0 ? 0 : total;
}

template <class Scalar>
DenseMatrix<Scalar> means(const ClusterSums<Scalar>& s) {
  DenseMatrix<Scalar> m = s.sums;
  for (std::size_t c = 0; c < s.sizes.size(); ++c) {
    if (s.sizes[c] > 0) m.col(static_cast<Eigen::Index>(c)) /= static_cast<Scalar>(s.sizes[c]);
  }
  return m;
}

// Squared distances, one row per centroid and one column per point.
template <class Derived, class Scalar = typename Derived::Scalar>
DenseMatrix<Scalar> squared_distances(const Eigen::MatrixBase<Derived>& points, const DenseVector<Scalar>& point_norms,
                                      const DenseMatrix<Scalar>& centroids) {
  DenseMatrix<Scalar> d = Scalar(-2) * (centroids.transpose() * points);
  d.colwise() += centroids.colwise().squaredNorm().transpose();
  d.rowwise() += point_norms.transpose();
  return d.cwiseMax(Scalar(0));
}

}  // namespace detail

/// k-means++ seeding: first centre uniform, the rest by D^2 sampling. When
/// every remaining point coincides with a chosen centre, the lowest-index
/// unchosen point is taken.
template <class Derived>
std::vector<Eigen::Index> kmeans_plus_plus(const Eigen::MatrixBase<Derived>& points, std::size_t k, Rng& rng) {
  const Eigen::Index n = points.cols();
  std::vector<Eigen::Index> centres;
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  centres.push_back(static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(n))));
  chosen[static_cast<std::size_t>(centres.back())] = true;
  DenseVector<double> nearest =
      (points.colwise() - points.col(centres.back())).colwise().squaredNorm().transpose().template cast<double>();
  while (centres.size() < k) {
    const double total = nearest.sum();
    Eigen::Index pick = -1;
    if (total > 0) {
      const double target = uniform_unit(rng) * total;
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {
        for (Eigen::Index i = n - 1; i >= 0; --i) {
          if (nearest(i) > 0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          pick = i;
          break;
        }
      }
    }
    centres.push_back(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
    const DenseVector<double> d =
        (points.colwise() - points.col(pick)).colwise().squaredNorm().transpose().template cast<double>();
    nearest = nearest.cwiseMin(d);
  }
  return centres;
}

/// Lloyd iterations until assignments stop changing or `max_iters` passes.
///
/// A point moves only when another centroid is strictly closer, ties go to
/// the lowest cluster index, and a cluster left empty steals the point
/// farthest from its own centroid. Distortion never increases.
template <class Derived>
KMeansResult<typename Derived::Scalar> kmeans(const Eigen::MatrixBase<Derived>& points, std::size_t k,
                                              std::uint64_t seed, std::size_t max_iters = 100) {
  using Scalar = typename Derived::Scalar;
  const auto n = static_cast<std::size_t>(points.cols());
  if (k == 0 || k > n) throw std::invalid_argument("k-means needs 1 <= k <= point count");
  if (max_iters == 0) throw std::invalid_argument("k-means needs max_iters >= 1");

  Rng rng(seed);
  const DenseVector<Scalar> norms = points.colwise().squaredNorm().transpose();
  KMeansResult<Scalar> result;
  result.centroids.resize(points.rows(), static_cast<Eigen::Index>(k));
  const auto seeds = kmeans_plus_plus(points, k, rng);
  for (std::size_t c = 0; c < k; ++c) result.centroids.col(static_cast<Eigen::Index>(c)) = points.col(seeds[c]);

  const Scalar scale = norms.size() ? norms.maxCoeff() : Scalar(0);
  const Scalar eps = std::numeric_limits<Scalar>::epsilon() * Scalar(64) * (Scalar(1) + scale);
  std::vector<int>& assign = result.assignment;
  assign.assign(n, -1);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    const DenseMatrix<Scalar> dist = detail::squared_distances(points, norms, result.centroids);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      Eigen::Index best = 0;
      dist.col(col).minCoeff(&best);
      const int current = assign[i];
      if (current < 0 || dist(best, col) < dist(current, col) - eps) {
        if (current != static_cast<int>(best)) changed = true;
        assign[i] = static_cast<int>(best);
      }
    }
    ++result.iterations;
    if (!changed && iter > 0) break;

    auto sums = detail::cluster_sums(points, assign, k);
    for (std::size_t c = 0; c < k; ++c) {
      if (sums.sizes[c] != 0) continue;
      const DenseMatrix<Scalar> centre = detail::means(sums);
      double worst = -1;
      std::size_t victim = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto owner = static_cast<std::size_t>(assign[i]);
        if (sums.sizes[owner] < 2) continue;
        const double d = static_cast<double>(
            (points.col(static_cast<Eigen::Index>(i)) - centre.col(static_cast<Eigen::Index>(owner))).squaredNorm());
        if (d > worst) {
          worst = d;
          victim = i;
        }
      }
      const auto owner = static_cast<std::size_t>(assign[victim]);
      sums.sums.col(static_cast<Eigen::Index>(owner)) -= points.col(static_cast<Eigen::Index>(victim));
      --sums.sizes[owner];
      sums.sums.col(static_cast<Eigen::Index>(c)) += points.col(static_cast<Eigen::Index>(victim));
      ++sums.sizes[c];
      assign[victim] = static_cast<int>(c);
    }
    result.centroids = detail::means(sums);
    result.distortion.push_back(detail::distortion(norms, sums));
  }
  return result;
}

}  // namespace netmark
