#include "vaemir/kmeans.hpp"

#include <limits>
#include <string>

#include "vaemir/error.hpp"

namespace vaemir {

namespace {

Eigen::MatrixXd seed_plus_plus(const Eigen::MatrixXd& points, int clusters, Rng& rng) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd centroids(points.rows(), clusters);
  centroids.col(0) = points.col(static_cast<Eigen::Index>(rng.uniform_index(n)));
  Eigen::VectorXd best_sq = (points.colwise() - centroids.col(0)).colwise().squaredNorm();
  for (int c = 1; c < clusters; ++c) {
    const double total = best_sq.sum();
    Eigen::Index pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best_sq[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(n));
    }
    centroids.col(c) = points.col(pick);
    best_sq = best_sq.cwiseMin(
        (points.colwise() - centroids.col(c)).colwise().squaredNorm().transpose());
  }
  return centroids;
}

}  // namespace

Eigen::Index nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& x) {
  if (x.size() != centroids.rows()) throw DataError("nearest_centroid: dimension mismatch");
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    const double d = (centroids.col(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int clusters, Rng& rng,
                    int max_iterations, double tolerance) {
  if (clusters < 1) throw InvalidArgument("kmeans: need at least one cluster");
  if (clusters > points.cols()) {
    throw InvalidArgument("kmeans: " + std::to_string(clusters) + " clusters requested for " +
                          std::to_string(points.cols()) + " points");
  }
  if (max_iterations < 1) throw InvalidArgument("kmeans: max_iterations must be positive");

  KMeansResult result;
  result.centroids = seed_plus_plus(points, clusters, rng);
  const Eigen::Index n = points.cols();
  result.assignment.assign(static_cast<std::size_t>(n), 0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      result.assignment[i] = nearest_centroid(result.centroids, points.col(i));
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), clusters);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(clusters);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.col(result.assignment[i]) += points.col(i);
      counts[result.assignment[i]] += 1.0;
    }
    double shift = 0.0;
    for (int c = 0; c < clusters; ++c) {
      if (counts[c] == 0.0) continue;
      const Eigen::VectorXd updated = sums.col(c) / counts[c];
      shift = std::max(shift, (updated - result.centroids.col(c)).norm());
      result.centroids.col(c) = updated;
    }
    result.iterations = iter + 1;
    if (shift <= tolerance) {
      result.converged = true;
      break;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    result.assignment[i] = nearest_centroid(result.centroids, points.col(i));
  }
  return result;
}

}  // namespace vaemir
