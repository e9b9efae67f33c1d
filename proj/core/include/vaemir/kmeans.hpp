#pragma once

#include <vector>

#include <Eigen/Core>

#include "vaemir/rng.hpp"

namespace vaemir {

struct KMeansResult {
  Eigen::MatrixXd centroids;           // features x clusters
  std::vector<Eigen::Index> assignment;  // cluster per point
  int iterations = 0;
  bool converged = false;
};

// Lloyd's algorithm with k-means++ seeding over the columns of `points`.
// Stops once no centroid moves further than `tolerance` (Euclidean) or after
// `max_iterations`. Empty clusters keep their previous centroid.
KMeansResult kmeans(const Eigen::MatrixXd& points, int clusters, Rng& rng,
                    int max_iterations = 100, double tolerance = 1e-6);

// Index of the centroid nearest to x; ties go to the lower index.
Eigen::Index nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& x);

}  // namespace vaemir
