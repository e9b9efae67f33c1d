#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vaemir/regressor.hpp"
#include "vaemir/vae.hpp"

// Bags of instances and the five bag-level regression strategies: Instance-MIR,
// Mean Regression, Prime-MIR, Cluster-MIR and VAEMIR.
namespace vaemir::mir {

using Instance = Eigen::VectorXd;

// One labeled unit, e.g. a county-year. Instances are stored one per column.
struct Bag {
  std::string bag_id;
  int year = 0;
  Eigen::MatrixXd instances;  // D x N
  std::optional<double> label;
  std::optional<std::vector<bool>> anomaly_flags;

  Eigen::Index size() const { return instances.cols(); }
  Eigen::Index dim() const { return instances.rows(); }
  Instance instance(Eigen::Index i) const { return instances.col(i); }

  // N >= 1, D >= 1, finite features and flags sized N when present.
  void validate() const;
};

// Validates every bag and checks they share one feature dimension, which is
// returned. Throws DataError otherwise.
Eigen::Index validate_bags(std::span<const Bag> bags);

struct Prototype {
  std::string bag_id;
  Eigen::VectorXd vector;
  int k_used = 0;
};

// Indices of the k smallest scores, ties going to the lower index, returned
// in ascending index order.
std::vector<Eigen::Index> select_lowest(const Eigen::VectorXd& scores, int k);

// Mean of the k lowest-scoring instances.
Prototype vaemir_prototype(const Bag& bag, const Eigen::VectorXd& scores, int k);

// Mean of all instances; identical to vaemir_prototype with k = N.
Prototype mean_prototype(const Bag& bag);

enum class Aggregation { kMean, kMedian };
double aggregate(std::vector<double> values, Aggregation how);

enum class Method { kInstance, kMean, kPrime, kCluster, kVaemir };
std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

// Every instance of every bag as one column, plus the owning bag's label for
// each column. Throws DataError if a bag is unlabeled.
struct InstanceTable {
  Eigen::MatrixXd instances;
  Eigen::VectorXd labels;
  std::vector<std::size_t> bag_of;
};
InstanceTable instance_table(std::span<const Bag> bags);

// Bag labels in order; throws DataError naming the first unlabeled bag.
Eigen::VectorXd bag_labels(std::span<const Bag> bags);

// Instance-MIR: every instance is a training sample carrying its bag's label.
struct InstanceMirModel {
  regressor::MlpRegressor regressor;
  Aggregation aggregation = Aggregation::kMean;
};
InstanceMirModel instance_mir_fit(std::span<const Bag> bags,
                                  const regressor::RegressorTrainConfig& cfg,
                                  Aggregation aggregation = Aggregation::kMean);
double instance_mir_predict(const InstanceMirModel& model, const Bag& bag);

// Mean Regression: one mean prototype per bag.
struct MeanModel {
  regressor::MlpRegressor regressor;
};
MeanModel mean_fit(std::span<const Bag> bags, const regressor::RegressorTrainConfig& cfg);
double mean_predict(const MeanModel& model, const Bag& bag);

// Prime-MIR: alternate between picking the instance per bag whose prediction
// is closest to the label and refitting on the picked instances.
struct PrimeMirConfig {
  regressor::RegressorTrainConfig instance_regressor;  // initial all-instance fit
  regressor::RegressorTrainConfig bag_regressor;       // refits on selections
  int max_iters = 20;

  void validate() const;
};
struct PrimeMirModel {
  regressor::MlpRegressor regressor;
  std::vector<Eigen::Index> selected;  // per training bag
  int iterations = 0;
  bool converged = false;
  // Mean absolute residual of the selected instances, one entry per accepted
  // selection (initial selection first). Non-increasing.
  std::vector<double> residual_trace;
};
PrimeMirModel prime_mir_fit(std::span<const Bag> bags, const PrimeMirConfig& cfg);
double prime_mir_predict(const PrimeMirModel& model, const Bag& bag);

// Cluster-MIR: k-means over all instances, one regressor per cluster, keep the
// regressor with the lowest training-bag RMSE.
struct ClusterMirConfig {
  int n_clusters = 5;
  regressor::RegressorTrainConfig regressor;
  std::uint64_t seed = 0;  // k-means seeding
  int max_iterations = 100;
  double tolerance = 1e-6;

  void validate() const;
};
struct ClusterMirModel {
  regressor::MlpRegressor regressor;
  Eigen::MatrixXd centroids;
  Eigen::Index chosen_cluster = 0;
  std::vector<double> candidate_rmse;  // +inf for clusters that could not be fit
  std::vector<Eigen::Index> training_assignment;
};
ClusterMirModel cluster_mir_fit(std::span<const Bag> bags, const ClusterMirConfig& cfg);
double cluster_mir_predict(const ClusterMirModel& model, const Bag& bag);

// VAEMIR: prototypes from the k instances with the lowest VAE reconstruction
// loss. The *_scored variants take precomputed per-bag scores.
struct VaemirModel {
  regressor::MlpRegressor regressor;
  int k = 0;
};
VaemirModel vaemir_fit(std::span<const Bag> bags, const vae::VaeModel& vae, int k,
                       const regressor::RegressorTrainConfig& cfg);
VaemirModel vaemir_fit_scored(std::span<const Bag> bags,
                              std::span<const Eigen::VectorXd> scores, int k,
                              const regressor::RegressorTrainConfig& cfg);
double vaemir_predict(const VaemirModel& model, const vae::VaeModel& vae, const Bag& bag);
double vaemir_predict_scored(const VaemirModel& model, const Bag& bag,
                             const Eigen::VectorXd& scores);

}  // namespace vaemir::mir
