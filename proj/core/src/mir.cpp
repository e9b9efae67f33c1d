#include "vaemir/mir.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "vaemir/error.hpp"
#include "vaemir/kmeans.hpp"
#include "vaemir/stats.hpp"

namespace vaemir::mir {

void Bag::validate() const {
  if (instances.cols() < 1) throw DataError("bag '" + bag_id + "' has no instances");
  if (instances.rows() < 1) throw DataError("bag '" + bag_id + "' has zero-width instances");
  if (!instances.allFinite()) throw DataError("bag '" + bag_id + "' has non-finite features");
  if (label && !std::isfinite(*label)) throw DataError("bag '" + bag_id + "' has a non-finite label");
  if (anomaly_flags && static_cast<Eigen::Index>(anomaly_flags->size()) != instances.cols()) {
    throw DataError("bag '" + bag_id + "': anomaly_flags length differs from instance count");
  }
}

Eigen::Index validate_bags(std::span<const Bag> bags) {
  if (bags.empty()) throw DataError("no bags");
  const Eigen::Index d = bags.front().dim();
  for (const auto& bag : bags) {
    bag.validate();
    if (bag.dim() != d) {
      throw DataError("bag '" + bag.bag_id + "' has " + std::to_string(bag.dim()) +
                      " features, expected " + std::to_string(d));
    }
  }
  return d;
}

std::vector<Eigen::Index> select_lowest(const Eigen::VectorXd& scores, int k) {
  const Eigen::Index n = scores.size();
  if (k < 1 || k > n) {
    throw InvalidArgument("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

Prototype vaemir_prototype(const Bag& bag, const Eigen::VectorXd& scores, int k) {
  if (scores.size() != bag.size()) {
    throw InvalidArgument("bag '" + bag.bag_id + "': " + std::to_string(scores.size()) +
                          " scores for " + std::to_string(bag.size()) + " instances");
  }
  if (k < 1 || k > bag.size()) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(bag.size()) + " instances of bag '" + bag.bag_id + "'");
  }
  const auto chosen = select_lowest(scores, k);
  return {bag.bag_id, invariant_column_mean(bag.instances, chosen), k};
}

Prototype mean_prototype(const Bag& bag) {
  if (bag.size() < 1) throw InvalidArgument("bag '" + bag.bag_id + "' is empty");
  return {bag.bag_id, invariant_column_mean(bag.instances), static_cast<int>(bag.size())};
}

double aggregate(std::vector<double> values, Aggregation how) {
  return how == Aggregation::kMedian ? median(std::move(values))
                                     : invariant_mean(std::move(values));
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kInstance:
      return "instance";
    case Method::kMean:
      return "mean";
    case Method::kPrime:
      return "prime";
    case Method::kCluster:
      return "cluster";
    case Method::kVaemir:
      return "vaemir";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::kInstance, Method::kMean, Method::kPrime, Method::kCluster,
                   Method::kVaemir}) {
    if (name == to_string(m)) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) +
                        "' (expected instance, mean, prime, cluster or vaemir)");
}

Eigen::VectorXd bag_labels(std::span<const Bag> bags) {
  Eigen::VectorXd labels(static_cast<Eigen::Index>(bags.size()));
  for (std::size_t b = 0; b < bags.size(); ++b) {
    if (!bags[b].label) throw DataError("training bag '" + bags[b].bag_id + "' has no label");
    labels[static_cast<Eigen::Index>(b)] = *bags[b].label;
  }
  return labels;
}

InstanceTable instance_table(std::span<const Bag> bags) {
  const Eigen::Index d = validate_bags(bags);
  const Eigen::VectorXd labels = bag_labels(bags);
  Eigen::Index total = 0;
  for (const auto& bag : bags) total += bag.size();
  InstanceTable table;
  table.instances.resize(d, total);
  table.labels.resize(total);
  table.bag_of.reserve(static_cast<std::size_t>(total));
  Eigen::Index col = 0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto n = bags[b].size();
    table.instances.middleCols(col, n) = bags[b].instances;
    table.labels.segment(col, n).setConstant(labels[static_cast<Eigen::Index>(b)]);
    table.bag_of.insert(table.bag_of.end(), static_cast<std::size_t>(n), b);
    col += n;
  }
  return table;
}

namespace {

Eigen::MatrixXd stack(const std::vector<Prototype>& protos) {
  Eigen::MatrixXd out(protos.front().vector.size(), static_cast<Eigen::Index>(protos.size()));
  for (std::size_t i = 0; i < protos.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = protos[i].vector;
  return out;
}

Eigen::MatrixXd columns_of(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(idx[i]);
  return out;
}

}  // namespace

InstanceMirModel instance_mir_fit(std::span<const Bag> bags,
                                  const regressor::RegressorTrainConfig& cfg,
                                  Aggregation aggregation) {
  const InstanceTable table = instance_table(bags);
  return {regressor::fit(table.instances, table.labels, cfg).model, aggregation};
}

double instance_mir_predict(const InstanceMirModel& model, const Bag& bag) {
  return aggregate(regressor::predict_columns(model.regressor, bag.instances), model.aggregation);
}

MeanModel mean_fit(std::span<const Bag> bags, const regressor::RegressorTrainConfig& cfg) {
  validate_bags(bags);
  const Eigen::VectorXd labels = bag_labels(bags);
  std::vector<Prototype> protos;
  protos.reserve(bags.size());
  for (const auto& bag : bags) protos.push_back(mean_prototype(bag));
  return {regressor::fit(stack(protos), labels, cfg).model};
}

double mean_predict(const MeanModel& model, const Bag& bag) {
  return regressor::predict(model.regressor, mean_prototype(bag).vector);
}

void PrimeMirConfig::validate() const {
  if (max_iters < 1) throw InvalidArgument("prime-mir: max_iters must be at least 1");
  instance_regressor.validate();
  bag_regressor.validate();
}

namespace {

struct Selection {
  std::vector<Eigen::Index> indices;
  double mean_abs_residual = 0.0;
};

Selection select_primary(const regressor::MlpRegressor& model, std::span<const Bag> bags,
                         const Eigen::VectorXd& labels) {
  Selection sel;
  sel.indices.reserve(bags.size());
  double total = 0.0;
  for (std::size_t b = 0; b < bags.size(); ++b) {
    const auto preds = regressor::predict_columns(model, bags[b].instances);
    const double y = labels[static_cast<Eigen::Index>(b)];
    Eigen::Index best = 0;
    double best_r = std::abs(preds[0] - y);
    for (std::size_t i = 1; i < preds.size(); ++i) {
      const double r = std::abs(preds[i] - y);
      if (r < best_r) {
        best_r = r;
        best = static_cast<Eigen::Index>(i);
      }
    }
    sel.indices.push_back(best);
    total += best_r;
  }
  sel.mean_abs_residual = total / static_cast<double>(bags.size());
  return sel;
}

}  // namespace

PrimeMirModel prime_mir_fit(std::span<const Bag> bags, const PrimeMirConfig& cfg) {
  cfg.validate();
  const InstanceTable table = instance_table(bags);
  const Eigen::VectorXd labels = bag_labels(bags);

  PrimeMirModel model;
  model.regressor = regressor::fit(table.instances, table.labels, cfg.instance_regressor).model;
  Selection current = select_primary(model.regressor, bags, labels);
  model.residual_trace.push_back(current.mean_abs_residual);

  Eigen::MatrixXd picked(table.instances.rows(), static_cast<Eigen::Index>(bags.size()));
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    for (std::size_t b = 0; b < bags.size(); ++b) {
      picked.col(static_cast<Eigen::Index>(b)) = bags[b].instances.col(current.indices[b]);
    }
    auto candidate = regressor::fit(picked, labels, cfg.bag_regressor).model;
    Selection next = select_primary(candidate, bags, labels);
    // A refit that worsens the selected residuals is rejected; the previous
    // model and selection stand.
    if (next.mean_abs_residual > current.mean_abs_residual) break;
    model.regressor = std::move(candidate);
    model.iterations = iter;
    model.residual_trace.push_back(next.mean_abs_residual);
    const bool unchanged = next.indices == current.indices;
    current = std::move(next);
    if (unchanged) {
      model.converged = true;
      break;
    }
  }
  model.selected = std::move(current.indices);
  return model;
}

double prime_mir_predict(const PrimeMirModel& model, const Bag& bag) {
  return median(regressor::predict_columns(model.regressor, bag.instances));
}

void ClusterMirConfig::validate() const {
  if (n_clusters < 1) throw InvalidArgument("cluster-mir: n_clusters must be at least 1");
  if (max_iterations < 1) throw InvalidArgument("cluster-mir: max_iterations must be positive");
  regressor.validate();
}

ClusterMirModel cluster_mir_fit(std::span<const Bag> bags, const ClusterMirConfig& cfg) {
  cfg.validate();
  const InstanceTable table = instance_table(bags);
  const Eigen::VectorXd labels = bag_labels(bags);
  if (cfg.n_clusters > table.instances.cols()) {
    throw InvalidArgument("cluster-mir: n_clusters exceeds the number of training instances");
  }
  Rng rng(cfg.seed);
  const KMeansResult km =
      kmeans(table.instances, cfg.n_clusters, rng, cfg.max_iterations, cfg.tolerance);

  ClusterMirModel model;
  model.centroids = km.centroids;
  model.training_assignment = km.assignment;
  model.candidate_rmse.assign(static_cast<std::size_t>(cfg.n_clusters),
                              std::numeric_limits<double>::infinity());

  std::optional<regressor::MlpRegressor> best;
  for (int c = 0; c < cfg.n_clusters; ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index i = 0; i < table.instances.cols(); ++i) {
      if (km.assignment[i] == c) members.push_back(i);
    }
    if (members.size() < 2) continue;
    Eigen::VectorXd member_labels(static_cast<Eigen::Index>(members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) member_labels[static_cast<Eigen::Index>(i)] = table.labels[members[i]];
    auto candidate =
        regressor::fit(columns_of(table.instances, members), member_labels, cfg.regressor).model;

    // Per-bag prediction from the bag's own members of this cluster.
    std::vector<std::vector<double>> per_bag(bags.size());
    for (Eigen::Index i : members) {
      per_bag[table.bag_of[static_cast<std::size_t>(i)]].push_back(
          regressor::predict(candidate, table.instances.col(i)));
    }
    double sq = 0.0;
    int counted = 0;
    for (std::size_t b = 0; b < bags.size(); ++b) {
      if (per_bag[b].empty()) continue;
      const double r = invariant_mean(per_bag[b]) - labels[static_cast<Eigen::Index>(b)];
      sq += r * r;
      ++counted;
    }
    if (counted == 0) continue;
    const double rmse = std::sqrt(sq / counted);
    model.candidate_rmse[static_cast<std::size_t>(c)] = rmse;
    if (!best || rmse < model.candidate_rmse[static_cast<std::size_t>(model.chosen_cluster)]) {
      best = std::move(candidate);
      model.chosen_cluster = c;
    }
  }
  if (!best) throw DataError("cluster-mir: no cluster has enough instances to fit a regressor");
  model.regressor = std::move(*best);
  return model;
}

double cluster_mir_predict(const ClusterMirModel& model, const Bag& bag) {
  std::vector<double> preds;
  for (Eigen::Index i = 0; i < bag.size(); ++i) {
    if (nearest_centroid(model.centroids, bag.instances.col(i)) == model.chosen_cluster) {
      preds.push_back(regressor::predict(model.regressor, bag.instances.col(i)));
    }
  }
  if (preds.empty()) preds = regressor::predict_columns(model.regressor, bag.instances);
  return invariant_mean(std::move(preds));
}

VaemirModel vaemir_fit_scored(std::span<const Bag> bags,
                              std::span<const Eigen::VectorXd> scores, int k,
                              const regressor::RegressorTrainConfig& cfg) {
  validate_bags(bags);
  if (scores.size() != bags.size()) throw InvalidArgument("vaemir: one score vector per bag required");
  for (const auto& bag : bags) {
    if (k < 1 || k > bag.size()) {
      throw InvalidArgument("vaemir: k = " + std::to_string(k) + " exceeds the " +
                            std::to_string(bag.size()) + " instances of bag '" + bag.bag_id + "'");
    }
  }
  const Eigen::VectorXd labels = bag_labels(bags);
  std::vector<Prototype> protos;
  protos.reserve(bags.size());
  for (std::size_t b = 0; b < bags.size(); ++b) {
    protos.push_back(vaemir_prototype(bags[b], scores[b], k));
  }
  return {regressor::fit(stack(protos), labels, cfg).model, k};
}

VaemirModel vaemir_fit(std::span<const Bag> bags, const vae::VaeModel& vae, int k,
                       const regressor::RegressorTrainConfig& cfg) {
  const Eigen::Index d = validate_bags(bags);
  if (d != vae.feature_dim()) {
    throw DataError("vaemir: VAE expects " + std::to_string(vae.feature_dim()) +
                    " features, bags have " + std::to_string(d));
  }
  std::vector<Eigen::VectorXd> scores;
  scores.reserve(bags.size());
  for (const auto& bag : bags) scores.push_back(vae::anomaly_scores(vae, bag.instances));
  return vaemir_fit_scored(bags, scores, k, cfg);
}

double vaemir_predict_scored(const VaemirModel& model, const Bag& bag,
                             const Eigen::VectorXd& scores) {
  return regressor::predict(model.regressor, vaemir_prototype(bag, scores, model.k).vector);
}

double vaemir_predict(const VaemirModel& model, const vae::VaeModel& vae, const Bag& bag) {
  return vaemir_predict_scored(model, bag, vae::anomaly_scores(vae, bag.instances));
}

}  // namespace vaemir::mir
