#include "vaemir/regressor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "vaemir/error.hpp"
#include "vaemir/rng.hpp"

namespace vaemir::regressor {

namespace {

double full_mse(const nn::Network& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd pred = nn::forward_batch(net, x);
  return (pred.row(0).transpose() - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

void MlpRegressor::validate() const {
  if (network.empty() || network.output_dim() != 1) {
    throw DataError("regressor: network must have a scalar output");
  }
  if (network.input_dim() != inputs.dim() || inputs.std.size() != inputs.dim()) {
    throw DataError("regressor: standardization statistics do not match network");
  }
  if ((inputs.std.array() <= 0.0).any() || !(target_std > 0.0)) {
    throw DataError("regressor: standard deviations must be positive");
  }
}

void RegressorTrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("regressor: epochs must be positive");
  if (batch_size < 1) throw InvalidArgument("regressor: batch_size must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("regressor: learning_rate must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw InvalidArgument("regressor: hidden widths must be positive");
  }
}

FitResult fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
              const RegressorTrainConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(inputs.cols());
  if (n < 2) throw InvalidArgument("regressor: need at least 2 training pairs");
  if (targets.size() != inputs.cols()) {
    throw InvalidArgument("regressor: one target per input column required");
  }
  if (!inputs.allFinite() || !targets.allFinite()) {
    throw DataError("regressor: non-finite training data");
  }

  FitResult result;
  MlpRegressor& model = result.model;
  model.seed = cfg.seed;
  model.inputs = Standardizer::fit(inputs);
  const Standardizer target_stats =
      Standardizer::fit(std::span<const double>(targets.data(), n));
  model.target_mean = target_stats.mean[0];
  model.target_std = target_stats.std[0];

  const Eigen::MatrixXd x = model.inputs.apply_columns(inputs);
  const Eigen::VectorXd y =
      ((targets.array() - model.target_mean) / model.target_std).matrix();

  Rng rng(cfg.seed);
  std::vector<int> dims{static_cast<int>(inputs.rows())};
  dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  dims.push_back(1);
  std::vector<nn::Activation> acts(dims.size() - 1, nn::Activation::kRelu);
  acts.back() = nn::Activation::kIdentity;
  model.network = nn::init_network(dims, acts, rng);

  result.initial_mse = full_mse(model.network, x, y);

  nn::AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  nn::AdamState state(adam_cfg);
  nn::Tape tape;
  std::vector<std::size_t> perm(n);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Eigen::MatrixXd xb;
  Eigen::RowVectorXd yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm, rng);
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      xb.resize(x.rows(), static_cast<Eigen::Index>(count));
      yb.resize(static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) {
        xb.col(i) = x.col(perm[start + i]);
        yb[i] = y[perm[start + i]];
      }
      const Eigen::MatrixXd pred = nn::forward_batch(model.network, xb, &tape);
      const Eigen::RowVectorXd diff = pred.row(0) - yb;
      const double loss = diff.squaredNorm() / static_cast<double>(count);
      if (!std::isfinite(loss)) {
        throw NumericalError("regressor: non-finite loss in epoch " + std::to_string(epoch));
      }
      epoch_sum += loss * static_cast<double>(count);
      const Eigen::MatrixXd upstream = diff * (2.0 / static_cast<double>(count));
      nn::adam_step(model.network, nn::backward(model.network, tape, upstream), state);
    }
    result.epoch_losses.push_back(epoch_sum / static_cast<double>(n));
  }
  result.final_mse = full_mse(model.network, x, y);
  return result;
}

double predict(const MlpRegressor& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd out = nn::forward(model.network, model.inputs.apply(x));
  return out[0] * model.target_std + model.target_mean;
}

std::vector<double> predict_columns(const MlpRegressor& model, const Eigen::MatrixXd& xs) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(xs.cols()));
  for (Eigen::Index c = 0; c < xs.cols(); ++c) out.push_back(predict(model, xs.col(c)));
  return out;
}

}  // namespace vaemir::regressor
