#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vaemir/nn.hpp"
#include "vaemir/stats.hpp"

namespace vaemir::regressor {

// Two-hidden-layer MLP mapping a D-vector to a scalar. Inputs and targets are
// standardized internally; predict() maps back to target units.
struct MlpRegressor {
  nn::Network network;
  Standardizer inputs;
  double target_mean = 0.0;
  double target_std = 1.0;
  std::uint64_t seed = 0;

  Eigen::Index input_dim() const { return inputs.dim(); }
  void validate() const;
};

struct RegressorTrainConfig {
  int epochs = 300;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::vector<int> hidden_dims = {128, 64};

  void validate() const;
};

struct FitResult {
  MlpRegressor model;
  double initial_mse = 0.0;  // standardized-target MSE before the first step
  double final_mse = 0.0;    // standardized-target MSE after training
  std::vector<double> epoch_losses;
};

// `inputs` is features x samples, `targets` one label per column.
FitResult fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
              const RegressorTrainConfig& cfg);

double predict(const MlpRegressor& model, const Eigen::VectorXd& x);

// predict() applied to each column; results are bit-identical to calling
// predict() column by column.
std::vector<double> predict_columns(const MlpRegressor& model, const Eigen::MatrixXd& xs);

}  // namespace vaemir::regressor
