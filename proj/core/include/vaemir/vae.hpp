#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "vaemir/nn.hpp"
#include "vaemir/rng.hpp"
#include "vaemir/stats.hpp"

namespace vaemir::vae {

// Encoder maps a standardized D-vector to [mu; log-variance] (2L outputs);
// decoder maps a latent L-vector back to D features.
struct VaeModel {
  nn::Network encoder;
  nn::Network decoder;
  int latent_dim = 0;
  Standardizer features;

  Eigen::Index feature_dim() const { return features.dim(); }

  // Throws DataError when the networks and statistics disagree.
  void validate() const;
};

struct VaeTrainConfig {
  int epochs = 200;
  int batch_size = 64;
  int latent_dim = 8;
  std::vector<int> hidden_dims = {64, 32};
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct VaeTrainResult {
  VaeModel model;
  std::vector<double> epoch_losses;  // mean per-sample loss per epoch
};

Eigen::VectorXd standardize(const Eigen::VectorXd& x, const VaeModel& model);
Eigen::VectorXd unstandardize(const Eigen::VectorXd& z, const VaeModel& model);

// z = mu + eps * sigma
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                               const Eigen::VectorXd& eps);

// 1/2 * sum_i (mu_i^2 + sigma_i^2 - log sigma_i^2 - 1) over latent dimensions.
double latent_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma);

// Euclidean distance between an input and its reconstruction.
double recon_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime);

double total_loss(double latent, double recon);

// Builds an untrained model with the configured encoder/decoder widths.
VaeModel init_vae(const Standardizer& features, const VaeTrainConfig& cfg, Rng& rng);

// Per-sample training loss for a standardized input with a fixed eps, and
// (optionally) its gradient with respect to every encoder/decoder parameter.
struct SampleGradients {
  nn::Gradients encoder;
  nn::Gradients decoder;
};
double sample_loss(const VaeModel& model, const Eigen::VectorXd& x_std,
                   const Eigen::VectorXd& eps, SampleGradients* grads = nullptr);

// Returns the permutation of sample positions to visit in `epoch`. The
// default draws a Fisher-Yates shuffle from the training rng.
using BatchOrder =
    std::function<std::vector<std::size_t>(int epoch, std::size_t n, Rng& rng)>;

// Trains on `instances` (features x samples). Throws InvalidArgument for an
// invalid config or fewer than two samples and NumericalError when the loss
// stops being finite.
VaeTrainResult train_vae(const Eigen::MatrixXd& instances, const VaeTrainConfig& cfg,
                         const BatchOrder& order = {});

// Reconstruction loss of x through the mean latent code (no sampling).
double anomaly_score(const VaeModel& model, const Eigen::VectorXd& x);

// anomaly_score for every column of `instances`.
Eigen::VectorXd anomaly_scores(const VaeModel& model, const Eigen::MatrixXd& instances);

}  // namespace vaemir::vae
