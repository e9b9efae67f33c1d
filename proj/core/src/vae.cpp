#include "vaemir/vae.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "vaemir/error.hpp"

namespace vaemir::vae {

namespace {

struct EncodedBatch {
  Eigen::MatrixXd mu;
  Eigen::MatrixXd log_var;
};

EncodedBatch split_head(const Eigen::MatrixXd& head, int latent_dim) {
  return {head.topRows(latent_dim), head.bottomRows(latent_dim)};
}

nn::Network build_mlp(std::vector<int> dims, Rng& rng) {
  std::vector<nn::Activation> acts(dims.size() - 1, nn::Activation::kRelu);
  acts.back() = nn::Activation::kIdentity;
  return nn::init_network(dims, acts, rng);
}

// Mean per-sample loss of a batch and, when `enc_grads`/`dec_grads` are
// supplied, gradients of that mean.
double batch_loss(const VaeModel& model, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& eps, nn::Gradients* enc_grads,
                  nn::Gradients* dec_grads) {
  const int L = model.latent_dim;
  const double inv_b = 1.0 / static_cast<double>(x.cols());
  const bool want_grads = enc_grads != nullptr;

  nn::Tape enc_tape, dec_tape;
  const Eigen::MatrixXd head =
      nn::forward_batch(model.encoder, x, want_grads ? &enc_tape : nullptr);
  const auto [mu, log_var] = split_head(head, L);
  const Eigen::ArrayXXd sigma = (0.5 * log_var.array()).exp();
  const Eigen::MatrixXd z = (mu.array() + eps.array() * sigma).matrix();
  const Eigen::MatrixXd recon =
      nn::forward_batch(model.decoder, z, want_grads ? &dec_tape : nullptr);

  const Eigen::MatrixXd residual = recon - x;
  const Eigen::RowVectorXd dist = residual.colwise().norm();
  const Eigen::RowVectorXd latent =
      0.5 * (mu.array().square() + log_var.array().exp() - log_var.array() - 1.0)
                .matrix()
                .colwise()
                .sum();
  const double loss = (latent + dist).sum() * inv_b;
  if (!want_grads) return loss;

  // d||r|| / dr = r / ||r||; zero at a perfect reconstruction.
  Eigen::MatrixXd d_recon(residual.rows(), residual.cols());
  for (Eigen::Index c = 0; c < residual.cols(); ++c) {
    d_recon.col(c) = dist[c] > 0.0 ? Eigen::VectorXd(residual.col(c) * (inv_b / dist[c]))
                                   : Eigen::VectorXd::Zero(residual.rows());
  }
  *dec_grads = nn::backward(model.decoder, dec_tape, d_recon);
  const Eigen::MatrixXd& d_z = dec_grads->input;

  Eigen::MatrixXd d_head(2 * L, x.cols());
  d_head.topRows(L) = d_z + mu * inv_b;
  d_head.bottomRows(L) =
      (d_z.array() * eps.array() * 0.5 * sigma +
       0.5 * (log_var.array().exp() - 1.0) * inv_b)
          .matrix();
  *enc_grads = nn::backward(model.encoder, enc_tape, d_head);
  return loss;
}

Eigen::MatrixXd draw_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.normal();
  }
  return m;
}

}  // namespace

void VaeModel::validate() const {
  const Eigen::Index d = feature_dim();
  if (latent_dim < 1) throw DataError("vae: latent_dim must be positive");
  if (d < 1 || features.std.size() != d) throw DataError("vae: bad feature statistics");
  if ((features.std.array() <= 0.0).any()) throw DataError("vae: feature_std must be > 0");
  if (encoder.empty() || decoder.empty()) throw DataError("vae: missing network");
  if (encoder.input_dim() != d || decoder.output_dim() != d) {
    throw DataError("vae: encoder input / decoder output must equal feature_dim");
  }
  if (encoder.output_dim() != 2 * latent_dim || decoder.input_dim() != latent_dim) {
    throw DataError("vae: encoder head must be 2*latent_dim, decoder input latent_dim");
  }
}

void VaeTrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("vae: epochs must be positive");
  if (batch_size < 1) throw InvalidArgument("vae: batch_size must be positive");
  if (latent_dim < 1) throw InvalidArgument("vae: latent_dim must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("vae: learning_rate must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw InvalidArgument("vae: hidden widths must be positive");
  }
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x, const VaeModel& model) {
  return model.features.apply(x);
}

Eigen::VectorXd unstandardize(const Eigen::VectorXd& z, const VaeModel& model) {
  return model.features.invert(z);
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                               const Eigen::VectorXd& eps) {
  if (mu.size() != sigma.size() || mu.size() != eps.size()) {
    throw InvalidArgument("reparameterize: mu, sigma and eps lengths differ");
  }
  return (mu.array() + eps.array() * sigma.array()).matrix();
}

double latent_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma) {
  if (mu.size() != sigma.size()) throw InvalidArgument("latent_loss: length mismatch");
  if ((sigma.array() <= 0.0).any() || !sigma.allFinite()) {
    throw InvalidArgument("latent_loss: sigma must be positive and finite");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double var = sigma[i] * sigma[i];
    sum += mu[i] * mu[i] + var - std::log(var) - 1.0;
  }
  return 0.5 * sum;
}

double recon_loss(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime) {
  if (x.size() != x_prime.size()) throw InvalidArgument("recon_loss: length mismatch");
  return (x - x_prime).norm();
}

double total_loss(double latent, double recon) { return latent + recon; }

VaeModel init_vae(const Standardizer& features, const VaeTrainConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = static_cast<int>(features.dim());
  VaeModel model;
  model.latent_dim = cfg.latent_dim;
  model.features = features;

  std::vector<int> enc_dims{d};
  enc_dims.insert(enc_dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
  enc_dims.push_back(2 * cfg.latent_dim);
  std::vector<int> dec_dims{cfg.latent_dim};
  dec_dims.insert(dec_dims.end(), cfg.hidden_dims.rbegin(), cfg.hidden_dims.rend());
  dec_dims.push_back(d);

  model.encoder = build_mlp(enc_dims, rng);
  model.decoder = build_mlp(dec_dims, rng);
  return model;
}

double sample_loss(const VaeModel& model, const Eigen::VectorXd& x_std,
                   const Eigen::VectorXd& eps, SampleGradients* grads) {
  if (x_std.size() != model.feature_dim()) throw DataError("sample_loss: dimension mismatch");
  if (eps.size() != model.latent_dim) throw InvalidArgument("sample_loss: eps length mismatch");
  if (grads == nullptr) return batch_loss(model, x_std, eps, nullptr, nullptr);
  return batch_loss(model, x_std, eps, &grads->encoder, &grads->decoder);
}

VaeTrainResult train_vae(const Eigen::MatrixXd& instances, const VaeTrainConfig& cfg,
                         const BatchOrder& order) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(instances.cols());
  if (n < 2) throw InvalidArgument("train_vae: need at least 2 instances");
  if (!instances.allFinite()) throw DataError("train_vae: non-finite feature value");

  Rng rng(cfg.seed);
  VaeTrainResult result;
  result.model = init_vae(Standardizer::fit(instances), cfg, rng);
  VaeModel& model = result.model;
  const Eigen::MatrixXd data = model.features.apply_columns(instances);

  nn::AdamConfig adam_cfg;
  adam_cfg.learning_rate = cfg.learning_rate;
  nn::AdamState enc_state(adam_cfg), dec_state(adam_cfg);
  nn::Gradients enc_grads, dec_grads;

  std::vector<std::size_t> perm(n);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  Eigen::MatrixXd x_batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (order) {
      perm = order(epoch, n, rng);
      if (perm.size() != n) throw InvalidArgument("train_vae: batch order has wrong length");
    } else {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      shuffle(perm, rng);
    }
    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      x_batch.resize(data.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t i = 0; i < count; ++i) x_batch.col(i) = data.col(perm[start + i]);
      const Eigen::MatrixXd eps = draw_normal(rng, model.latent_dim, x_batch.cols());
      const double loss = batch_loss(model, x_batch, eps, &enc_grads, &dec_grads);
      if (!std::isfinite(loss)) {
        throw NumericalError("train_vae: non-finite loss in epoch " + std::to_string(epoch));
      }
      epoch_sum += loss * static_cast<double>(count);
      try {
        nn::adam_step(model.encoder, enc_grads, enc_state);
        nn::adam_step(model.decoder, dec_grads, dec_state);
      } catch (const NumericalError& e) {
        throw NumericalError("train_vae: epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    result.epoch_losses.push_back(epoch_sum / static_cast<double>(n));
  }
  return result;
}

double anomaly_score(const VaeModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd x_std = standardize(x, model);
  const Eigen::VectorXd head = nn::forward(model.encoder, x_std);
  const Eigen::VectorXd recon = nn::forward(model.decoder, head.head(model.latent_dim));
  return recon_loss(x_std, recon);
}

Eigen::VectorXd anomaly_scores(const VaeModel& model, const Eigen::MatrixXd& instances) {
  Eigen::VectorXd scores(instances.cols());
  for (Eigen::Index c = 0; c < instances.cols(); ++c) {
    scores[c] = anomaly_score(model, instances.col(c));
  }
  return scores;
}

}  // namespace vaemir::vae
