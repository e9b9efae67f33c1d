#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "vaemir/rng.hpp"

// Dense feed-forward networks with exact backpropagation and Adam. Batches are
// stored column-major: one sample per column.
namespace vaemir::nn {

enum class Activation { kRelu, kIdentity };

std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd biases;   // out_dim
  Activation activation = Activation::kIdentity;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

class Network {
 public:
  Network() = default;
  // Throws InvalidArgument if any layer is empty, biases are mis-sized, or
  // adjacent layers disagree on dimensions.
  explicit Network(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t depth() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t parameter_count() const;

  // Mutable access for optimizers and gradient checks. Shapes must not change.
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }

  bool all_finite() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::vector<DenseLayer> layers_;
};

// Per-layer inputs and outputs recorded by forward_batch for backward().
struct Tape {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> outputs;
  bool empty() const { return inputs.empty(); }
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};

// Gradients of a scalar loss: one entry per layer plus the gradient with
// respect to the network input (one column per sample).
struct Gradients {
  std::vector<LayerGradient> layers;
  Eigen::MatrixXd input;
};

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);

// Batched forward pass. When `tape` is non-null it is overwritten with the
// activations backward() needs.
Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& batch,
                              Tape* tape = nullptr);

// Chain rule through the recorded pass. `upstream` is dLoss/dOutput with the
// same shape as the forward output. Parameter gradients are summed over the
// batch columns; callers that want a batch mean scale `upstream` by 1/B.
Gradients backward(const Network& net, const Tape& tape,
                   const Eigen::MatrixXd& upstream);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

class AdamState {
 public:
  explicit AdamState(AdamConfig config = {});

  const AdamConfig& config() const { return config_; }
  std::int64_t step_count() const { return step_count_; }

 private:
  friend void adam_step(Network& net, const Gradients& grads, AdamState& state);

  AdamConfig config_;
  std::int64_t step_count_ = 0;
  std::vector<LayerGradient> first_moment_;
  std::vector<LayerGradient> second_moment_;
};

// One bias-corrected Adam update. Throws InvalidArgument on a shape mismatch
// and NumericalError if a parameter leaves the finite range.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

// Glorot-uniform weights, zero biases. `layer_dims` lists the input width
// followed by each layer's output width; one activation per layer.
Network init_network(std::span<const int> layer_dims,
                     std::span<const Activation> activations, Rng& rng);

}  // namespace vaemir::nn
