#include "vaemir/nn.hpp"

#include <cmath>
#include <string>

#include "vaemir/error.hpp"

namespace vaemir::nn {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw DataError("unknown activation '" + std::string(name) + "'");
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.in_dim() < 1 || l.out_dim() < 1) {
      throw InvalidArgument("layer " + std::to_string(i) +
                            ": dimensions must be at least 1");
    }
    if (l.biases.size() != l.out_dim()) {
      throw InvalidArgument("layer " + std::to_string(i) +
                            ": bias length does not match out_dim");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw InvalidArgument("layer " + std::to_string(i) + ": in_dim " +
                            std::to_string(l.in_dim()) +
                            " does not match previous out_dim " +
                            std::to_string(layers_[i - 1].out_dim()));
    }
  }
}

Eigen::Index Network::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in_dim();
}

Eigen::Index Network::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out_dim();
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  }
  return n;
}

bool Network::all_finite() const {
  for (const auto& l : layers_) {
    if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
  }
  return true;
}

bool operator==(const Network& a, const Network& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() || x.weights != y.weights ||
        x.biases != y.biases) {
      return false;
    }
  }
  return true;
}

namespace {

void apply_activation(Activation activation, Eigen::MatrixXd& values) {
  if (activation == Activation::kRelu) values = values.cwiseMax(0.0);
}

void check_input(const Network& net, Eigen::Index rows) {
  if (net.empty()) throw InvalidArgument("forward: network has no layers");
  if (rows != net.input_dim()) {
    throw DataError("forward: layer 0 expects input of size " +
                    std::to_string(net.input_dim()) + ", got " +
                    std::to_string(rows));
  }
}

}  // namespace

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  check_input(net, x.size());
  Eigen::VectorXd h = x;
  for (const auto& layer : net.layers()) {
    Eigen::VectorXd next = layer.weights * h + layer.biases;
    if (layer.activation == Activation::kRelu) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& batch,
                              Tape* tape) {
  check_input(net, batch.rows());
  if (tape != nullptr) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  Eigen::MatrixXd h = batch;
  for (const auto& layer : net.layers()) {
    Eigen::MatrixXd next = layer.weights * h;
    next.colwise() += layer.biases;
    apply_activation(layer.activation, next);
    if (tape != nullptr) {
      tape->inputs.push_back(std::move(h));
      tape->outputs.push_back(next);
    }
    h = std::move(next);
  }
  return h;
}

Gradients backward(const Network& net, const Tape& tape,
                   const Eigen::MatrixXd& upstream) {
  if (tape.empty()) {
    throw InvalidArgument("backward called before a recorded forward pass");
  }
  if (tape.inputs.size() != net.depth()) {
    throw InvalidArgument("backward: tape was recorded on a different network");
  }
  const auto& last = tape.outputs.back();
  if (upstream.rows() != last.rows() || upstream.cols() != last.cols()) {
    throw InvalidArgument("backward: upstream gradient shape does not match "
                          "the network output");
  }

  Gradients grads;
  grads.layers.resize(net.depth());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t i = net.depth(); i-- > 0;) {
    const auto& layer = net.layer(i);
    if (layer.activation == Activation::kRelu) {
      delta = (tape.outputs[i].array() > 0.0).select(delta, 0.0);
    }
    grads.layers[i].weights = delta * tape.inputs[i].transpose();
    grads.layers[i].biases = delta.rowwise().sum();
    delta = layer.weights.transpose() * delta;
  }
  grads.input = std::move(delta);
  return grads;
}

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("adam: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgument("adam: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgument("adam: beta2 must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("adam: epsilon must be > 0");
}

AdamState::AdamState(AdamConfig config) : config_(config) { config_.validate(); }

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  if (grads.layers.size() != net.depth()) {
    throw InvalidArgument("adam_step: gradient layer count does not match network");
  }
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& l = net.layer(i);
    const auto& g = grads.layers[i];
    if (g.weights.rows() != l.weights.rows() || g.weights.cols() != l.weights.cols() ||
        g.biases.size() != l.biases.size()) {
      throw InvalidArgument("adam_step: gradient shape mismatch at layer " +
                            std::to_string(i));
    }
  }
  if (state.first_moment_.empty()) {
    for (const auto& l : net.layers()) {
      LayerGradient zero{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
                         Eigen::VectorXd::Zero(l.biases.size())};
      state.first_moment_.push_back(zero);
      state.second_moment_.push_back(std::move(zero));
    }
  } else if (state.first_moment_.size() != net.depth()) {
    throw InvalidArgument("adam_step: optimizer state belongs to another network");
  }

  const auto& cfg = state.config_;
  ++state.step_count_;
  const double t = static_cast<double>(state.step_count_);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    param.array() -= cfg.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + cfg.epsilon);
  };

  for (std::size_t i = 0; i < net.depth(); ++i) {
    auto& layer = net.layer(i);
    auto& m = state.first_moment_[i];
    auto& v = state.second_moment_[i];
    update(layer.weights, m.weights, v.weights, grads.layers[i].weights);
    update(layer.biases, m.biases, v.biases, grads.layers[i].biases);
    if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
      throw NumericalError("adam_step: non-finite parameter in layer " +
                           std::to_string(i) + " at step " +
                           std::to_string(state.step_count_));
    }
  }
}

Network init_network(std::span<const int> layer_dims,
                     std::span<const Activation> activations, Rng& rng) {
  if (layer_dims.size() < 2) {
    throw InvalidArgument("init_network: need an input width and at least one layer");
  }
  if (activations.size() != layer_dims.size() - 1) {
    throw InvalidArgument("init_network: one activation per layer required");
  }
  std::vector<DenseLayer> layers;
  layers.reserve(activations.size());
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const int in = layer_dims[i];
    const int out = layer_dims[i + 1];
    if (in < 1 || out < 1) {
      throw InvalidArgument("init_network: layer widths must be at least 1");
    }
    const double a = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayer layer;
    layer.weights.resize(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-a, a);
    }
    layer.biases = Eigen::VectorXd::Zero(out);
    layer.activation = activations[i];
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

}  // namespace vaemir::nn
