#include <gtest/gtest.h>

#include <vector>

#include "finite_difference.hpp"
#include "vaemir/error.hpp"
#include "vaemir/nn.hpp"

using namespace vaemir;
using nn::Activation;

namespace {

nn::Network single_layer(Eigen::MatrixXd w, Eigen::VectorXd b, Activation a) {
  return nn::Network({nn::DenseLayer{std::move(w), std::move(b), a}});
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

nn::Network random_network(Rng& rng) {
  const int depth = 1 + static_cast<int>(rng.uniform_index(3));
  std::vector<int> dims;
  std::vector<Activation> acts;
  for (int i = 0; i <= depth; ++i) dims.push_back(1 + static_cast<int>(rng.uniform_index(8)));
  for (int i = 0; i < depth; ++i) acts.push_back(i + 1 < depth ? Activation::kRelu : Activation::kIdentity);
  nn::Network net = nn::init_network(dims, acts, rng);
  // Non-zero biases so every code path is exercised.
  for (std::size_t l = 0; l < net.depth(); ++l) {
    for (Eigen::Index i = 0; i < net.layer(l).biases.size(); ++i) net.layer(l).biases[i] = rng.normal(0.0, 0.3);
  }
  return net;
}

}  // namespace

TEST(Forward, HandEvaluatedExamples) {
  Eigen::MatrixXd eye(2, 2);
  eye << 1, 0, 0, 1;
  EXPECT_EQ(nn::forward(single_layer(eye, vec({0, 0}), Activation::kIdentity), vec({3, 4})), vec({3, 4}));

  Eigen::MatrixXd w(2, 1);
  w << 1, -1;
  EXPECT_EQ(nn::forward(single_layer(w, vec({0, 0}), Activation::kRelu), vec({2})), vec({2, 0}));

  Eigen::MatrixXd row(1, 2);
  row << 2, 0;
  EXPECT_EQ(nn::forward(single_layer(row, vec({1}), Activation::kIdentity), vec({3, 5})), vec({7}));
}

TEST(Forward, DimensionMismatchNamesLayer) {
  Eigen::MatrixXd row(1, 2);
  row << 2, 0;
  const auto net = single_layer(row, vec({1}), Activation::kIdentity);
  try {
    nn::forward(net, vec({1, 2, 3}));
    FAIL() << "expected a throw";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(Network, RejectsInconsistentLayers) {
  std::vector<nn::DenseLayer> layers = {
      {Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3), Activation::kRelu},
      {Eigen::MatrixXd::Zero(1, 4), Eigen::VectorXd::Zero(1), Activation::kIdentity}};
  EXPECT_THROW(nn::Network{layers}, InvalidArgument);
  layers[1].weights = Eigen::MatrixXd::Zero(1, 3);
  layers[1].biases = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(nn::Network{layers}, InvalidArgument);
}

TEST(Backward, ScalarIdentityLayer) {
  auto net = single_layer(Eigen::MatrixXd::Constant(1, 1, 1.5), vec({0.25}), Activation::kIdentity);
  nn::Tape tape;
  nn::forward_batch(net, Eigen::MatrixXd::Constant(1, 1, 3.0), &tape);
  const auto g = nn::backward(net, tape, Eigen::MatrixXd::Constant(1, 1, 1.0));
  EXPECT_EQ(g.layers[0].weights(0, 0), 3.0);
  EXPECT_EQ(g.layers[0].biases[0], 1.0);
  EXPECT_EQ(g.input(0, 0), 1.5);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  auto net = random_network(rng);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(net.input_dim(), 4);
  nn::Tape tape;
  const Eigen::MatrixXd y = nn::forward_batch(net, x, &tape);
  const auto g = nn::backward(net, tape, Eigen::MatrixXd::Zero(y.rows(), y.cols()));
  for (const auto& l : g.layers) {
    EXPECT_EQ(l.weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.biases.cwiseAbs().maxCoeff(), 0.0);
  }
  EXPECT_EQ(g.input.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Backward, RequiresRecordedForward) {
  Rng rng(5);
  auto net = random_network(rng);
  nn::Tape tape;
  EXPECT_THROW(nn::backward(net, tape, Eigen::MatrixXd::Zero(net.output_dim(), 1)), InvalidArgument);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNetworks) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    auto net = random_network(rng);
    const Eigen::Index batch = 3;
    Eigen::MatrixXd x(net.input_dim(), batch);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::MatrixXd c(net.output_dim(), batch);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();

    // Scalar loss: 0.5 * sum((y - c)^2).
    auto loss = [&]() { return 0.5 * (nn::forward_batch(net, x) - c).squaredNorm(); };
    nn::Tape tape;
    const Eigen::MatrixXd y = nn::forward_batch(net, x, &tape);
    const auto g = nn::backward(net, tape, y - c);

    EXPECT_LT(oracle::network_gradient_error(net, g, loss), 1e-4) << "trial " << trial;
    const Eigen::MatrixXd dx = oracle::central_difference(x, loss);
    EXPECT_LT(oracle::max_relative_error(g.input, dx), 1e-4) << "trial " << trial;
  }
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  Rng rng(6);
  auto net = random_network(rng);
  const auto before = net;
  nn::Gradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.out_dim(), l.in_dim()), Eigen::VectorXd::Zero(l.out_dim())});
  }
  nn::AdamState state;
  nn::adam_step(net, g, state);
  EXPECT_TRUE(net == before);
  EXPECT_EQ(state.step_count(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto net = single_layer(Eigen::MatrixXd::Zero(1, 1), vec({0}), Activation::kIdentity);
  nn::Gradients g;
  g.layers.push_back({Eigen::MatrixXd::Constant(1, 1, 1.0), vec({0})});
  nn::AdamState state(nn::AdamConfig{.learning_rate = 0.1});
  nn::adam_step(net, g, state);
  EXPECT_NEAR(net.layer(0).weights(0, 0), -0.1, 1e-6);
  EXPECT_EQ(net.layer(0).biases[0], 0.0);
}

TEST(Adam, Deterministic) {
  Rng rng(12);
  auto a = random_network(rng);
  auto b = a;
  nn::Gradients g;
  for (const auto& l : a.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Random(l.out_dim(), l.in_dim()), Eigen::VectorXd::Random(l.out_dim())});
  }
  nn::AdamState sa, sb;
  for (int i = 0; i < 3; ++i) {
    nn::adam_step(a, g, sa);
    nn::adam_step(b, g, sb);
  }
  EXPECT_TRUE(a == b);
}

TEST(Adam, RejectsShapeMismatchAndBadConfig) {
  auto net = single_layer(Eigen::MatrixXd::Zero(1, 2), vec({0}), Activation::kIdentity);
  nn::Gradients g;
  g.layers.push_back({Eigen::MatrixXd::Zero(1, 3), vec({0})});
  nn::AdamState state;
  EXPECT_THROW(nn::adam_step(net, g, state), InvalidArgument);
  EXPECT_THROW(nn::AdamConfig{.beta1 = 1.0}.validate(), InvalidArgument);
  EXPECT_THROW(nn::AdamConfig{.epsilon = 0.0}.validate(), InvalidArgument);
}

TEST(Init, GlorotBoundsZeroBiasesDeterminism) {
  const std::vector<int> dims = {4, 4};
  const std::vector<Activation> acts = {Activation::kIdentity};
  Rng r1(42), r2(42);
  const auto a = nn::init_network(dims, acts, r1);
  const auto b = nn::init_network(dims, acts, r2);
  EXPECT_TRUE(a == b);
  EXPECT_LE(a.layer(0).weights.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 8.0));
  EXPECT_EQ(a.layer(0).biases.cwiseAbs().maxCoeff(), 0.0);

  const std::vector<int> small = {2, 3};
  Rng r3(42), r4(42);
  EXPECT_TRUE(nn::init_network(small, acts, r3) == nn::init_network(small, acts, r4));

  Rng r5(1);
  EXPECT_THROW(nn::init_network(std::vector<int>{}, std::vector<Activation>{}, r5), InvalidArgument);
  EXPECT_THROW(nn::init_network(std::vector<int>{3}, std::vector<Activation>{}, r5), InvalidArgument);
}

TEST(Activation, NamesRoundTrip) {
  EXPECT_EQ(nn::activation_from_string(nn::to_string(Activation::kRelu)), Activation::kRelu);
  EXPECT_EQ(nn::activation_from_string("identity"), Activation::kIdentity);
  EXPECT_THROW(nn::activation_from_string("tanh"), DataError);
}
