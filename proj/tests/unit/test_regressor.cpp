#include <gtest/gtest.h>

#include <cmath>

#include "finite_difference.hpp"
#include "vaemir/error.hpp"
#include "vaemir/regressor.hpp"

using namespace vaemir;
using regressor::RegressorTrainConfig;

namespace {

RegressorTrainConfig quick(int epochs = 100, std::uint64_t seed = 1) {
  RegressorTrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Regressor, ConstantFunction) {
  const Eigen::MatrixXd x = Eigen::VectorXd::Constant(3, 0.7).replicate(1, 20);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 7.0);
  const auto fit = regressor::fit(x, y, quick(50));
  EXPECT_NEAR(regressor::predict(fit.model, x.col(0)), 7.0, 0.05);
}

TEST(Regressor, LinearFunction) {
  Rng rng(4);
  Eigen::MatrixXd x(1, 200);
  Eigen::VectorXd y(200);
  for (int i = 0; i < 200; ++i) {
    x(0, i) = rng.uniform(-1.0, 1.0);
    y[i] = 2.0 * x(0, i) + 1.0;
  }
  const auto fit = regressor::fit(x, y, quick(200));
  EXPECT_LE(fit.final_mse, fit.initial_mse);
  double sq = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = -1.0 + 2.0 * (i + 0.5) / 100.0;
    const double e = regressor::predict(fit.model, Eigen::VectorXd::Constant(1, t)) - (2.0 * t + 1.0);
    sq += e * e;
  }
  EXPECT_LT(std::sqrt(sq / 100.0), 0.1);
}

TEST(Regressor, IdentityMidpoint) {
  Eigen::MatrixXd x(1, 101);
  Eigen::VectorXd y(101);
  for (int i = 0; i <= 100; ++i) x(0, i) = y[i] = i / 100.0;
  const auto fit = regressor::fit(x, y, quick(100));
  const double p = regressor::predict(fit.model, Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_GE(p, 0.3);
  EXPECT_LE(p, 0.7);
  EXPECT_EQ(p, regressor::predict(fit.model, Eigen::VectorXd::Constant(1, 0.5)));
  EXPECT_TRUE(std::isfinite(regressor::predict(fit.model, Eigen::VectorXd::Constant(1, 1e6))));
}

TEST(Regressor, DeterministicGivenSeed) {
  Rng rng(2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 40);
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    for (int d = 0; d < 3; ++d) x(d, i) = rng.normal();
    y[i] = x(0, i) - x(2, i);
  }
  const auto a = regressor::fit(x, y, quick(20, 5));
  const auto b = regressor::fit(x, y, quick(20, 5));
  EXPECT_TRUE(a.model.network == b.model.network);
  const auto c = regressor::fit(x, y, quick(20, 6));
  EXPECT_FALSE(a.model.network == c.model.network);
}

TEST(Regressor, TargetAffineMapCarriesThrough) {
  Rng rng(12);
  Eigen::MatrixXd x(2, 60);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    x(0, i) = rng.normal();
    x(1, i) = rng.normal();
    y[i] = std::sin(x(0, i)) + 0.5 * x(1, i);
  }
  const double c = 3.5, d = -120.0;
  const Eigen::VectorXd scaled = (c * y.array() + d).matrix();
  const auto a = regressor::fit(x, y, quick(30));
  const auto b = regressor::fit(x, scaled, quick(30));
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd probe = x.col(i);
    EXPECT_NEAR(regressor::predict(b.model, probe), c * regressor::predict(a.model, probe) + d, 1e-6);
  }
}

TEST(Regressor, MseGradientMatchesFiniteDifferences) {
  Rng rng(19);
  const std::vector<int> dims = {3, 6, 4, 1};
  const std::vector<nn::Activation> acts = {nn::Activation::kRelu, nn::Activation::kRelu,
                                            nn::Activation::kIdentity};
  auto net = nn::init_network(dims, acts, rng);
  Eigen::MatrixXd x(3, 5);
  Eigen::RowVectorXd y(5);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.normal();
  auto mse = [&]() { return (nn::forward_batch(net, x).row(0) - y).squaredNorm() / 5.0; };
  nn::Tape tape;
  const Eigen::RowVectorXd diff = nn::forward_batch(net, x, &tape).row(0) - y;
  const auto g = nn::backward(net, tape, diff * (2.0 / 5.0));
  EXPECT_LT(oracle::network_gradient_error(net, g, mse), 1e-4);
}

TEST(Regressor, RejectsBadInput) {
  EXPECT_THROW(regressor::fit(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(1), quick()),
               InvalidArgument);
  EXPECT_THROW(regressor::fit(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2), quick()),
               InvalidArgument);
  EXPECT_THROW(regressor::fit(Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(3), quick(0)),
               InvalidArgument);
  const auto fit = regressor::fit(Eigen::MatrixXd::Identity(2, 3), Eigen::VectorXd::LinSpaced(3, 0, 1), quick(1));
  EXPECT_THROW(regressor::predict(fit.model, Eigen::VectorXd::Zero(3)), DataError);
}
