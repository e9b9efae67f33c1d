#include <benchmark/benchmark.h>

#include <vector>

#include <Eigen/Core>

#include "vaemir/kmeans.hpp"
#include "vaemir/mir.hpp"
#include "vaemir/nn.hpp"
#include "vaemir/rng.hpp"
#include "vaemir/vae.hpp"

using namespace vaemir;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

nn::Network encoder_like(Rng& rng) {
  const std::vector<int> dims = {16, 64, 32, 16};
  const std::vector<nn::Activation> acts = {nn::Activation::kRelu, nn::Activation::kRelu,
                                            nn::Activation::kIdentity};
  return nn::init_network(dims, acts, rng);
}

void BM_Forward(benchmark::State& state) {
  Rng rng(1);
  const auto net = encoder_like(rng);
  const Eigen::MatrixXd x = random_matrix(16, state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward_batch(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(64)->Arg(1024);

void BM_ForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const auto net = encoder_like(rng);
  const Eigen::MatrixXd x = random_matrix(16, state.range(0), 2);
  nn::Tape tape;
  for (auto _ : state) {
    const Eigen::MatrixXd y = nn::forward_batch(net, x, &tape);
    benchmark::DoNotOptimize(nn::backward(net, tape, y));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(64)->Arg(1024);

vae::VaeModel untrained_vae() {
  Rng rng(3);
  Standardizer features;
  features.mean = Eigen::VectorXd::Zero(16);
  features.std = Eigen::VectorXd::Ones(16);
  return vae::init_vae(features, vae::VaeTrainConfig{}, rng);
}

void BM_AnomalyScores(benchmark::State& state) {
  const auto model = untrained_vae();
  const Eigen::MatrixXd x = random_matrix(16, state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(vae::anomaly_scores(model, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AnomalyScores)->Arg(100)->Arg(10000);

void BM_VaePerSampleGradient(benchmark::State& state) {
  const auto model = untrained_vae();
  Rng rng(5);
  Eigen::VectorXd x(16), eps(model.latent_dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = rng.normal();
  vae::SampleGradients grads;
  for (auto _ : state) benchmark::DoNotOptimize(vae::sample_loss(model, x, eps, &grads));
}
BENCHMARK(BM_VaePerSampleGradient);

void BM_Prototype(benchmark::State& state) {
  mir::Bag bag;
  bag.bag_id = "b";
  bag.instances = random_matrix(16, 100, 6);
  const Eigen::VectorXd scores = random_matrix(100, 1, 7).col(0);
  const int k = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mir::vaemir_prototype(bag, scores, k));
}
BENCHMARK(BM_Prototype)->Arg(1)->Arg(20)->Arg(80)->Arg(100);

void BM_KMeans(benchmark::State& state) {
  const Eigen::MatrixXd points = random_matrix(16, state.range(0), 8);
  for (auto _ : state) {
    Rng rng(9);
    benchmark::DoNotOptimize(kmeans(points, 5, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
