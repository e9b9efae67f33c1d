#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "vaemir/error.hpp"
#include "vaemir/eval.hpp"
#include "vaemir/synth.hpp"

using namespace vaemir;

namespace {

synth::SynthDataset tiny_dataset() {
  synth::SynthConfig sc;
  sc.n_bags_per_year = 15;
  sc.first_year = 2018;
  sc.last_year = 2020;
  sc.instances_per_bag = 10;
  sc.feature_dim = 4;
  sc.signal_dim = 2;
  return synth::generate(sc);
}

eval::MethodSettings fast_settings() {
  eval::MethodSettings s;
  s.bag_regressor.epochs = 20;
  s.bag_regressor.hidden_dims = {16, 8};
  s.instance_regressor.epochs = 2;
  s.instance_regressor.hidden_dims = {16, 8};
  s.vae.epochs = 2;
  s.vae.latent_dim = 2;
  s.vae.hidden_dims = {8, 4};
  s.prime_max_iters = 2;
  s.cluster_count = 2;
  return s;
}

}  // namespace

TEST(Splits, ExpandingWindow) {
  std::vector<int> years(14);
  std::iota(years.begin(), years.end(), 2008);
  const auto plan = eval::build_splits(years, 2016);
  ASSERT_EQ(plan.size(), 6u);
  EXPECT_EQ(plan[0].test_year, 2016);
  EXPECT_EQ(plan[0].train_years.size(), 8u);
  EXPECT_EQ(*plan[0].train_years.begin(), 2008);
  EXPECT_EQ(*plan[0].train_years.rbegin(), 2015);
  for (std::size_t i = 1; i < plan.size(); ++i) EXPECT_GT(plan[i].test_year, plan[i - 1].test_year);

  const auto small = eval::build_splits(std::vector<int>{1, 2}, 2);
  ASSERT_EQ(small.size(), 1u);
  EXPECT_EQ(small[0].train_years, std::set<int>{1});

  EXPECT_THROW(eval::build_splits(std::vector<int>{2016, 2017}, 2016), InvalidArgument);
  EXPECT_THROW(eval::build_splits(std::vector<int>{2016, 2017}, 2020), InvalidArgument);
}

TEST(Splits, LeakageGuard) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2019);
  EXPECT_NO_THROW(eval::check_no_leakage(plan, ds.bags));
  auto leaky = ds.bags;
  leaky.back().bag_id = leaky.front().bag_id;  // a test bag reusing a training id
  EXPECT_THROW(eval::check_no_leakage(plan, leaky), DataError);
  eval::SplitPlan bad = plan;
  bad[0].train_years.insert(bad[0].test_year);
  EXPECT_THROW(eval::check_no_leakage(bad, ds.bags), DataError);
}

TEST(CellSeeds, DependOnSeedAndYear) {
  const auto a = eval::cell_seeds(1, 2020);
  const auto b = eval::cell_seeds(1, 2020);
  EXPECT_EQ(a.vae, b.vae);
  EXPECT_NE(a.vae, eval::cell_seeds(1, 2021).vae);
  EXPECT_NE(a.vae, eval::cell_seeds(2, 2020).vae);
  EXPECT_NE(a.vae, a.regressor);
  EXPECT_NE(a.regressor, a.kmeans);
}

TEST(Experiment, NoiselessLinearLabelsFitWell) {
  synth::SynthConfig sc;
  sc.n_bags_per_year = 40;
  sc.first_year = 2018;
  sc.last_year = 2020;
  sc.instances_per_bag = 10;
  sc.feature_dim = 4;
  sc.contamination = 0.0;
  auto ds = synth::generate(sc);
  const Eigen::Vector4d w(1.0, -0.5, 0.25, 2.0);
  for (auto& b : ds.bags) b.label = w.dot(mir::mean_prototype(b).vector);
  eval::ExperimentConfig cfg;
  cfg.methods = {mir::Method::kMean};
  cfg.seeds = {1};
  cfg.settings.bag_regressor.epochs = 300;
  const auto report = eval::run_experiment(ds.bags, eval::build_splits(eval::years_of(ds.bags), 2020), cfg);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_GT(report.rows[0].r2, 0.95);
}

TEST(Experiment, AllMethodsDeterministicAndAggregated) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2019);
  eval::ExperimentConfig cfg;
  cfg.methods = {mir::Method::kInstance, mir::Method::kMean, mir::Method::kPrime,
                 mir::Method::kCluster, mir::Method::kVaemir};
  cfg.seeds = {1, 2};
  cfg.k = 5;
  cfg.settings = fast_settings();
  const auto a = eval::run_experiment(ds.bags, plan, cfg);
  cfg.threads = 3;
  const auto b = eval::run_experiment(ds.bags, plan, cfg);
  std::ostringstream sa, sb, ja, jb;
  eval::write_report_csv(sa, a);
  eval::write_report_csv(sb, b);
  eval::write_report_json(ja, a);
  eval::write_report_json(jb, b);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ja.str(), jb.str());

  ASSERT_EQ(a.rows.size(), 5u * 2u * 2u);
  for (const auto& row : a.rows) {
    EXPECT_GE(row.rmse, 0.0);
    EXPECT_LE(row.r2, 1.0);
  }
  for (const auto& y : a.per_year) {
    double sum = 0.0;
    for (const auto& row : a.rows) {
      if (row.method == y.method && row.test_year == y.test_year) sum += row.rmse;
    }
    EXPECT_NEAR(y.mean_rmse, sum / 2.0, 1e-9);
  }
  for (const auto& m : a.average) {
    double sum = 0.0;
    for (const auto& y : a.per_year) {
      if (y.method == m.method) sum += y.mean_r2;
    }
    EXPECT_NEAR(m.mean_r2, sum / 2.0, 1e-9);
  }
  EXPECT_EQ(a.predictions.size(), 5u * 2u * 2u * 15u);
  const std::string csv = sa.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,test_year,seed,rmse,r2,k");
  EXPECT_EQ(csv.back(), '\n');
}

TEST(Experiment, VaemirAtFullKIsMeanRegression) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2019);
  eval::ExperimentConfig cfg;
  cfg.methods = {mir::Method::kMean, mir::Method::kVaemir};
  cfg.seeds = {3, 4};
  cfg.k = 10;
  cfg.settings = fast_settings();
  const auto report = eval::run_experiment(ds.bags, plan, cfg);
  const std::size_t half = report.rows.size() / 2;
  for (std::size_t i = 0; i < half; ++i) {
    EXPECT_EQ(report.rows[i].rmse, report.rows[half + i].rmse);
    EXPECT_EQ(report.rows[i].r2, report.rows[half + i].r2);
  }
  const std::size_t hp = report.predictions.size() / 2;
  for (std::size_t i = 0; i < hp; ++i) {
    EXPECT_EQ(report.predictions[i].predicted, report.predictions[hp + i].predicted);
  }
}

TEST(Experiment, Errors) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2019);
  eval::ExperimentConfig cfg;
  cfg.settings = fast_settings();
  cfg.methods = {mir::Method::kVaemir};
  EXPECT_THROW(eval::run_experiment(ds.bags, plan, cfg), InvalidArgument);
  cfg.k = 11;
  EXPECT_THROW(eval::run_experiment(ds.bags, plan, cfg), InvalidArgument);
  cfg.methods = {};
  EXPECT_THROW(eval::run_experiment(ds.bags, plan, cfg), InvalidArgument);
  // A plan naming a year the data does not have.
  eval::SplitPlan missing = {{{2018}, 2025}};
  cfg.methods = {mir::Method::kMean};
  EXPECT_THROW(eval::run_experiment(ds.bags, missing, cfg), DataError);
}

TEST(Sweep, CurveShapeAndIdentities) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2019);
  eval::SweepConfig cfg;
  cfg.k_values = {10, 1, 5};
  cfg.seeds = {1, 2, 3};
  cfg.settings = fast_settings();
  const auto sweep = eval::sweep_k(ds.bags, plan, cfg);
  ASSERT_EQ(sweep.curve.size(), 2u * 3u);
  EXPECT_EQ(sweep.curve[0].k, 1);
  EXPECT_EQ(sweep.curve[2].k, 10);
  ASSERT_EQ(sweep.best_k.size(), 2u);
  for (const auto& best : sweep.best_k) {
    for (const auto& p : sweep.curve) {
      if (p.test_year == best.test_year) EXPECT_LE(p.mean_r2, best.mean_r2);
    }
  }

  // k = N reproduces Mean Regression with the same seeds.
  eval::ExperimentConfig mean_cfg;
  mean_cfg.methods = {mir::Method::kMean};
  mean_cfg.seeds = cfg.seeds;
  mean_cfg.settings = cfg.settings;
  const auto mean = eval::run_experiment(ds.bags, plan, mean_cfg);
  for (std::size_t y = 0; y < 2; ++y) {
    EXPECT_EQ(sweep.curve[y * 3 + 2].mean_rmse, mean.per_year[y].mean_rmse);
    EXPECT_EQ(sweep.curve[y * 3 + 2].mean_r2, mean.per_year[y].mean_r2);
  }

  // Permuting the seed list leaves the averaged curve unchanged.
  cfg.seeds = {3, 1, 2};
  const auto permuted = eval::sweep_k(ds.bags, plan, cfg);
  std::ostringstream a, b;
  eval::write_sweep_csv(a, sweep);
  eval::write_sweep_csv(b, permuted);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "test_year,k,mean_rmse,mean_r2");
}

TEST(Sweep, SingleKAndRange) {
  const auto ds = tiny_dataset();
  const auto plan = eval::build_splits(eval::years_of(ds.bags), 2020);
  eval::SweepConfig cfg;
  cfg.k_values = {4};
  cfg.seeds = {1};
  cfg.settings = fast_settings();
  const auto sweep = eval::sweep_k(ds.bags, plan, cfg);
  EXPECT_EQ(sweep.curve.size(), 1u);
  EXPECT_EQ(sweep.best_overall.k, 4);
  cfg.k_values = {0};
  EXPECT_THROW(eval::sweep_k(ds.bags, plan, cfg), InvalidArgument);
  cfg.k_values = {11};
  EXPECT_THROW(eval::sweep_k(ds.bags, plan, cfg), InvalidArgument);
}
