#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "vaemir/mir.hpp"
#include "vaemir/regressor.hpp"
#include "vaemir/vae.hpp"

// Expanding-window year splits, repeated-seed experiments and k-sweeps.
namespace vaemir::eval {

struct Split {
  std::set<int> train_years;
  int test_year = 0;
};
using SplitPlan = std::vector<Split>;

// One split per present year >= first_test_year; each trains on every
// strictly earlier present year. Throws InvalidArgument when first_test_year
// has no earlier data or no year qualifies as a test year.
SplitPlan build_splits(std::span<const int> years_present, int first_test_year);

// Sorted distinct years of the bags.
std::vector<int> years_of(std::span<const mir::Bag> bags);

// Throws DataError if a test-year bag id also occurs among that split's
// training bags, or if a training year is not strictly before the test year.
void check_no_leakage(const SplitPlan& plan, std::span<const mir::Bag> bags);

struct MethodSettings {
  regressor::RegressorTrainConfig bag_regressor;  // mean, vaemir, prime refits
  // Fits over every training instance (instance-MIR, the Prime-MIR
  // initialisation, cluster-MIR) see ~N times more samples per epoch.
  regressor::RegressorTrainConfig instance_regressor{.epochs = 10, .batch_size = 64};
  vae::VaeTrainConfig vae;
  int prime_max_iters = 20;
  int cluster_count = 5;
  mir::Aggregation instance_aggregation = mir::Aggregation::kMean;
};

struct ExperimentConfig {
  std::vector<mir::Method> methods;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::optional<int> k;
  MethodSettings settings;
  bool transductive = false;  // VAE also sees test-year instances (unlabeled)
  int threads = 1;
};

struct ResultRow {
  mir::Method method;
  int test_year = 0;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double r2 = 0.0;
  std::optional<int> k;
};

struct Prediction {
  mir::Method method;
  int test_year = 0;
  std::uint64_t seed = 0;
  std::string bag_id;
  double truth = 0.0;
  double predicted = 0.0;
};

struct YearSummary {
  mir::Method method;
  int test_year = 0;
  double mean_rmse = 0.0;
  double mean_r2 = 0.0;
};

struct MethodSummary {
  mir::Method method;
  double mean_rmse = 0.0;  // mean over test years of the per-year means
  double mean_r2 = 0.0;
};

struct EvalReport {
  std::vector<ResultRow> rows;  // method-major, then test year, then seed
  std::vector<YearSummary> per_year;
  std::vector<MethodSummary> average;
  std::vector<Prediction> predictions;
  std::vector<std::uint64_t> seeds;
  std::optional<int> k;
};

// Seeds an experiment cell derives for its VAE, regressors and k-means. They
// depend on (seed, test_year) only, never on the method.
struct CellSeeds {
  std::uint64_t vae;
  std::uint64_t regressor;
  std::uint64_t kmeans;
};
CellSeeds cell_seeds(std::uint64_t seed, int test_year);

EvalReport run_experiment(std::span<const mir::Bag> bags, const SplitPlan& plan,
                          const ExperimentConfig& cfg);

struct SweepConfig {
  std::vector<int> k_values;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  MethodSettings settings;
  bool transductive = false;
  int threads = 1;
};

struct SweepRow {
  int test_year = 0;
  int k = 0;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double r2 = 0.0;
};

struct SweepPoint {
  int test_year = 0;
  int k = 0;
  double mean_rmse = 0.0;
  double mean_r2 = 0.0;
};

struct BestK {
  int test_year = 0;
  int k = 0;
  double mean_r2 = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepPoint> curve;    // per test year, k ascending
  std::vector<SweepPoint> overall;  // mean over test years (test_year = 0)
  std::vector<BestK> best_k;        // per test year: max mean R^2, smallest k on ties
  BestK best_overall;
};

SweepResult sweep_k(std::span<const mir::Bag> bags, const SplitPlan& plan,
                    const SweepConfig& cfg);

// CSV: method,test_year,seed,rmse,r2,k
void write_report_csv(std::ostream& os, const EvalReport& report);
void write_predictions_csv(std::ostream& os, const EvalReport& report);
void write_report_json(std::ostream& os, const EvalReport& report);
// CSV: test_year,k,mean_rmse,mean_r2
void write_sweep_csv(std::ostream& os, const SweepResult& sweep);

}  // namespace vaemir::eval
