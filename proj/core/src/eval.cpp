#include "vaemir/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>

#include "json.hpp"
#include "vaemir/dataset_io.hpp"
#include "vaemir/error.hpp"
#include "vaemir/metrics.hpp"
#include "vaemir/rng.hpp"
#include "vaemir/stats.hpp"

namespace vaemir::eval {

SplitPlan build_splits(std::span<const int> years_present, int first_test_year) {
  std::vector<int> years(years_present.begin(), years_present.end());
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());
  if (years.empty() || years.front() >= first_test_year) {
    throw InvalidArgument("no training data precedes test year " +
                          std::to_string(first_test_year));
  }
  SplitPlan plan;
  for (int test : years) {
    if (test < first_test_year) continue;
    Split split;
    split.test_year = test;
    for (int y : years) {
      if (y < test) split.train_years.insert(y);
    }
    plan.push_back(std::move(split));
  }
  if (plan.empty()) {
    throw InvalidArgument("no data for test years from " + std::to_string(first_test_year));
  }
  return plan;
}

std::vector<int> years_of(std::span<const mir::Bag> bags) {
  std::set<int> years;
  for (const auto& bag : bags) years.insert(bag.year);
  return {years.begin(), years.end()};
}

void check_no_leakage(const SplitPlan& plan, std::span<const mir::Bag> bags) {
  for (const auto& split : plan) {
    if (split.train_years.empty()) {
      throw DataError("split for " + std::to_string(split.test_year) + " has no training years");
    }
    if (*split.train_years.rbegin() >= split.test_year) {
      throw DataError("split for " + std::to_string(split.test_year) +
                      " trains on a year that does not precede it");
    }
    std::unordered_set<std::string> train_ids;
    for (const auto& bag : bags) {
      if (split.train_years.count(bag.year)) train_ids.insert(bag.bag_id);
    }
    for (const auto& bag : bags) {
      if (bag.year == split.test_year && train_ids.count(bag.bag_id)) {
        throw DataError("bag '" + bag.bag_id + "' of test year " +
                        std::to_string(split.test_year) + " also appears in training data");
      }
    }
  }
}

CellSeeds cell_seeds(std::uint64_t seed, int test_year) {
  const std::uint64_t base = derive_seed(seed, static_cast<std::uint64_t>(test_year));
  return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3)};
}

namespace {

struct SplitData {
  int test_year = 0;
  std::vector<mir::Bag> train;
  std::vector<mir::Bag> test;
  Eigen::MatrixXd vae_instances;
  std::vector<double> truth;
};

Eigen::MatrixXd stack_instances(const std::vector<const mir::Bag*>& bags) {
  Eigen::Index total = 0;
  for (const auto* b : bags) total += b->size();
  Eigen::MatrixXd out(bags.front()->dim(), total);
  Eigen::Index col = 0;
  for (const auto* b : bags) {
    out.middleCols(col, b->size()) = b->instances;
    col += b->size();
  }
  return out;
}

std::vector<SplitData> materialize(std::span<const mir::Bag> bags, const SplitPlan& plan,
                                   bool transductive) {
  mir::validate_bags(bags);
  check_no_leakage(plan, bags);
  std::vector<SplitData> out;
  for (const auto& split : plan) {
    SplitData data;
    data.test_year = split.test_year;
    for (const auto& bag : bags) {
      if (split.train_years.count(bag.year)) data.train.push_back(bag);
      if (bag.year == split.test_year) data.test.push_back(bag);
    }
    if (data.train.size() < 2) {
      throw DataError("test year " + std::to_string(split.test_year) +
                      ": need at least 2 training bags");
    }
    if (data.test.empty()) {
      throw DataError("no bags for test year " + std::to_string(split.test_year));
    }
    mir::bag_labels(data.train);
    for (const auto& bag : data.test) {
      if (!bag.label) throw DataError("test bag '" + bag.bag_id + "' has no label");
      data.truth.push_back(*bag.label);
    }
    std::vector<const mir::Bag*> pool;
    for (const auto& b : data.train) pool.push_back(&b);
    if (transductive) {
      for (const auto& b : data.test) pool.push_back(&b);
    }
    data.vae_instances = stack_instances(pool);
    out.push_back(std::move(data));
  }
  return out;
}

struct ScoredSplit {
  std::vector<Eigen::VectorXd> train;
  std::vector<Eigen::VectorXd> test;
};

ScoredSplit score_split(const SplitData& data, const vae::VaeTrainConfig& base_cfg,
                        std::uint64_t seed) {
  vae::VaeTrainConfig cfg = base_cfg;
  cfg.seed = seed;
  const vae::VaeModel model = vae::train_vae(data.vae_instances, cfg).model;
  ScoredSplit scored;
  for (const auto& b : data.train) scored.train.push_back(vae::anomaly_scores(model, b.instances));
  for (const auto& b : data.test) scored.test.push_back(vae::anomaly_scores(model, b.instances));
  return scored;
}

regressor::RegressorTrainConfig seeded(regressor::RegressorTrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  return cfg;
}

std::vector<double> predict_method(mir::Method method, const SplitData& data,
                                   const MethodSettings& settings, const CellSeeds& seeds,
                                   const ScoredSplit* scored, int k) {
  std::vector<double> preds;
  preds.reserve(data.test.size());
  switch (method) {
    case mir::Method::kInstance: {
      const auto model = mir::instance_mir_fit(
          data.train, seeded(settings.instance_regressor, seeds.regressor),
          settings.instance_aggregation);
      for (const auto& b : data.test) preds.push_back(mir::instance_mir_predict(model, b));
      break;
    }
    case mir::Method::kMean: {
      const auto model = mir::mean_fit(data.train, seeded(settings.bag_regressor, seeds.regressor));
      for (const auto& b : data.test) preds.push_back(mir::mean_predict(model, b));
      break;
    }
    case mir::Method::kPrime: {
      mir::PrimeMirConfig cfg;
      cfg.instance_regressor = seeded(settings.instance_regressor, seeds.regressor);
      cfg.bag_regressor = seeded(settings.bag_regressor, seeds.regressor);
      cfg.max_iters = settings.prime_max_iters;
      const auto model = mir::prime_mir_fit(data.train, cfg);
      for (const auto& b : data.test) preds.push_back(mir::prime_mir_predict(model, b));
      break;
    }
    case mir::Method::kCluster: {
      mir::ClusterMirConfig cfg;
      cfg.n_clusters = settings.cluster_count;
      cfg.regressor = seeded(settings.instance_regressor, seeds.regressor);
      cfg.seed = seeds.kmeans;
      const auto model = mir::cluster_mir_fit(data.train, cfg);
      for (const auto& b : data.test) preds.push_back(mir::cluster_mir_predict(model, b));
      break;
    }
    case mir::Method::kVaemir: {
      const auto model = mir::vaemir_fit_scored(data.train, scored->train, k,
                                                seeded(settings.bag_regressor, seeds.regressor));
      for (std::size_t i = 0; i < data.test.size(); ++i) {
        preds.push_back(mir::vaemir_predict_scored(model, data.test[i], scored->test[i]));
      }
      break;
    }
  }
  return preds;
}

// Runs `task(i)` for i in [0, count) on up to `threads` workers. Results are
// written by index, so the outcome does not depend on scheduling. The first
// failing index's exception is rethrown.
template <typename Task>
void run_indexed(std::size_t count, int threads, Task&& task) {
  std::vector<std::exception_ptr> errors(count);
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int min_bag_size(std::span<const SplitData> splits) {
  Eigen::Index smallest = std::numeric_limits<Eigen::Index>::max();
  for (const auto& s : splits) {
    for (const auto& b : s.train) smallest = std::min(smallest, b.size());
    for (const auto& b : s.test) smallest = std::min(smallest, b.size());
  }
  return static_cast<int>(smallest);
}

}  // namespace

EvalReport run_experiment(std::span<const mir::Bag> bags, const SplitPlan& plan,
                          const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InvalidArgument("no methods selected");
  if (cfg.seeds.empty()) throw InvalidArgument("at least one seed is required");
  const bool wants_vae =
      std::find(cfg.methods.begin(), cfg.methods.end(), mir::Method::kVaemir) != cfg.methods.end();
  if (wants_vae && !cfg.k) throw InvalidArgument("method vaemir requires k");

  const std::vector<SplitData> splits = materialize(bags, plan, cfg.transductive);
  if (wants_vae) {
    const int limit = min_bag_size(splits);
    if (*cfg.k < 1 || *cfg.k > limit) {
      throw InvalidArgument("k = " + std::to_string(*cfg.k) + " outside [1, " +
                            std::to_string(limit) + "] (smallest bag)");
    }
    cfg.settings.vae.validate();
  }

  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_units = splits.size() * n_seeds;
  // unit -> method -> predictions
  std::vector<std::vector<std::vector<double>>> unit_preds(n_units);
  run_indexed(n_units, cfg.threads, [&](std::size_t u) {
    const SplitData& data = splits[u / n_seeds];
    const std::uint64_t seed = cfg.seeds[u % n_seeds];
    const CellSeeds seeds = cell_seeds(seed, data.test_year);
    std::optional<ScoredSplit> scored;
    if (wants_vae) scored = score_split(data, cfg.settings.vae, seeds.vae);
    for (mir::Method m : cfg.methods) {
      unit_preds[u].push_back(predict_method(m, data, cfg.settings, seeds,
                                             scored ? &*scored : nullptr, cfg.k.value_or(0)));
    }
  });

  EvalReport report;
  report.seeds = cfg.seeds;
  report.k = cfg.k;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    const mir::Method m = cfg.methods[mi];
    std::vector<double> year_rmses, year_r2s;
    for (std::size_t s = 0; s < splits.size(); ++s) {
      const SplitData& data = splits[s];
      std::vector<double> seed_rmse, seed_r2;
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const auto& preds = unit_preds[s * n_seeds + si][mi];
        ResultRow row{m, data.test_year, cfg.seeds[si], rmse(preds, data.truth),
                      r2(preds, data.truth), std::nullopt};
        if (m == mir::Method::kVaemir) row.k = cfg.k;
        seed_rmse.push_back(row.rmse);
        seed_r2.push_back(row.r2);
        report.rows.push_back(row);
        for (std::size_t b = 0; b < data.test.size(); ++b) {
          report.predictions.push_back(
              {m, data.test_year, cfg.seeds[si], data.test[b].bag_id, data.truth[b], preds[b]});
        }
      }
      const YearSummary summary{m, data.test_year, invariant_mean(std::move(seed_rmse)),
                                invariant_mean(std::move(seed_r2))};
      report.per_year.push_back(summary);
      year_rmses.push_back(summary.mean_rmse);
      year_r2s.push_back(summary.mean_r2);
    }
    report.average.push_back(
        {m, invariant_mean(std::move(year_rmses)), invariant_mean(std::move(year_r2s))});
  }
  return report;
}

SweepResult sweep_k(std::span<const mir::Bag> bags, const SplitPlan& plan,
                    const SweepConfig& cfg) {
  if (cfg.k_values.empty()) throw InvalidArgument("k sweep needs at least one k");
  if (cfg.seeds.empty()) throw InvalidArgument("at least one seed is required");
  cfg.settings.vae.validate();
  std::vector<int> ks = cfg.k_values;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const std::vector<SplitData> splits = materialize(bags, plan, cfg.transductive);
  const int limit = min_bag_size(splits);
  if (ks.front() < 1 || ks.back() > limit) {
    throw InvalidArgument("k values must lie in [1, " + std::to_string(limit) +
                          "] (smallest bag)");
  }

  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_units = splits.size() * n_seeds;
  std::vector<std::vector<std::pair<double, double>>> unit_scores(n_units);
  run_indexed(n_units, cfg.threads, [&](std::size_t u) {
    const SplitData& data = splits[u / n_seeds];
    const CellSeeds seeds = cell_seeds(cfg.seeds[u % n_seeds], data.test_year);
    const ScoredSplit scored = score_split(data, cfg.settings.vae, seeds.vae);
    for (int k : ks) {
      const auto preds =
          predict_method(mir::Method::kVaemir, data, cfg.settings, seeds, &scored, k);
      unit_scores[u].emplace_back(rmse(preds, data.truth), r2(preds, data.truth));
    }
  });

  SweepResult result;
  std::vector<std::vector<double>> overall_rmse(ks.size()), overall_r2(ks.size());
  for (std::size_t s = 0; s < splits.size(); ++s) {
    const int year = splits[s].test_year;
    BestK best{year, 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      std::vector<double> seed_rmse, seed_r2;
      for (std::size_t si = 0; si < n_seeds; ++si) {
        const auto [e, r] = unit_scores[s * n_seeds + si][ki];
        result.rows.push_back({year, ks[ki], cfg.seeds[si], e, r});
        seed_rmse.push_back(e);
        seed_r2.push_back(r);
      }
      SweepPoint point{year, ks[ki], invariant_mean(std::move(seed_rmse)),
                       invariant_mean(std::move(seed_r2))};
      result.curve.push_back(point);
      overall_rmse[ki].push_back(point.mean_rmse);
      overall_r2[ki].push_back(point.mean_r2);
      if (point.mean_r2 > best.mean_r2) best = {year, ks[ki], point.mean_r2};
    }
    result.best_k.push_back(best);
  }
  result.best_overall = {0, 0, -std::numeric_limits<double>::infinity()};
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    SweepPoint point{0, ks[ki], invariant_mean(overall_rmse[ki]), invariant_mean(overall_r2[ki])};
    result.overall.push_back(point);
    if (point.mean_r2 > result.best_overall.mean_r2) {
      result.best_overall = {0, ks[ki], point.mean_r2};
    }
  }
  return result;
}

void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "method,test_year,seed,rmse,r2,k\n";
  for (const auto& row : report.rows) {
    os << mir::to_string(row.method) << ',' << row.test_year << ',' << row.seed << ','
       << io::format_number(row.rmse) << ',' << io::format_number(row.r2) << ',';
    if (row.k) os << *row.k;
    os << '\n';
  }
}

void write_predictions_csv(std::ostream& os, const EvalReport& report) {
  os << "method,test_year,seed,bag_id,yield,predicted\n";
  for (const auto& p : report.predictions) {
    os << mir::to_string(p.method) << ',' << p.test_year << ',' << p.seed << ',' << p.bag_id
       << ',' << io::format_number(p.truth) << ',' << io::format_number(p.predicted) << '\n';
  }
}

void write_report_json(std::ostream& os, const EvalReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["seeds"] = report.seeds;
  j["k"] = report.k ? ordered_json(*report.k) : ordered_json(nullptr);
  ordered_json per_year = ordered_json::array();
  for (const auto& y : report.per_year) {
    per_year.push_back({{"method", std::string(mir::to_string(y.method))},
                        {"test_year", y.test_year},
                        {"mean_rmse", y.mean_rmse},
                        {"mean_r2", y.mean_r2}});
  }
  j["per_year"] = std::move(per_year);
  ordered_json average = ordered_json::array();
  for (const auto& a : report.average) {
    average.push_back({{"method", std::string(mir::to_string(a.method))},
                       {"mean_rmse", a.mean_rmse},
                       {"mean_r2", a.mean_r2}});
  }
  j["average"] = std::move(average);
  os << j.dump(2) << '\n';
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  os << "test_year,k,mean_rmse,mean_r2\n";
  for (const auto& p : sweep.curve) {
    os << p.test_year << ',' << p.k << ',' << io::format_number(p.mean_rmse) << ','
       << io::format_number(p.mean_r2) << '\n';
  }
}

}  // namespace vaemir::eval
