#include "vaemir/synth.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "vaemir/error.hpp"
#include "vaemir/rng.hpp"
#include "vaemir/stats.hpp"

namespace vaemir::synth {

void SynthConfig::validate() const {
  if (n_bags_per_year < 1) throw InvalidArgument("synth: bags per year must be positive");
  if (first_year > last_year) throw InvalidArgument("synth: empty year range");
  if (instances_per_bag < 1) throw InvalidArgument("synth: instances per bag must be positive");
  if (feature_dim < 1) throw InvalidArgument("synth: feature_dim must be positive");
  if (signal_dim < 1) throw InvalidArgument("synth: signal_dim must be positive");
  if (!(contamination >= 0.0 && contamination < 1.0)) {
    throw InvalidArgument("synth: contamination must lie in [0, 1)");
  }
  if (contamination > 0.0 && instances_per_bag < 2) {
    throw InvalidArgument("synth: contaminated bags need at least 2 instances");
  }
  if (!(mixing > 0.0 && mixing <= 1.0)) throw InvalidArgument("synth: alpha must lie in (0, 1]");
  if (!(noise_sigma > 0.0)) throw InvalidArgument("synth: noise_sigma must be positive");
  if (!(background_scale >= 0.0)) throw InvalidArgument("synth: background_scale must be >= 0");
  if (!(label_noise >= 0.0)) throw InvalidArgument("synth: label_noise must be >= 0");
  if (!(nonlinearity_scale > 0.0)) throw InvalidArgument("synth: nonlinearity_scale must be > 0");
  if (!std::isfinite(year_drift) || !std::isfinite(background_shift) ||
      !std::isfinite(nonlinearity)) {
    throw InvalidArgument("synth: parameters must be finite");
  }
}

namespace {

Eigen::VectorXd normal_vector(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

std::string bag_name(int year, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%d-%04d", year, index);
  return buf;
}

}  // namespace

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const int d = cfg.feature_dim;
  const int s = cfg.signal_dim;

  SynthDataset out;
  GroundTruth& truth = out.truth;
  Rng structure(derive_seed(cfg.seed, 0));
  truth.mixing_matrix.resize(d, s);
  const double a_scale = 1.0 / std::sqrt(static_cast<double>(s));
  for (int c = 0; c < s; ++c) {
    for (int r = 0; r < d; ++r) truth.mixing_matrix(r, c) = a_scale * structure.normal();
  }
  truth.coefficients = normal_vector(structure, s);
  truth.coefficients /= truth.coefficients.norm();
  truth.background_mean = cfg.background_shift * normal_vector(structure, d);

  const int total_bags = cfg.n_bags_per_year * cfg.year_count();
  truth.signals.resize(s, total_bags);
  out.bags.reserve(static_cast<std::size_t>(total_bags));

  std::size_t flagged = 0;
  int global = 0;
  for (int year = cfg.first_year; year <= cfg.last_year; ++year) {
    const double drift = cfg.year_drift * (year - cfg.first_year);
    for (int i = 0; i < cfg.n_bags_per_year; ++i, ++global) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(global) + 1));
      const Eigen::VectorXd signal =
          (normal_vector(rng, s).array() + drift).matrix();
      truth.signals.col(global) = signal;
      const Eigen::VectorXd center = truth.mixing_matrix * signal;

      mir::Bag bag;
      bag.bag_id = bag_name(year, i);
      bag.year = year;
      bag.instances.resize(d, cfg.instances_per_bag);
      std::vector<bool> flags(static_cast<std::size_t>(cfg.instances_per_bag), false);
      for (int n = 0; n < cfg.instances_per_bag; ++n) {
        const bool mixed = cfg.contamination > 0.0 && rng.bernoulli(cfg.contamination);
        Eigen::VectorXd pure = center + cfg.noise_sigma * normal_vector(rng, d);
        if (mixed) {
          const Eigen::VectorXd background =
              truth.background_mean + cfg.background_scale * normal_vector(rng, d);
          pure = cfg.mixing * pure + (1.0 - cfg.mixing) * background;
          flags[static_cast<std::size_t>(n)] = true;
          ++flagged;
        }
        bag.instances.col(n) = pure;
      }
      const double linear = truth.coefficients.dot(signal);
      bag.label = linear + cfg.nonlinearity * linear * linear / cfg.nonlinearity_scale +
                  cfg.label_noise * rng.normal();
      bag.anomaly_flags = std::move(flags);
      out.bags.push_back(std::move(bag));
    }
  }
  truth.flag_rate = static_cast<double>(flagged) /
                    (static_cast<double>(total_bags) * cfg.instances_per_bag);
  return out;
}

Eigen::VectorXd oracle_prototype(const mir::Bag& bag) {
  if (!bag.anomaly_flags) throw DataError("bag '" + bag.bag_id + "' carries no anomaly flags");
  std::vector<Eigen::Index> inliers;
  for (Eigen::Index i = 0; i < bag.size(); ++i) {
    if (!(*bag.anomaly_flags)[static_cast<std::size_t>(i)]) inliers.push_back(i);
  }
  if (inliers.empty()) throw DataError("bag '" + bag.bag_id + "' has no inlier instances");
  return invariant_column_mean(bag.instances, inliers);
}

}  // namespace vaemir::synth
