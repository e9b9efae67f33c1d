#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vaemir/mir.hpp"

// Synthetic county-like datasets with known mixed-pixel contamination.
//
// Each bag b in year t has a latent signal s_b ~ N(m_t, I), where m_t moves
// by year_drift per year. A pure instance is A s_b plus isotropic noise for a
// fixed random map A. With probability `contamination` an instance is a mixed
// pixel: alpha * (pure draw) + (1 - alpha) * (background draw), the background
// coming from a fixed shifted, wider distribution. Labels depend only on s_b.
namespace vaemir::synth {

struct SynthConfig {
  int n_bags_per_year = 100;
  int first_year = 2008;
  int last_year = 2021;
  int instances_per_bag = 100;
  int feature_dim = 16;
  int signal_dim = 4;
  double contamination = 0.2;
  double mixing = 0.6;  // alpha, weight of the crop component in a mixed pixel
  double noise_sigma = 0.5;
  double year_drift = 0.1;
  double background_shift = 3.0;
  double background_scale = 4.0;
  double label_noise = 0.2;
  double nonlinearity = 0.5;
  double nonlinearity_scale = 4.0;
  std::uint64_t seed = 1;

  int year_count() const { return last_year - first_year + 1; }
  void validate() const;
};

struct GroundTruth {
  Eigen::MatrixXd signals;         // signal_dim x bags
  Eigen::MatrixXd mixing_matrix;   // feature_dim x signal_dim (A)
  Eigen::VectorXd coefficients;    // label weights w, unit norm
  Eigen::VectorXd background_mean;
  double flag_rate = 0.0;          // flagged instances / all instances
};

struct SynthDataset {
  std::vector<mir::Bag> bags;  // ordered by year, then bag index
  GroundTruth truth;
};

// Deterministic in the config; bag b draws from its own substream
// derive_seed(seed, b + 1).
SynthDataset generate(const SynthConfig& cfg);

// Mean of the bag's true inlier instances. Throws DataError when the bag has
// no flags or every instance is flagged.
Eigen::VectorXd oracle_prototype(const mir::Bag& bag);

}  // namespace vaemir::synth
