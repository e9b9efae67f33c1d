#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace vaemir {

// Arithmetic mean that does not depend on the order of `values`: the values
// are sorted and accumulated as offsets from the minimum. A constant input
// returns that constant exactly, and the result is clamped to [min, max].
double invariant_mean(std::vector<double> values);

double median(std::vector<double> values);

// Componentwise invariant_mean over the selected columns of `columns`.
Eigen::VectorXd invariant_column_mean(const Eigen::MatrixXd& columns,
                                      std::span<const Eigen::Index> selected);
Eigen::VectorXd invariant_column_mean(const Eigen::MatrixXd& columns);

// Per-feature affine standardization (x - mean) / std.
struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  // Population statistics of the columns of `data` (features x samples),
  // computed order-invariantly; std floored at kStdFloor.
  static Standardizer fit(const Eigen::MatrixXd& data);
  static Standardizer fit(std::span<const double> values);

  Eigen::Index dim() const { return mean.size(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& data) const;
  Eigen::VectorXd invert(const Eigen::VectorXd& z) const;
};

}  // namespace vaemir
