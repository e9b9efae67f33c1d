#include "vaemir/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vaemir/error.hpp"

namespace vaemir {

double invariant_mean(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("mean of an empty set");
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double hi = values.back();
  double offset = 0.0;
  for (double v : values) offset += v - lo;
  const double mean = lo + offset / static_cast<double>(values.size());
  return std::clamp(mean, lo, hi);
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return values[mid - 1] + 0.5 * (values[mid] - values[mid - 1]);
}

Eigen::VectorXd invariant_column_mean(const Eigen::MatrixXd& columns,
                                      std::span<const Eigen::Index> selected) {
  if (selected.empty()) throw InvalidArgument("mean of an empty selection");
  Eigen::VectorXd out(columns.rows());
  std::vector<double> buffer(selected.size());
  for (Eigen::Index r = 0; r < columns.rows(); ++r) {
    for (std::size_t i = 0; i < selected.size(); ++i) {
      buffer[i] = columns(r, selected[i]);
    }
    out[r] = invariant_mean(buffer);
  }
  return out;
}

Eigen::VectorXd invariant_column_mean(const Eigen::MatrixXd& columns) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(columns.cols()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return invariant_column_mean(columns, all);
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& data) {
  if (data.cols() == 0 || data.rows() == 0) {
    throw InvalidArgument("cannot standardize an empty data set");
  }
  Standardizer s;
  s.mean.resize(data.rows());
  s.std.resize(data.rows());
  std::vector<double> row(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) row[c] = data(r, c);
    const double m = invariant_mean(row);
    for (auto& v : row) v = (v - m) * (v - m);
    const double var = invariant_mean(row);
    s.mean[r] = m;
    s.std[r] = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

Standardizer Standardizer::fit(std::span<const double> values) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) row(0, i) = values[i];
  return fit(row);
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) {
    throw DataError("standardize: expected " + std::to_string(mean.size()) +
                    " features, got " + std::to_string(x.size()));
  }
  return ((x - mean).array() / std.array()).matrix();
}

Eigen::MatrixXd Standardizer::apply_columns(const Eigen::MatrixXd& data) const {
  if (data.rows() != mean.size()) {
    throw DataError("standardize: expected " + std::to_string(mean.size()) +
                    " features, got " + std::to_string(data.rows()));
  }
  return ((data.colwise() - mean).array().colwise() / std.array()).matrix();
}

Eigen::VectorXd Standardizer::invert(const Eigen::VectorXd& z) const {
  if (z.size() != mean.size()) {
    throw DataError("unstandardize: dimension mismatch");
  }
  return (z.array() * std.array() + mean.array()).matrix();
}

}  // namespace vaemir
