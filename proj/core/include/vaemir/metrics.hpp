#pragma once

#include <span>
#include <vector>

namespace vaemir {

// sqrt(mean((pred - truth)^2)). Throws InvalidArgument on empty or unequal
// inputs.
double rmse(std::span<const double> pred, std::span<const double> truth);

// 1 - SS_res / SS_tot. Needs at least two points and a non-constant truth.
double r2(std::span<const double> pred, std::span<const double> truth);

// Area under the ROC curve of `scores` against binary `positives` (higher
// score = more likely positive), i.e. the Mann-Whitney U statistic with ties
// counted as one half. Needs at least one positive and one negative.
double roc_auc(std::span<const double> scores, const std::vector<bool>& positives);

}  // namespace vaemir
