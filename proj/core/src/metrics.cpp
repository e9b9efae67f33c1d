#include "vaemir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "vaemir/error.hpp"

namespace vaemir {

namespace {

void check_pair(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw InvalidArgument("metric: length mismatch");
  if (pred.empty()) throw InvalidArgument("metric: empty input");
}

}  // namespace

double rmse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  double sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = truth[i] - pred[i];
    sq += r * r;
  }
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

double r2(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth);
  if (truth.size() < 2) throw InvalidArgument("r2: need at least two points");
  const double mean =
      std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (ss_tot == 0.0) throw InvalidArgument("r2: undefined for a constant truth vector");
  return 1.0 - ss_res / ss_tot;
}

double roc_auc(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw InvalidArgument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Midranks (1-based) so tied scores contribute one half.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) {
      if (positives[order[t]]) {
        positive_rank_sum += rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw InvalidArgument("roc_auc: need both positive and negative examples");
  }
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

}  // namespace vaemir
