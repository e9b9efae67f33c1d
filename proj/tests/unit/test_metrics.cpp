#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "vaemir/error.hpp"
#include "vaemir/metrics.hpp"
#include "vaemir/rng.hpp"

using namespace vaemir;

namespace {

double brute_rmse(const std::vector<double>& p, const std::vector<double>& t) {
  long double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (long double)(p[i] - t[i]) * (p[i] - t[i]);
  return std::sqrt(static_cast<double>(s / p.size()));
}

double brute_r2(const std::vector<double>& p, const std::vector<double>& t) {
  long double mean = 0;
  for (double v : t) mean += v;
  mean /= t.size();
  long double res = 0, tot = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    res += (long double)(t[i] - p[i]) * (t[i] - p[i]);
    tot += (t[i] - mean) * (t[i] - mean);
  }
  return static_cast<double>(1.0L - res / tot);
}

// Fraction of (positive, negative) pairs ranked correctly, ties count half.
double brute_auc(const std::vector<double>& s, const std::vector<bool>& pos) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      good += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return good / pairs;
}

}  // namespace

TEST(Metrics, HandValues) {
  const std::vector<double> zero = {0, 0}, tri = {3, 4};
  EXPECT_NEAR(rmse(zero, tri), std::sqrt(12.5), 1e-12);
  EXPECT_EQ(rmse(tri, tri), 0.0);
  EXPECT_EQ(r2(std::vector<double>{1, 2}, std::vector<double>{1, 3}), 0.5);
  EXPECT_EQ(r2(tri, tri), 1.0);
  EXPECT_EQ(r2(std::vector<double>{3.5, 3.5}, tri), 0.0);
}

TEST(Metrics, MatchBruteForce) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(50);
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.normal(10.0, 3.0);
      p[i] = t[i] + rng.normal(0.0, 1.0);
    }
    ASSERT_NEAR(rmse(p, t), brute_rmse(p, t), 1e-12);
    ASSERT_NEAR(r2(p, t), brute_r2(p, t), 1e-12);
    double mean = 0;
    for (double v : t) mean += v;
    mean /= n;
    double tot = 0;
    for (double v : t) tot += (v - mean) * (v - mean);
    const double e = rmse(p, t);
    ASSERT_NEAR(r2(p, t), 1.0 - e * e * n / tot, 1e-12);
  }
}

TEST(Metrics, Invariances) {
  const std::vector<double> p = {1, 5, 2}, t = {2, 3, 4};
  std::vector<double> ps = p, ts = t;
  for (auto& v : ps) v += 100.0;
  for (auto& v : ts) v += 100.0;
  EXPECT_NEAR(rmse(p, t), rmse(ps, ts), 1e-12);
  EXPECT_LE(r2(p, t), 1.0);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(rmse(std::vector<double>{1}, std::vector<double>{1, 2}), InvalidArgument);
  EXPECT_THROW(r2(std::vector<double>{1, 2}, std::vector<double>{3, 3}), InvalidArgument);
  EXPECT_THROW(r2(std::vector<double>{1}, std::vector<double>{3}), InvalidArgument);
}

TEST(RocAuc, MatchesPairCount) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.1, 0.9}, {false, true}), 1.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.1}, {false, true}), 0.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.5, 0.5}, {false, true}), 0.5);
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(60);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = i % 3 == 0;
      s[i] = std::round(rng.normal(pos[i] ? 1.0 : 0.0, 1.0) * 4.0) / 4.0;  // force ties
    }
    ASSERT_NEAR(roc_auc(s, pos), brute_auc(s, pos), 1e-12);
  }
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, {true, true}), InvalidArgument);
}
