#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mbms/metrics.hpp"
#include "mbms/rng.hpp"

using namespace mbms;

TEST(Metrics, PowerGain) {
  EXPECT_NEAR(*power_gain(0.67, 1.0), 0.33, 1e-12);
  EXPECT_NEAR(*power_gain(0.27 * 4.2, 4.2), 0.73, 1e-12);
  for (double p : {0.1, 1.0, 20.0}) {
    EXPECT_DOUBLE_EQ(*power_gain(p, p), 0.0);
    EXPECT_DOUBLE_EQ(*power_gain(0.0, p), 1.0);
  }
  EXPECT_FALSE(power_gain(1.0, 0.0));
}

TEST(Metrics, AccruePower) {
  EXPECT_DOUBLE_EQ(accrue_power(25), 20.0);
  EXPECT_DOUBLE_EQ(accrue_power(5), 4.0);
  EXPECT_DOUBLE_EQ(accrue_power(0), 0.0);
}

TEST(Metrics, UserSatisfactionRate) {
  std::vector<SessionRecord> s(20);
  for (auto& r : s) r.satisfied = true;
  EXPECT_DOUBLE_EQ(*usr(s), 1.0);
  s[7].satisfied = false;
  EXPECT_DOUBLE_EQ(*usr(s), 0.95);
  for (auto& r : s) r.satisfied = false;
  EXPECT_DOUBLE_EQ(*usr(s), 0.0);
  EXPECT_FALSE(usr(std::vector<SessionRecord>{}));
}

TEST(Metrics, HarqAttemptsAverage) {
  EXPECT_DOUBLE_EQ(*avg_harq_attempts(std::vector<int>(10, 1)), 1.0);
  EXPECT_DOUBLE_EQ(*avg_harq_attempts(std::vector<int>(10, 5)), 5.0);
  EXPECT_FALSE(avg_harq_attempts(std::vector<int>{}));
}

TEST(Metrics, HarqAttemptsGeometricOracle) {
  // Independent 10 % failures per attempt, at most 8 attempts:
  // E[attempts] = sum_{k=0}^{7} 0.1^k.
  double expect = 0.0;
  for (int k = 0; k < 8; ++k) expect += std::pow(0.1, k);
  Rng rng(1, Stream::Decode);
  std::vector<int> attempts;
  for (int b = 0; b < 200000; ++b) {
    int a = 1;
    while (a < 8 && rng.bernoulli(0.1)) ++a;
    attempts.push_back(a);
  }
  EXPECT_NEAR(*avg_harq_attempts(attempts), expect, 0.003);
  EXPECT_NEAR(expect, 1.111, 1e-3);
}

TEST(Metrics, TransmitRate) {
  EXPECT_DOUBLE_EQ(*transmit_rate_kbps(120, 1), 120.0);
  EXPECT_DOUBLE_EQ(*transmit_rate_kbps(1200, 4), 300.0);
  EXPECT_FALSE(transmit_rate_kbps(0, 0));
}

TEST(Metrics, FeedbackRatio) {
  FeedbackCounters base{100, 40, 90, 10};
  const FeedbackRatio same = feedback_ratio(base, base);
  EXPECT_DOUBLE_EQ(*same.harq, 1.0);
  EXPECT_DOUBLE_EQ(*same.cqi, 1.0);
  const FeedbackRatio none = feedback_ratio(FeedbackCounters{}, base);
  EXPECT_DOUBLE_EQ(*none.harq, 0.0);
  EXPECT_FALSE(feedback_ratio(base, FeedbackCounters{}).harq);
}

TEST(Metrics, AttachBaseline) {
  MetricsRecord target, adaptive, ptp, fixed;
  target.power_per_group_w = 1.0;
  ptp.power_per_group_w = 4.0;
  fixed.power_per_group_w = 2.0;
  target.feedback = {10, 5, 0, 10};
  adaptive.feedback = {100, 50, 90, 10};
  attach_baseline(target, &adaptive, &ptp, &fixed);
  EXPECT_DOUBLE_EQ(*target.gain_vs_ptp, 0.75);
  EXPECT_DOUBLE_EQ(*target.gain_vs_fixed, 0.5);
  EXPECT_DOUBLE_EQ(*target.harq_feedback_ratio, 0.1);
  EXPECT_DOUBLE_EQ(*target.cqi_feedback_ratio, 0.1);
}

TEST(Metrics, EmpiricalCdf) {
  const std::vector<double> v{-3.0, 1.0, 5.0};
  EXPECT_DOUBLE_EQ(empirical_cdf(v, -4.0), 0.0);
  EXPECT_DOUBLE_EQ(empirical_cdf(v, -3.0), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(empirical_cdf(v, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(*std::min_element(v.begin(), v.end()), -3.0);
}

TEST(Metrics, OrderStatisticOracleOnIidSamples) {
  Rng rng(2, Stream::Spawn);
  std::vector<double> single;
  for (int i = 0; i < 200000; ++i) single.push_back(rng.normal(0.0, 6.0));
  std::sort(single.begin(), single.end());
  for (int n : {1, 2, 24}) {
    std::vector<double> worst;
    for (int i = 0; i < 20000; ++i) {
      double w = 1e9;
      for (int k = 0; k < n; ++k) w = std::min(w, rng.normal(0.0, 6.0));
      worst.push_back(w);
    }
    std::sort(worst.begin(), worst.end());
    const std::vector<int> sizes(worst.size(), n);
    for (double x = -25.0; x <= 10.0; x += 0.5) {
      EXPECT_NEAR(empirical_cdf(worst, x), order_statistic_cdf(single, sizes, x), 0.015)
          << "n=" << n << " x=" << x;
    }
  }
}

TEST(Metrics, WorstUserDistributionOrdering) {
  // Left-tail dominance: the worst of 24 lies below the worst of 2 pointwise.
  Rng rng(3, Stream::Spawn);
  auto samples = [&](int n) {
    std::vector<WorstUserSample> out;
    for (int i = 0; i < 20000; ++i) {
      double w = 1e9;
      for (int k = 0; k < n; ++k) w = std::min(w, rng.normal(0.0, 6.0));
      out.push_back({i, 0, n, w});
    }
    return out;
  };
  const Distribution d1 = worst_user_distribution(samples(1));
  const Distribution d24 = worst_user_distribution(samples(24));
  ASSERT_EQ(d1.cdf.size(), d24.cdf.size());
  for (std::size_t b = 0; b < d1.cdf.size(); ++b) EXPECT_GE(d24.cdf[b] + 1e-12, d1.cdf[b]);
  EXPECT_DOUBLE_EQ(d1.cdf.back(), 1.0);
  double mass = 0.0;
  for (double p : d1.pdf) mass += p * 1.0;
  EXPECT_NEAR(mass, 1.0, 1e-9);
}

TEST(Metrics, FormatSixSignificantDigits) {
  EXPECT_EQ(format_number(1.23456789), "1.23457");
  EXPECT_EQ(format_number(std::optional<double>{}), "");
  EXPECT_EQ(format_number(20.0), "20");
}

TEST(Metrics, ExportEmptyRunWritesHeadersOnly) {
  const auto dir = std::filesystem::temp_directory_path() / "mbms_export_empty";
  std::filesystem::remove_all(dir);
  export_csv(std::vector<RunResult>{}, dir);
  for (const char* name : {"summary.csv", "sessions.csv", "fig1.csv", "fig2.csv", "fig3.csv",
                           "fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv"}) {
    std::ifstream in(dir / name);
    ASSERT_TRUE(in) << name;
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    EXPECT_EQ(lines, 1) << name;
  }
  std::ifstream fig2(dir / "fig2.csv");
  std::string header;
  std::getline(fig2, header);
  EXPECT_EQ(header, "mode,users_per_cell,seed,watts_per_user");
  std::filesystem::remove_all(dir);
}

TEST(Metrics, ExportUnwritableDirectoryNamesPath) {
  try {
    export_csv(std::vector<RunResult>{}, "/proc/mbms_cannot_write_here");
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/mbms_cannot_write_here"), std::string::npos);
  }
}
