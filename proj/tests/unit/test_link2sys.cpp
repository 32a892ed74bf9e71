#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/link2sys.hpp"
#include "mbms/rng.hpp"

using namespace mbms;

namespace {

LinkModel model() { return LinkModel::from_config(SimulationConfig{}); }

}  // namespace

TEST(Link2Sys, StandardTableShape) {
  const McsTable t = McsTable::standard();
  ASSERT_EQ(t.size(), 15);
  EXPECT_EQ(t[0].modulation_order, 2);
  EXPECT_EQ(t[14].modulation_order, 6);
  for (int i = 1; i < t.size(); ++i) {
    EXPECT_GT(t[i].spectral_efficiency, t[i - 1].spectral_efficiency);
    EXPECT_GT(t[i].mi_threshold, t[i - 1].mi_threshold);
  }
}

TEST(Link2Sys, TableParseRejectsBadRows) {
  std::istringstream good("# idx m rate thr\n0 2 0.5 0.9\n1 4 0.5 1.9\n");
  EXPECT_EQ(McsTable::parse(good).size(), 2);
  std::istringstream bad_order("0 2 0.5 0.9\n1 2 0.4 0.8\n");
  EXPECT_THROW(McsTable::parse(bad_order), std::invalid_argument);
  std::istringstream bad_mod("0 3 0.5 0.9\n");
  EXPECT_THROW(McsTable::parse(bad_mod), std::invalid_argument);
}

TEST(Link2Sys, MutualInformationLimits) {
  const LinkModel link = model();
  EXPECT_DOUBLE_EQ(link.sinr_to_mi(0.0, 2), 0.0);
  EXPECT_NEAR(link.sinr_to_mi(1e-9, 2), 0.0, 1e-8);
  EXPECT_DOUBLE_EQ(link.sinr_to_mi(1e12, 2), 2.0);
  EXPECT_DOUBLE_EQ(link.sinr_to_mi(1e12, 6), 6.0);
  // 0 dB: log2(2) = 1 bit, scaled by the 0.9 implementation loss.
  EXPECT_NEAR(link.sinr_to_mi(1.0, 6), 0.9, 1e-12);
}

TEST(Link2Sys, BlerLogistic) {
  const LinkModel link = model();
  for (const McsEntry& e : link.table().entries()) {
    const double thr = e.normalized_threshold();
    EXPECT_NEAR(link.bler(thr, e), 0.5, 1e-12);
    EXPECT_NEAR(link.bler(thr + std::log(9.0) / link.bler_slope(), e), 0.1, 1e-12);
    EXPECT_LT(link.bler(thr + 1.0, e), 1e-6);
  }
}

TEST(Link2Sys, IncrementalRedundancyAdds) {
  const LinkModel link = model();
  const McsEntry& e = link.table()[5];
  const double one = link.accumulate_ir(0.0, 0.2, e);
  EXPECT_DOUBLE_EQ(one, 0.2);
  EXPECT_DOUBLE_EQ(link.accumulate_ir(one, 0.2, e), 0.4);
  EXPECT_DOUBLE_EQ(link.accumulate_ir(0.9, 0.9, e), link.ir_cap(e));
}

TEST(Link2Sys, BlerNeverRisesWithMoreAttempts) {
  const LinkModel link = model();
  Rng rng(8, Stream::Decode);
  for (int trial = 0; trial < 2000; ++trial) {
    const McsEntry& e = link.table()[static_cast<int>(rng.below(15))];
    double acc = 0.0;
    double prev = 1.0;
    for (int k = 0; k < 8; ++k) {
      acc = link.accumulate_ir(acc, rng.uniform(0.0, 0.5), e);
      const double b = link.bler(acc, e);
      EXPECT_LE(b, prev + 1e-15);
      prev = b;
    }
  }
}

TEST(Link2Sys, TargetSinrMeetsBlerTarget) {
  const LinkModel link = model();
  for (int m = 0; m < link.num_mcs(); ++m) {
    const McsEntry& e = link.table()[m];
    const double s = link.sinr_threshold(m);
    EXPECT_NEAR(link.bler(link.normalized_mi(s, e), e), link.target_bler(), 1e-9);
  }
}

TEST(Link2Sys, CqiSaturation) {
  const LinkModel link = model();
  const std::vector<double> low(25, 1e-6), high(25, 1e9);
  for (auto c : link.compute_cqi(low).cqi) EXPECT_EQ(c, 0);
  for (auto c : link.compute_cqi(high).cqi) EXPECT_EQ(c, link.max_cqi());
}

TEST(Link2Sys, CqiMatchesBruteForceScan) {
  const LinkModel link = model();
  Rng rng(12, Stream::Decode);
  std::vector<double> sinr(25);
  for (int trial = 0; trial < 1000; ++trial) {
    for (double& s : sinr) s = std::pow(10.0, rng.uniform(-1.5, 2.5));
    const CqiReport r = link.compute_cqi(sinr, 3, 40);
    EXPECT_EQ(r.ue_id, 3);
    EXPECT_EQ(r.tti, 40);
    for (int s = 0; s < 25; ++s) {
      // Highest MCS whose single-attempt BLER at this SINR meets the target, plus one.
      int expect = 0;
      for (int m = 0; m < link.num_mcs(); ++m) {
        const McsEntry& e = link.table()[m];
        if (link.bler(link.normalized_mi(sinr[s], e), e) <= link.target_bler() + 1e-9) {
          expect = cqi_for_mcs(m);
        }
      }
      EXPECT_EQ(r.cqi[s], expect);
    }
  }
}

TEST(Link2Sys, UniformCqiRoundTrip) {
  const LinkModel link = model();
  std::vector<int> all(25);
  std::iota(all.begin(), all.end(), 0);
  for (int c = 1; c <= link.max_cqi(); ++c) {
    const std::vector<std::uint8_t> cqi(25, static_cast<std::uint8_t>(c));
    const McsSelection sel = link.select_mcs(cqi, all);
    EXPECT_EQ(sel.mcs, mcs_for_cqi(c));
    EXPECT_FALSE(sel.below_range);
  }
  const std::vector<std::uint8_t> zero(25, 0);
  const McsSelection sel = link.select_mcs(zero, all);
  EXPECT_EQ(sel.mcs, 0);
  EXPECT_TRUE(sel.below_range);
}

TEST(Link2Sys, SelectMcsMatchesExhaustiveSearch) {
  const LinkModel link = model();
  Rng rng(13, Stream::Decode);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::uint8_t> cqi(25);
    for (auto& c : cqi) c = static_cast<std::uint8_t>(rng.below(16));
    const int n = 1 + static_cast<int>(rng.below(25));
    std::vector<int> bands;
    for (int s = 0; s < n; ++s) bands.push_back(static_cast<int>(rng.below(25)));
    int expect = -1;
    for (int m = 0; m < link.num_mcs(); ++m) {
      const McsEntry& e = link.table()[m];
      double mi = 0.0;
      for (int s : bands) mi += link.normalized_mi(link.representative_sinr(cqi[s]), e);
      if (link.bler(mi / n, e) <= link.target_bler() + 1e-9) expect = m;
    }
    const McsSelection sel = link.select_mcs(cqi, bands);
    EXPECT_EQ(sel.mcs, std::max(expect, 0));
    EXPECT_EQ(sel.below_range, expect < 0);
  }
}

TEST(Link2Sys, TransportBlockSize) {
  std::istringstream one("0 2 0.5 0.9\n");
  const LinkModel link(McsTable::parse(one), 0.9, 20.0, 0.1, 120);
  EXPECT_EQ(link.transport_block_size(0, 1), 120);
  EXPECT_EQ(link.transport_block_size(0, 2), 240);
  const LinkModel def = model();
  for (int m = 0; m < def.num_mcs(); ++m) {
    const long one_band = def.transport_block_size(m, 1);
    EXPECT_NEAR(static_cast<double>(def.transport_block_size(m, 10)), 10.0 * one_band, 10.0);
  }
  EXPECT_EQ(def.transport_block_size(3, 0), 0);
}
