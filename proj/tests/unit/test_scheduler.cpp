#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/engine.hpp"
#include "mbms/link2sys.hpp"
#include "mbms/rng.hpp"
#include "mbms/scheduler.hpp"

using namespace mbms;

namespace {

LinkModel model() { return LinkModel::from_config(SimulationConfig{}); }

// Reference selection: scan every prefix, keep those carrying at least the
// floor, then the widest carry among those within tolerance of the best ratio.
SubbandChoice reference_choice(const LinkModel& link, const std::vector<std::uint8_t>& cqi,
                               const std::vector<int>& ranked, long bits, long min_bits,
                               long rate_bits, double tolerance) {
  struct Opt {
    std::size_t n;
    int mcs;
    long tbs, carried;
    double ratio;
  };
  std::vector<Opt> opts;
  for (std::size_t n = 1; n <= ranked.size(); ++n) {
    std::vector<int> prefix(ranked.begin(), ranked.begin() + static_cast<long>(n));
    const int mcs = link.select_mcs(cqi, prefix).mcs;
    const long tbs = link.transport_block_size(mcs, static_cast<int>(n));
    const long carried = std::min(tbs, bits);
    opts.push_back({n, mcs, tbs, carried, static_cast<double>(carried) / n});
  }
  long most = 0;
  for (const Opt& o : opts) most = std::max(most, o.carried);
  SubbandChoice out;
  if (most <= 0) return out;
  const long wanted = std::max(1L, std::min(bits, min_bits));
  const long floor_bits = most >= wanted ? wanted : std::max(1L, std::min({bits, rate_bits, most}));
  double best = 0.0;
  for (const Opt& o : opts) {
    if (o.carried >= floor_bits) best = std::max(best, o.ratio);
  }
  const Opt* pick = nullptr;
  for (const Opt& o : opts) {
    if (o.carried < floor_bits || o.ratio < tolerance * best) continue;
    if (pick == nullptr || o.carried > pick->carried) pick = &o;
  }
  out.subbands.assign(ranked.begin(), ranked.begin() + static_cast<long>(pick->n));
  out.mcs = pick->mcs;
  out.tbs_bits = pick->tbs;
  return out;
}

}  // namespace

TEST(Scheduler, DisjointnessCheck) {
  Allocation a;
  a.entries.push_back({FlowKind::Ptp, 1, {0, 1, 2}});
  a.entries.push_back({FlowKind::Mbms, 2, {3, 4}});
  EXPECT_TRUE(allocation_disjoint(a, 25));
  EXPECT_EQ(a.used_subbands(), 5);
  EXPECT_EQ(a.subbands_of(FlowKind::Mbms), 2);
  a.entries.push_back({FlowKind::Background, 3, {4}});
  EXPECT_FALSE(allocation_disjoint(a, 25));
  Allocation out_of_range;
  out_of_range.entries.push_back({FlowKind::Ptp, 1, {25}});
  EXPECT_FALSE(allocation_disjoint(out_of_range, 25));
}

TEST(Scheduler, PoolRefusesDoubleBooking) {
  SubbandPool pool(25);
  const std::vector<int> a{1, 2};
  pool.take(a);
  EXPECT_EQ(pool.free_count(), 23);
  EXPECT_THROW(pool.take(std::vector<int>{2}), std::logic_error);
}

TEST(Scheduler, BestFreeSubbandsOrder) {
  SubbandPool pool(6);
  pool.take(std::vector<int>{2});
  const std::vector<std::uint8_t> cqi{3, 9, 15, 9, 1, 12};
  EXPECT_EQ(best_free_subbands(cqi, pool), (std::vector<int>{5, 1, 3, 0, 4}));
}

TEST(Scheduler, ContiguousBlock) {
  SubbandPool pool(10);
  pool.take(std::vector<int>{2, 6});
  EXPECT_EQ(contiguous_free_block(pool, 2), (std::vector<int>{0, 1}));
  EXPECT_EQ(contiguous_free_block(pool, 3), (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(contiguous_free_block(pool, 5), (std::vector<int>{3, 4, 5}));  // longest run
  SubbandPool full(3);
  full.take(std::vector<int>{0, 1, 2});
  EXPECT_TRUE(contiguous_free_block(full, 1).empty());
}

TEST(Scheduler, SubbandsForBits) {
  const LinkModel link = model();
  const long per = link.transport_block_size(5, 1);
  EXPECT_EQ(subbands_for_bits(link, 5, per, 25), 1);
  EXPECT_EQ(subbands_for_bits(link, 5, per + 1, 25), 2);
  EXPECT_EQ(subbands_for_bits(link, 0, 1'000'000, 25), 25);
}

TEST(Scheduler, ChooseAdaptiveMatchesReference) {
  const LinkModel link = model();
  Rng rng(3, Stream::Background);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<std::uint8_t> cqi(25);
    const int centre = static_cast<int>(rng.below(16));
    for (auto& c : cqi) c = static_cast<std::uint8_t>(std::clamp(centre + static_cast<int>(rng.below(7)) - 3, 0, 15));
    SubbandPool pool(25);
    const std::vector<int> ranked = best_free_subbands(cqi, pool);
    const long bits = 1 + static_cast<long>(rng.below(20000));
    const long min_bits = static_cast<long>(rng.below(6000));
    const long rate_bits = static_cast<long>(rng.below(6000));
    const double tol = rng.uniform(0.5, 1.0);
    const SubbandChoice got = choose_adaptive(link, cqi, ranked, bits, min_bits, rate_bits, tol);
    const SubbandChoice want = reference_choice(link, cqi, ranked, bits, min_bits, rate_bits, tol);
    ASSERT_EQ(got.subbands, want.subbands) << trial;
    ASSERT_EQ(got.mcs, want.mcs);
    ASSERT_EQ(got.tbs_bits, want.tbs_bits);
  }
}

TEST(Scheduler, ChooseAdaptiveNothingUsable) {
  const LinkModel link = model();
  const std::vector<std::uint8_t> cqi(25, 0);
  const SubbandChoice c = choose_adaptive(link, cqi, std::vector<int>{}, 1000);
  EXPECT_TRUE(c.subbands.empty());
}

TEST(Scheduler, PtpWeight) {
  EXPECT_DOUBLE_EQ(ptp_weight(7.0, 0.0), 7.0);
  EXPECT_GT(ptp_weight(7.0, 0.2), ptp_weight(7.0, 0.1));
  EXPECT_DOUBLE_EQ(ptp_weight(8.0, 0.3) / ptp_weight(4.0, 0.3), 2.0);
}

TEST(Scheduler, DropStaleBoundary) {
  std::deque<QueuedFrame> q{{1, 0, 100, 100}, {2, 200, 100, 100}, {3, 1000, 100, 100}};
  EXPECT_TRUE(drop_stale(q, 1000, 1.0).empty());  // age 1.0 s is kept
  const auto dropped = drop_stale(q, 1200, 1.0);
  ASSERT_EQ(dropped.size(), 1u);
  EXPECT_EQ(dropped[0].frame_id, 1);
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(q.front().frame_id, 2);
}

TEST(Scheduler, GateThresholdRule) {
  TdMinCqiGate gate;
  EXPECT_TRUE(gate.allowed(0.0));  // uncalibrated
  for (int i = 0; i <= 100; ++i) gate.add_sample(i);
  gate.calibrate(5.0);
  EXPECT_DOUBLE_EQ(gate.threshold(), 5.0);
  EXPECT_TRUE(gate.allowed(5.0));
  EXPECT_FALSE(gate.allowed(4.99));
  EXPECT_TRUE(gate.allowed(12.0));
  gate.add_sample(-100.0);  // frozen after calibration
  EXPECT_DOUBLE_EQ(gate.threshold(), 5.0);
}

TEST(Scheduler, PercentileInterpolates) {
  EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0, 4.0}, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(percentile({4.0, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(percentile({4.0, 1.0}, 100.0), 4.0);
  EXPECT_THROW(percentile({}, 5.0), std::invalid_argument);
}

TEST(Scheduler, LoadControllerReachesTarget) {
  LoadController ctrl(25, 0.7, 100, 1.0);
  Rng rng(4, Stream::Background);
  long used = 0;
  const int ttis = 100000;
  for (int t = 0; t < ttis; ++t) {
    // Bursty foreground: idle most of the time, occasionally the whole band.
    const int fg = rng.uniform() < 0.1 ? 25 : static_cast<int>(rng.below(8));
    const int bg = ctrl.background_request(fg, 25 - fg);
    ASSERT_GE(bg, 0);
    ASSERT_LE(bg, 25 - fg);
    ctrl.record(fg + bg);
    used += fg + bg;
  }
  EXPECT_NEAR(static_cast<double>(used) / (25.0 * ttis), 0.7, 0.005);
}

TEST(Scheduler, BackgroundOrderIsPermutation) {
  Rng rng(5, Stream::Background);
  std::vector<int> order = background_order(rng, 25);
  std::sort(order.begin(), order.end());
  std::vector<int> expect(25);
  std::iota(expect.begin(), expect.end(), 0);
  EXPECT_EQ(order, expect);
}

TEST(Scheduler, FixedPtmBlocksFitBandAndPipeline) {
  const SimulationConfig cfg;
  const LinkModel link = model();
  const long frame = cfg.frame_bits();
  for (int m = 0; m < link.num_mcs(); ++m) {
    const int n = fixed_ptm_subbands(cfg, link, m);
    ASSERT_GE(n, 1);
    ASSERT_LE(n, cfg.num_subbands);
    if (!fixed_ptm_fits(cfg, link, m, n)) continue;
    const long tbs = link.transport_block_size(m, n);
    const long blocks = (frame + tbs - 1) / tbs;
    const int tx = cfg.fixed_ptm_transmissions;
    EXPECT_LE(blocks * n * tx, static_cast<long>(cfg.frame_interval_ttis) * cfg.num_subbands);
    EXPECT_LE(blocks * ((tx - 1) * cfg.harq_rtt_ttis + 1),
              static_cast<long>(cfg.max_harq_tx) * cfg.frame_interval_ttis);
  }
  const int floor = fixed_ptm_min_mcs(cfg);
  for (int m = floor; m < link.num_mcs(); ++m) {
    EXPECT_TRUE(fixed_ptm_fits(cfg, link, m, fixed_ptm_subbands(cfg, link, m))) << m;
  }
}
