#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/harq.hpp"
#include "mbms/traffic.hpp"

namespace mbms {

struct SessionRecord {
  long ue_id = 0;
  long spawn_tti = 0;
  long end_tti = 0;
  int cell = 0;
  double wait_s = 0.0;
  double stall_s = 0.0;
  double loss_rate = 0.0;
  long frames = 0;
  bool satisfied = false;
  VerdictReason reason = VerdictReason::Ok;
};

/// Worst member's wideband SINR in one cell, rescaled to 1 W transmit power.
struct WorstUserSample {
  long tti = 0;
  int cell = 0;
  int group_size = 0;
  double sinr_db = 0.0;
};

struct MetricsRecord {
  Mode mode = Mode::PtmAdaptive;
  FeedbackScheme scheme = FeedbackScheme::AckNackPeriodicCqi;
  int users_per_cell = 0;
  std::uint64_t seed = 0;
  long measured_ttis = 0;
  /// Mean power spent on the video service per cell (MBMS group or all PTP flows).
  double power_per_group_w = 0.0;
  /// Mean of group power over the instantaneous group size, over occupied cell-TTIs.
  double power_per_user_w = 0.0;
  long sessions = 0;
  long satisfied = 0;
  std::optional<double> usr;
  long harq_blocks = 0;
  int max_harq_attempts = 0;
  std::optional<double> avg_harq_attempts;
  long scheduled_blocks = 0;
  std::optional<double> transmit_rate_kbps;
  FeedbackCounters feedback;
  std::optional<double> harq_feedback_ratio;
  std::optional<double> cqi_feedback_ratio;
  /// Occupied cell-TTIs with a group quality estimate, and those with the min-CQI gate closed.
  long gate_checks = 0;
  long gated_ttis = 0;
  std::optional<double> gated_fraction;
  double total_load = 0.0;
  long disjointness_violations = 0;
  int fixed_mcs = -1;
  int fixed_subbands = 0;
  double gate_threshold = 0.0;
  std::optional<double> gain_vs_ptp;
  std::optional<double> gain_vs_fixed;
};

struct RunResult {
  MetricsRecord metrics;
  std::vector<SessionRecord> sessions;
  std::vector<WorstUserSample> worst_user;
};

/// Relative saving of `p0` against the reference `pref`; absent if pref <= 0.
std::optional<double> power_gain(double p0, double pref);

/// Watts drawn by `subbands` subbands under an even power split.
double accrue_power(int subbands, double total_power_w = 20.0, int num_subbands = 25);

std::optional<double> usr(std::span<const SessionRecord> sessions);

std::optional<double> avg_harq_attempts(std::span<const int> attempts);

/// Mean block size per scheduled block, in kbps for a 1 ms TTI.
std::optional<double> transmit_rate_kbps(long total_bits, long blocks, double tti_s = 1e-3);

struct FeedbackRatio {
  std::optional<double> harq;
  std::optional<double> cqi;
};

FeedbackRatio feedback_ratio(const FeedbackCounters& scheme, const FeedbackCounters& baseline);

/// Fills the feedback ratios and power gains of `target` from reference runs.
void attach_baseline(MetricsRecord& target, const MetricsRecord* adaptive_baseline,
                     const MetricsRecord* ptp_reference, const MetricsRecord* fixed_reference);

/// Empirical CDF of `sorted` (ascending) at x: fraction of samples <= x.
double empirical_cdf(std::span<const double> sorted, double x);

/// Worst-of-n prediction from single-user samples: averages
/// 1 - (1 - F1(x))^n over the observed group sizes.
double order_statistic_cdf(std::span<const double> single_sorted, std::span<const int> group_sizes,
                           double x);

struct Distribution {
  std::vector<double> bin_centre_db;
  std::vector<double> pdf;
  std::vector<double> cdf;
};

Distribution worst_user_distribution(std::span<const WorstUserSample> samples, double lo_db = -30.0,
                                     double hi_db = 40.0, double bin_db = 1.0);

/// Writes summary.csv, sessions.csv and fig1.csv .. fig7.csv into `dir`.
void export_csv(std::span<const RunResult> runs, const std::filesystem::path& dir);

void write_summary_csv(std::span<const RunResult> runs, std::ostream& out);
void write_sessions_csv(std::span<const RunResult> runs, std::ostream& out);

/// Six significant digits; empty for absent values.
std::string format_number(double v);
std::string format_number(const std::optional<double>& v);

}  // namespace mbms
