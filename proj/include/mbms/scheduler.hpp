#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "mbms/link2sys.hpp"
#include "mbms/rng.hpp"

namespace mbms {

enum class FlowKind : std::uint8_t { Ptp, Mbms, Background };

struct AllocationEntry {
  FlowKind kind = FlowKind::Background;
  long flow_id = -1;
  std::vector<int> subbands;
  int mcs = -1;
  bool retransmission = false;
  long tbs_bits = 0;
};

/// Subband assignment of one cell in one TTI.
struct Allocation {
  long tti = 0;
  int cell = 0;
  std::vector<AllocationEntry> entries;

  std::uint32_t mask() const;
  int used_subbands() const;
  int subbands_of(FlowKind kind) const;
};

/// True when no subband is assigned twice and all indices are in range.
bool allocation_disjoint(const Allocation& alloc, int num_subbands);

/// Free/used bookkeeping for the subbands of one cell in one TTI.
class SubbandPool {
 public:
  explicit SubbandPool(int num_subbands) : n_(num_subbands) {}

  int size() const { return n_; }
  bool is_free(int s) const { return (used_ & (1u << s)) == 0; }
  int free_count() const;
  std::uint32_t used_mask() const { return used_; }
  void take(std::span<const int> subbands);
  std::vector<int> free_subbands() const;

 private:
  int n_;
  std::uint32_t used_ = 0;
};

/// Free subbands ordered by descending CQI, lowest index first among equals.
std::vector<int> best_free_subbands(std::span<const std::uint8_t> cqi, const SubbandPool& pool);

/// Lowest-index run of `want` free adjacent subbands; if none exists, the
/// longest free run (earliest on ties). Empty when nothing is free.
std::vector<int> contiguous_free_block(const SubbandPool& pool, int want);

/// Smallest subband count whose block at `mcs` holds `bits`, or `max_subbands`.
int subbands_for_bits(const LinkModel& link, int mcs, long bits, int max_subbands);

struct SubbandChoice {
  std::vector<int> subbands;
  int mcs = 0;
  long tbs_bits = 0;
};

/// Picks a best-CQI prefix of `ranked` with its own MCS. Prefixes carrying at
/// least min(bits, min_bits) qualify; when no prefix gets there, those
/// carrying min(bits, rate_bits) (or as much as possible) qualify instead.
/// Among qualifying prefixes whose carried bits per subband reach `tolerance`
/// times the best ratio, the one carrying the most bits wins.
SubbandChoice choose_adaptive(const LinkModel& link, std::span<const std::uint8_t> cqi,
                              std::span<const int> ranked, long bits, long min_bits = 0,
                              long rate_bits = 0, double tolerance = 1.0);

/// Channel-dependent unicast priority: quality x (1 + beta * age / age_ref).
double ptp_weight(double quality, double age_s, double beta = 1.0, double age_ref_s = 0.25);

struct QueuedFrame {
  long frame_id = 0;
  long created_tti = 0;
  long bits = 0;            // frame size
  long untransmitted = 0;   // bits not yet carried by any transport block
};

/// Removes frames older than the deadline (strictly) and returns them.
std::vector<QueuedFrame> drop_stale(std::deque<QueuedFrame>& queue, long now_tti,
                                    double deadline_s, double tti_s = 1e-3);

/// Time-domain gate that holds the whole group back while its worst member
/// is below a percentile of the single-user quality distribution.
class TdMinCqiGate {
 public:
  void add_sample(double quality);
  /// Freezes the threshold at the given percentile of the collected samples.
  void calibrate(double percentile);
  void set_threshold(double threshold);

  bool calibrated() const { return calibrated_; }
  double threshold() const { return threshold_; }
  std::size_t sample_count() const { return samples_.size(); }
  /// Uncalibrated gates allow everything.
  bool allowed(double aggregate_quality) const;

 private:
  std::vector<double> samples_;
  double threshold_ = 0.0;
  bool calibrated_ = false;
};

/// Linear-interpolated percentile (0..100) of a sample set.
double percentile(std::vector<double> values, double pct);

/// Background traffic shaper. Each TTI is topped up towards the load target
/// plus the accumulated shortfall of earlier TTIs (error diffusion), so the
/// long-run used fraction settles on the target.
class LoadController {
 public:
  LoadController() = default;
  LoadController(int num_subbands, double target, int window_ttis, double gain);

  /// Background subbands to add given `foreground_used` already assigned.
  int background_request(int foreground_used, int free_subbands);
  /// Records the total subbands used in the TTI just scheduled.
  void record(int used_subbands);
  double window_load() const;

 private:
  int n_ = 25;
  double target_ = 0.7;
  int window_ = 100;
  double gain_ = 1.0;
  std::deque<int> history_;
  long window_sum_ = 0;
  double deficit_ = 0.0;  // target minus used, summed over past TTIs
};

/// Fixed random order in which a cell hands free subbands to background flows.
std::vector<int> background_order(Rng& rng, int num_subbands);

}  // namespace mbms
