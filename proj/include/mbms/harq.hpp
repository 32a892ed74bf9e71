#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/link2sys.hpp"
#include "mbms/rng.hpp"

namespace mbms {

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// One transport block in flight, shared by every receiver it addresses.
struct HarqProcess {
  long tb_id = 0;
  int mcs = 0;
  std::vector<int> subbands;
  int attempts = 0;
  int max_attempts = 8;
  std::vector<long> ue_ids;
  std::vector<double> accumulated_mi;
  std::vector<std::uint8_t> done;
  long frame_id = -1;
  long bits = 0;
  long first_tx_tti = -1;
  long next_eligible_tti = -1;
  bool blind = false;  // fixed repetition count, no feedback
  // Detected feedback of the latest attempt.
  bool nack_detected = false;
  std::vector<CqiReport> nack_cqis;

  HarqProcess() = default;
  HarqProcess(long tb, int mcs_index, std::vector<int> bands, std::vector<long> receivers,
              int max_tx);

  bool all_done() const;
  int index_of(long ue_id) const;
};

enum class DecodeOutcome : std::uint8_t { AlreadyDone, Success, Failure };

/// One decoding attempt: each pending receiver soft-combines its new
/// mutual information and draws success with probability 1 - BLER.
/// Throws InvariantViolation when the attempt would exceed max_attempts.
std::vector<DecodeOutcome> decode_attempt(HarqProcess& process, std::span<const double> attempt_mi,
                                          const LinkModel& link, std::span<Rng* const> rngs);

enum class FeedbackKind : std::uint8_t { Ack, Nack, None };

struct FeedbackEvent {
  long ue_id = -1;
  long tti = -1;
  FeedbackKind kind = FeedbackKind::None;  // as detected at the eNodeB
  std::optional<CqiReport> attached_cqi;
  bool corrupted = false;
  bool transmitted = false;  // the UE spent an uplink transmission
};

/// Feedback for one decoding verdict. ACK/NACK bits flip with `error_prob`;
/// in the exclusive-NACK syntaxes an ACK is silence and a NACK is missed with
/// `error_prob`. The NACK-oriented scheme attaches `cqi` to each NACK.
FeedbackEvent make_feedback(bool decoded, FeedbackScheme scheme, double error_prob, Rng& rng,
                            long ue_id = -1, long tti = -1, const CqiReport* cqi = nullptr);

enum class GroupDecision : std::uint8_t { Retransmit, Complete, Exhausted };

GroupDecision group_decision(int attempts, int max_attempts, bool nack_detected);

/// Energy detection on the shared NACK resource: the received power
/// |sum_k a_k exp(j phi_k) + n|^2 with uniform phases and complex Gaussian
/// noise of power `noise_w` is compared against `threshold_w`.
bool common_channel_detect(std::span<const double> amplitudes, Rng& rng, double noise_w,
                           double threshold_w);

struct AggregateCqi {
  std::vector<std::uint8_t> cqi;
  int contributors = 0;
  std::vector<long> staleness;

  bool empty() const { return contributors == 0; }
};

/// Elementwise minimum over the reports; reports older than `stale_ttis`
/// (relative to `now`) are ignored. Pass stale_ttis < 0 to keep everything.
AggregateCqi aggregate_cqi(std::span<const CqiReport* const> reports, long now = 0,
                           long stale_ttis = -1);

/// Blind link adaptation for NACK-triggered CQI. The MCS is the top index
/// minus a robustness offset; NACK reports push the offset up, runs of
/// successful new-data blocks step it down.
class RecoveryController {
 public:
  enum class Phase { Adaptation, Recovery };
  enum class Event { NackAdapt, NewDataSuccess };

  RecoveryController() = default;
  RecoveryController(int num_mcs, int window, int k_max, int safety_step, int initial_offset);

  int offset() const { return offset_; }
  int mcs() const { return top_ - offset_; }
  Phase phase() const { return phase_; }
  int consecutive_success() const { return consecutive_; }
  /// Successes needed per recovery step, from the recent success rate.
  int steps_per_recovery() const;

  /// NACK-triggered adaptation towards `reported_mcs` minus the safety step.
  void on_nack(int reported_mcs);
  /// Outcome of a block carrying new data; successes drive recovery.
  void on_new_data(bool success);

 private:
  int top_ = 14;
  int offset_ = 0;
  int window_ = 20;
  int k_max_ = 10;
  int safety_ = 1;
  int consecutive_ = 0;
  Phase phase_ = Phase::Recovery;
  std::deque<bool> history_;
};

/// Uplink transmissions spent by MBMS receivers.
struct FeedbackCounters {
  long harq_reports = 0;
  long cqi_reports = 0;
  long acks = 0;
  long nacks = 0;

  FeedbackCounters& operator+=(const FeedbackCounters& o);
};

/// Tally of a batch of feedback events: HARQ status transmissions and attached CQIs.
FeedbackCounters count_feedback(std::span<const FeedbackEvent> events);

}  // namespace mbms
