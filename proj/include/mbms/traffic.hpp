#pragma once

#include <cstdint>
#include <deque>
#include <string_view>
#include <vector>

#include "mbms/rng.hpp"

namespace mbms {

/// Constant-rate video source: one equal-size frame every `interval_ttis`,
/// the first at TTI 0.
class VideoSource {
 public:
  VideoSource(long frame_bits, int interval_ttis) : bits_(frame_bits), interval_(interval_ttis) {}

  long frame_bits() const { return bits_; }
  int interval_ttis() const { return interval_; }
  bool frame_due(long tti) const { return tti % interval_ == 0; }
  long frame_id_at(long tti) const { return tti / interval_; }
  long creation_tti(long frame_id) const { return frame_id * interval_; }
  /// First frame created at or after `tti`.
  long first_frame_from(long tti) const { return (tti + interval_ - 1) / interval_; }
  /// Frames created in [from, to).
  long frames_between(long from, long to) const;

 private:
  long bits_;
  int interval_;
};

struct PlayoutParams {
  long offset_ttis = 300;       // earliest playout of a frame after its creation
  long stall_wait_ttis = 200;   // longest the player waits for a missing frame
  long interval_ttis = 100;     // playout duration of one frame
};

/// Client playout buffer of one session. Frame j (relative to the first
/// playable frame k) is due at start + (j - k) * interval + accumulated stall.
/// A frame missing at its instant freezes playout until it arrives, the
/// network gives it up, or the stall wait elapses; in the last two cases it
/// is lost and any later arrival is ignored. Frames already given up at
/// their instant are skipped without a stall.
class PlayoutState {
 public:
  PlayoutState() = default;
  PlayoutState(long first_frame, long first_creation_tti, PlayoutParams params);

  /// Registers the next frame produced for this session.
  void add_frame(long frame_id);
  /// Complete reception of a frame; duplicates and unknown ids are ignored.
  void on_arrival(long frame_id, long tti);
  /// The network will never deliver the frame (dropped or HARQ exhausted).
  void on_lost(long frame_id, long tti);
  /// Plays out every instant up to and including `now`.
  void advance(long now);
  /// Ends the session; frames due after `end_tti` leave the accounting.
  void finish(long end_tti);

  bool started() const { return started_; }
  bool finished() const { return finished_; }
  /// Frames produced so far; after finish(), only the frames that were due.
  long generated() const;
  long delivered() const { return delivered_; }
  long lost() const { return lost_; }
  long lost_late() const { return late_; }
  long lost_network() const { return lost_ - late_; }
  long initial_wait_ttis() const { return wait_; }
  long stall_ttis() const { return stall_; }
  double loss_rate() const;
  long first_frame() const { return first_frame_; }
  long frames_known() const { return static_cast<long>(frames_.size()); }

 private:
  enum class Status : std::uint8_t { Pending, Arrived, Lost };
  struct Slot {
    Status status = Status::Pending;
    long time = -1;
  };

  long creation(long index) const { return first_creation_ + index * params_.interval_ttis; }
  bool step(long now);

  PlayoutParams params_;
  long first_frame_ = 0;
  long first_creation_ = 0;
  std::vector<Slot> frames_;
  std::size_t next_ = 0;       // next frame index to play
  long next_instant_ = 0;
  long start_floor_ = 0;       // playout cannot start before skipped losses are known
  bool started_ = false;
  bool finished_ = false;
  long wait_ = 0;
  long stall_ = 0;
  long delivered_ = 0;
  long lost_ = 0;
  long late_ = 0;
};

enum class VerdictReason : std::uint8_t { Ok, InitialWait, StallBudget, LossRate };

std::string_view to_string(VerdictReason reason);

struct SessionVerdict {
  bool satisfied = true;
  VerdictReason reason = VerdictReason::Ok;
};

struct QoeBudget {
  double wait_s = 0.5;
  double stall_s = 0.5;
  double loss = 0.01;
};

SessionVerdict evaluate_satisfaction(double wait_s, double stall_s, double loss_rate,
                                     const QoeBudget& budget = {});
SessionVerdict evaluate_satisfaction(const PlayoutState& playout, const QoeBudget& budget = {},
                                     double tti_s = 1e-3);

/// Finished sessions without any due frame carry no verdict, unless their
/// playout never started within the wait budget.
bool session_evaluable(const PlayoutState& playout, const QoeBudget& budget = {},
                       double tti_s = 1e-3);

/// Session lifetime in TTIs: exponential with the given mean, at least one TTI.
long draw_lifetime_ttis(Rng& rng, double mean_s, double tti_s = 1e-3);

}  // namespace mbms
