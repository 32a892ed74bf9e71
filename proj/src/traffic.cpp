#include "mbms/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mbms {

namespace {
constexpr double kEps = 1e-9;
}

long VideoSource::frames_between(long from, long to) const {
  if (to <= from) return 0;
  return first_frame_from(to) - first_frame_from(from);
}

PlayoutState::PlayoutState(long first_frame, long first_creation_tti, PlayoutParams params)
    : params_(params), first_frame_(first_frame), first_creation_(first_creation_tti) {}

void PlayoutState::add_frame(long frame_id) {
  if (finished_) return;
  if (frame_id != first_frame_ + static_cast<long>(frames_.size())) {
    throw std::logic_error("frame " + std::to_string(frame_id) + " added out of order");
  }
  frames_.push_back({});
}

void PlayoutState::on_arrival(long frame_id, long tti) {
  const long i = frame_id - first_frame_;
  if (finished_ || i < 0 || i >= static_cast<long>(frames_.size())) return;
  Slot& f = frames_[i];
  if (f.status != Status::Pending) return;
  f.status = Status::Arrived;
  f.time = tti;
}

void PlayoutState::on_lost(long frame_id, long tti) {
  const long i = frame_id - first_frame_;
  if (finished_ || i < 0 || i >= static_cast<long>(frames_.size())) return;
  Slot& f = frames_[i];
  if (f.status != Status::Pending) return;
  f.status = Status::Lost;
  f.time = tti;
}

bool PlayoutState::step(long now) {
  if (!started_) {
    while (next_ < frames_.size() && frames_[next_].status == Status::Lost &&
           frames_[next_].time <= now) {
      start_floor_ = std::max(start_floor_, frames_[next_].time);
      ++lost_;
      ++next_;
    }
    if (next_ >= frames_.size()) return false;
    const Slot& f = frames_[next_];
    if (f.status != Status::Arrived || f.time > now) return false;
    const long start =
        std::max({creation(static_cast<long>(next_)) + params_.offset_ttis, f.time, start_floor_});
    if (start > now) return false;
    started_ = true;
    wait_ = start - first_creation_;
    ++delivered_;
    ++next_;
    next_instant_ = start + params_.interval_ttis;
    return true;
  }

  if (next_ >= frames_.size()) return false;
  const long due = next_instant_;
  if (due > now) return false;
  Slot& f = frames_[next_];
  if (f.time >= 0 && f.time <= due) {
    if (f.status == Status::Arrived) ++delivered_;
    else ++lost_;
    ++next_;
    next_instant_ = due + params_.interval_ttis;
    return true;
  }

  // Underrun: freeze until the frame shows up, is given up, or the wait runs out.
  const long deadline = due + params_.stall_wait_ttis;
  long resume = deadline;
  if (f.status != Status::Pending && f.time <= deadline) {
    resume = f.time;
    if (f.status == Status::Arrived) ++delivered_;
    else ++lost_;
  } else {
    if (now < deadline) return false;
    f.status = Status::Lost;
    f.time = deadline;
    ++lost_;
    ++late_;
  }
  if (resume > now) return false;
  stall_ += resume - due;
  ++next_;
  next_instant_ = resume + params_.interval_ttis;
  return true;
}

void PlayoutState::advance(long now) {
  if (finished_) return;
  while (step(now)) {
  }
}

void PlayoutState::finish(long end_tti) {
  if (finished_) return;
  advance(end_tti);
  if (started_) {
    if (next_ < frames_.size() && next_instant_ <= end_tti) stall_ += end_tti - next_instant_;
  } else if (!frames_.empty()) {
    wait_ = std::max(0L, end_tti - first_creation_);
  }
  finished_ = true;
}

long PlayoutState::generated() const {
  return finished_ ? delivered_ + lost_ : static_cast<long>(frames_.size());
}

double PlayoutState::loss_rate() const {
  const long total = delivered_ + lost_;
  return total == 0 ? 0.0 : static_cast<double>(lost_) / static_cast<double>(total);
}

std::string_view to_string(VerdictReason reason) {
  switch (reason) {
    case VerdictReason::Ok: return "OK";
    case VerdictReason::InitialWait: return "INITIAL_WAIT";
    case VerdictReason::StallBudget: return "STALL_BUDGET";
    case VerdictReason::LossRate: return "LOSS_RATE";
  }
  return "?";
}

SessionVerdict evaluate_satisfaction(double wait_s, double stall_s, double loss_rate,
                                     const QoeBudget& budget) {
  if (wait_s > budget.wait_s + kEps) return {false, VerdictReason::InitialWait};
  if (stall_s > budget.stall_s + kEps) return {false, VerdictReason::StallBudget};
  if (loss_rate > budget.loss + kEps) return {false, VerdictReason::LossRate};
  return {true, VerdictReason::Ok};
}

SessionVerdict evaluate_satisfaction(const PlayoutState& playout, const QoeBudget& budget,
                                     double tti_s) {
  return evaluate_satisfaction(static_cast<double>(playout.initial_wait_ttis()) * tti_s,
                               static_cast<double>(playout.stall_ttis()) * tti_s,
                               playout.loss_rate(), budget);
}

bool session_evaluable(const PlayoutState& playout, const QoeBudget& budget, double tti_s) {
  if (playout.generated() > 0) return true;
  return !playout.started() && playout.frames_known() > 0 &&
         static_cast<double>(playout.initial_wait_ttis()) * tti_s > budget.wait_s + kEps;
}

long draw_lifetime_ttis(Rng& rng, double mean_s, double tti_s) {
  const double ttis = rng.exponential(mean_s) / tti_s;
  return std::max(1L, std::lround(ttis));
}

}  // namespace mbms
