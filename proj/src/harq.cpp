#include "mbms/harq.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace mbms {

HarqProcess::HarqProcess(long tb, int mcs_index, std::vector<int> bands,
                         std::vector<long> receivers, int max_tx)
    : tb_id(tb),
      mcs(mcs_index),
      subbands(std::move(bands)),
      max_attempts(max_tx),
      ue_ids(std::move(receivers)) {
  accumulated_mi.assign(ue_ids.size(), 0.0);
  done.assign(ue_ids.size(), 0);
}

bool HarqProcess::all_done() const {
  return std::all_of(done.begin(), done.end(), [](std::uint8_t d) { return d != 0; });
}

int HarqProcess::index_of(long ue_id) const {
  const auto it = std::find(ue_ids.begin(), ue_ids.end(), ue_id);
  return it == ue_ids.end() ? -1 : static_cast<int>(it - ue_ids.begin());
}

std::vector<DecodeOutcome> decode_attempt(HarqProcess& process, std::span<const double> attempt_mi,
                                          const LinkModel& link, std::span<Rng* const> rngs) {
  if (process.attempts >= process.max_attempts) {
    throw InvariantViolation("HARQ process " + std::to_string(process.tb_id) + " exceeds " +
                             std::to_string(process.max_attempts) + " transmissions");
  }
  ++process.attempts;
  const McsEntry& mcs = link.table()[process.mcs];
  std::vector<DecodeOutcome> out(process.ue_ids.size(), DecodeOutcome::AlreadyDone);
  for (std::size_t k = 0; k < process.ue_ids.size(); ++k) {
    if (process.done[k]) continue;
    process.accumulated_mi[k] = link.accumulate_ir(process.accumulated_mi[k], attempt_mi[k], mcs);
    const bool ok = !rngs[k]->bernoulli(link.bler(process.accumulated_mi[k], mcs));
    if (ok) process.done[k] = 1;
    out[k] = ok ? DecodeOutcome::Success : DecodeOutcome::Failure;
  }
  return out;
}

FeedbackEvent make_feedback(bool decoded, FeedbackScheme scheme, double error_prob, Rng& rng,
                            long ue_id, long tti, const CqiReport* cqi) {
  FeedbackEvent ev;
  ev.ue_id = ue_id;
  ev.tti = tti;
  if (scheme == FeedbackScheme::AckNackPeriodicCqi) {
    ev.transmitted = true;
    ev.corrupted = rng.bernoulli(error_prob);
    const bool ack = decoded != ev.corrupted;
    ev.kind = ack ? FeedbackKind::Ack : FeedbackKind::Nack;
    return ev;
  }
  if (decoded) return ev;  // silence
  ev.transmitted = true;
  ev.corrupted = rng.bernoulli(error_prob);
  if (ev.corrupted) return ev;  // missed: looks like silence
  ev.kind = FeedbackKind::Nack;
  if (scheme == FeedbackScheme::NackOriented && cqi != nullptr) ev.attached_cqi = *cqi;
  return ev;
}

GroupDecision group_decision(int attempts, int max_attempts, bool nack_detected) {
  if (!nack_detected) return GroupDecision::Complete;
  return attempts < max_attempts ? GroupDecision::Retransmit : GroupDecision::Exhausted;
}

bool common_channel_detect(std::span<const double> amplitudes, Rng& rng, double noise_w,
                           double threshold_w) {
  std::complex<double> rx{};
  for (double a : amplitudes) {
    rx += std::polar(a, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  const double sd = std::sqrt(0.5 * noise_w);
  rx += std::complex<double>(sd * rng.normal(), sd * rng.normal());
  return std::norm(rx) > threshold_w;
}

AggregateCqi aggregate_cqi(std::span<const CqiReport* const> reports, long now, long stale_ttis) {
  AggregateCqi agg;
  for (const CqiReport* r : reports) {
    if (r == nullptr || !r->valid()) continue;
    if (stale_ttis >= 0 && now - r->tti > stale_ttis) continue;
    if (agg.cqi.empty()) {
      agg.cqi = r->cqi;
    } else {
      const std::size_t n = std::min(agg.cqi.size(), r->cqi.size());
      for (std::size_t s = 0; s < n; ++s) agg.cqi[s] = std::min(agg.cqi[s], r->cqi[s]);
    }
    agg.staleness.push_back(now - r->tti);
    ++agg.contributors;
  }
  return agg;
}

RecoveryController::RecoveryController(int num_mcs, int window, int k_max, int safety_step,
                                       int initial_offset)
    : top_(num_mcs - 1),
      offset_(std::clamp(initial_offset, 0, num_mcs - 1)),
      window_(window),
      k_max_(k_max),
      safety_(safety_step) {}

int RecoveryController::steps_per_recovery() const {
  if (history_.empty()) return 1;
  const auto ok = std::count(history_.begin(), history_.end(), true);
  const double rate = static_cast<double>(ok) / static_cast<double>(history_.size());
  if (rate >= 1.0) return k_max_;
  const double k = std::round(1.0 / (1.0 - rate));
  return std::clamp(static_cast<int>(k), 1, k_max_);
}

void RecoveryController::on_nack(int reported_mcs) {
  const int target = std::max(0, reported_mcs - safety_);
  offset_ = std::max(offset_, top_ - target);
  phase_ = Phase::Adaptation;
  consecutive_ = 0;
}

void RecoveryController::on_new_data(bool success) {
  history_.push_back(success);
  while (static_cast<int>(history_.size()) > window_) history_.pop_front();
  if (!success) {
    consecutive_ = 0;
    return;
  }
  phase_ = Phase::Recovery;
  if (++consecutive_ >= steps_per_recovery()) {
    offset_ = std::max(0, offset_ - 1);
    consecutive_ = 0;
  }
}

FeedbackCounters& FeedbackCounters::operator+=(const FeedbackCounters& o) {
  harq_reports += o.harq_reports;
  cqi_reports += o.cqi_reports;
  acks += o.acks;
  nacks += o.nacks;
  return *this;
}

FeedbackCounters count_feedback(std::span<const FeedbackEvent> events) {
  FeedbackCounters c;
  for (const FeedbackEvent& ev : events) {
    if (!ev.transmitted) continue;
    ++c.harq_reports;
    if (ev.kind == FeedbackKind::Ack) ++c.acks;
    if (ev.kind == FeedbackKind::Nack) ++c.nacks;
    if (ev.attached_cqi) ++c.cqi_reports;
  }
  return c;
}

}  // namespace mbms
