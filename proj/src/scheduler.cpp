#include "mbms/scheduler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mbms {

std::uint32_t Allocation::mask() const {
  std::uint32_t m = 0;
  for (const AllocationEntry& e : entries) {
    for (int s : e.subbands) m |= 1u << s;
  }
  return m;
}

int Allocation::used_subbands() const {
  int n = 0;
  for (const AllocationEntry& e : entries) n += static_cast<int>(e.subbands.size());
  return n;
}

int Allocation::subbands_of(FlowKind kind) const {
  int n = 0;
  for (const AllocationEntry& e : entries) {
    if (e.kind == kind) n += static_cast<int>(e.subbands.size());
  }
  return n;
}

bool allocation_disjoint(const Allocation& alloc, int num_subbands) {
  std::uint32_t seen = 0;
  for (const AllocationEntry& e : alloc.entries) {
    for (int s : e.subbands) {
      if (s < 0 || s >= num_subbands) return false;
      if (seen & (1u << s)) return false;
      seen |= 1u << s;
    }
  }
  return true;
}

int SubbandPool::free_count() const { return n_ - std::popcount(used_); }

void SubbandPool::take(std::span<const int> subbands) {
  for (int s : subbands) {
    if (s < 0 || s >= n_ || !is_free(s)) {
      throw std::logic_error("subband " + std::to_string(s) + " is not free");
    }
    used_ |= 1u << s;
  }
}

std::vector<int> SubbandPool::free_subbands() const {
  std::vector<int> out;
  for (int s = 0; s < n_; ++s) {
    if (is_free(s)) out.push_back(s);
  }
  return out;
}

std::vector<int> best_free_subbands(std::span<const std::uint8_t> cqi, const SubbandPool& pool) {
  std::vector<int> out = pool.free_subbands();
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) { return cqi[a] > cqi[b]; });
  return out;
}

std::vector<int> contiguous_free_block(const SubbandPool& pool, int want) {
  int best_start = -1;
  int best_len = 0;
  for (int s = 0; s < pool.size();) {
    if (!pool.is_free(s)) {
      ++s;
      continue;
    }
    int e = s;
    while (e < pool.size() && pool.is_free(e)) ++e;
    const int len = e - s;
    if (len >= want) {
      best_start = s;
      best_len = want;
      break;
    }
    if (len > best_len) {
      best_start = s;
      best_len = len;
    }
    s = e;
  }
  std::vector<int> out(best_len);
  std::iota(out.begin(), out.end(), best_start);
  return out;
}

int subbands_for_bits(const LinkModel& link, int mcs, long bits, int max_subbands) {
  for (int n = 1; n <= max_subbands; ++n) {
    if (link.transport_block_size(mcs, n) >= bits) return n;
  }
  return max_subbands;
}

SubbandChoice choose_adaptive(const LinkModel& link, std::span<const std::uint8_t> cqi,
                              std::span<const int> ranked, long bits, long min_bits,
                              long rate_bits, double tolerance) {
  struct Option {
    int mcs;
    long tbs;
    long carried;
    double ratio;
  };
  std::vector<Option> options;
  long most = 0;
  for (std::size_t n = 1; n <= ranked.size(); ++n) {
    const int mcs = link.select_mcs(cqi, ranked.first(n)).mcs;
    const long tbs = link.transport_block_size(mcs, static_cast<int>(n));
    const long carried = std::min(tbs, bits);
    options.push_back({mcs, tbs, carried, static_cast<double>(carried) / static_cast<double>(n)});
    most = std::max(most, carried);
    if (tbs >= bits) break;
  }
  SubbandChoice choice;
  if (options.empty() || most <= 0) return choice;

  const long wanted = std::max(1L, std::min(bits, min_bits));
  const long fallback = std::max(1L, std::min({bits, rate_bits, most}));
  const long floor_bits = most >= wanted ? wanted : fallback;
  double best_ratio = 0.0;
  for (const Option& o : options) {
    if (o.carried >= floor_bits) best_ratio = std::max(best_ratio, o.ratio);
  }
  std::size_t pick = 0;
  long pick_carried = -1;
  for (std::size_t i = 0; i < options.size(); ++i) {
    const Option& o = options[i];
    if (o.carried < floor_bits || o.ratio < tolerance * best_ratio) continue;
    if (o.carried > pick_carried) {
      pick = i;
      pick_carried = o.carried;
    }
  }
  choice.subbands.assign(ranked.begin(), ranked.begin() + static_cast<long>(pick + 1));
  choice.mcs = options[pick].mcs;
  choice.tbs_bits = options[pick].tbs;
  return choice;
}

double ptp_weight(double quality, double age_s, double beta, double age_ref_s) {
  return quality * (1.0 + beta * std::max(age_s, 0.0) / age_ref_s);
}

std::vector<QueuedFrame> drop_stale(std::deque<QueuedFrame>& queue, long now_tti,
                                    double deadline_s, double tti_s) {
  std::vector<QueuedFrame> dropped;
  std::deque<QueuedFrame> kept;
  for (const QueuedFrame& f : queue) {
    const double age = static_cast<double>(now_tti - f.created_tti) * tti_s;
    if (age > deadline_s + 1e-12) {
      dropped.push_back(f);
    } else {
      kept.push_back(f);
    }
  }
  queue.swap(kept);
  return dropped;
}

void TdMinCqiGate::add_sample(double quality) {
  if (!calibrated_) samples_.push_back(quality);
}

void TdMinCqiGate::calibrate(double pct) {
  if (samples_.empty()) throw std::logic_error("min-CQI gate has no calibration samples");
  threshold_ = percentile(samples_, pct);
  calibrated_ = true;
  samples_.clear();
  samples_.shrink_to_fit();
}

void TdMinCqiGate::set_threshold(double threshold) {
  threshold_ = threshold;
  calibrated_ = true;
}

bool TdMinCqiGate::allowed(double aggregate_quality) const {
  return !calibrated_ || aggregate_quality >= threshold_;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

LoadController::LoadController(int num_subbands, double target, int window_ttis, double gain)
    : n_(num_subbands), target_(target), window_(window_ttis), gain_(gain) {}

double LoadController::window_load() const {
  if (history_.empty()) return 0.0;
  return static_cast<double>(window_sum_) / (static_cast<double>(history_.size()) * n_);
}

int LoadController::background_request(int foreground_used, int free_subbands) {
  const double want = target_ * n_ - foreground_used + gain_ * deficit_;
  const int whole = static_cast<int>(std::floor(std::max(want, 0.0)));
  return std::clamp(whole, 0, free_subbands);
}

void LoadController::record(int used_subbands) {
  history_.push_back(used_subbands);
  window_sum_ += used_subbands;
  while (static_cast<int>(history_.size()) > window_) {
    window_sum_ -= history_.front();
    history_.pop_front();
  }
  const double bound = static_cast<double>(n_) * window_;
  deficit_ = std::clamp(deficit_ + target_ * n_ - used_subbands, -bound, bound);
}

std::vector<int> background_order(Rng& rng, int num_subbands) {
  std::vector<int> order(num_subbands);
  std::iota(order.begin(), order.end(), 0);
  for (int i = num_subbands - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

}  // namespace mbms
