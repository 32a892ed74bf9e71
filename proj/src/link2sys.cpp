#include "mbms/link2sys.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mbms/config.hpp"

namespace mbms {

namespace {
constexpr double kBlerTolerance = 1e-9;
}

McsTable::McsTable(std::vector<McsEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw std::invalid_argument("MCS table is empty");
  if (entries_.size() > 31) throw std::invalid_argument("MCS table exceeds 31 entries");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    McsEntry& e = entries_[i];
    if (e.index != static_cast<int>(i)) {
      throw std::invalid_argument("MCS table: indices must run 0..n-1 in order");
    }
    if (e.modulation_order != 2 && e.modulation_order != 4 && e.modulation_order != 6) {
      throw std::invalid_argument("MCS table: modulation order must be 2, 4 or 6");
    }
    if (!(e.code_rate > 0.0 && e.code_rate < 1.0)) {
      throw std::invalid_argument("MCS table: code rate must lie in (0, 1)");
    }
    if (!(e.mi_threshold > 0.0 && e.mi_threshold < e.modulation_order)) {
      throw std::invalid_argument("MCS table: MI threshold must lie in (0, modulation order)");
    }
    e.spectral_efficiency = e.modulation_order * e.code_rate;
    if (i > 0) {
      const McsEntry& prev = entries_[i - 1];
      if (e.spectral_efficiency <= prev.spectral_efficiency ||
          e.mi_threshold <= prev.mi_threshold) {
        throw std::invalid_argument(
            "MCS table: efficiency and MI threshold must increase strictly with index");
      }
    }
  }
}

McsTable McsTable::standard() {
  struct Row {
    int m;
    int rate_x1024;
  };
  static constexpr Row rows[] = {{2, 78},  {2, 120}, {2, 193}, {2, 308}, {2, 449},
                                 {2, 602}, {4, 378}, {4, 490}, {4, 616}, {6, 466},
                                 {6, 567}, {6, 666}, {6, 772}, {6, 873}, {6, 948}};
  std::vector<McsEntry> entries;
  int index = 0;
  for (const Row& r : rows) {
    McsEntry e;
    e.index = index++;
    e.modulation_order = r.m;
    e.code_rate = r.rate_x1024 / 1024.0;
    // Half-BLER point 5 % below the code rate, per modulation bit.
    e.mi_threshold = 0.95 * r.m * e.code_rate;
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

McsTable McsTable::parse(std::istream& in) {
  std::vector<McsEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    McsEntry e;
    if (!(fields >> e.index)) continue;
    if (!(fields >> e.modulation_order >> e.code_rate >> e.mi_threshold)) {
      throw std::invalid_argument("MCS table: malformed line '" + line + "'");
    }
    entries.push_back(e);
  }
  return McsTable(std::move(entries));
}

McsTable McsTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open MCS table '" + path + "'");
  return parse(in);
}

double wideband_quality(std::span<const std::uint8_t> cqi) {
  if (cqi.empty()) return 0.0;
  const double sum = std::accumulate(cqi.begin(), cqi.end(), 0.0);
  return sum / static_cast<double>(cqi.size());
}

LinkModel::LinkModel(McsTable table, double mi_alpha, double bler_slope, double target_bler,
                     int re_per_subband, double ir_cap_factor)
    : table_(std::move(table)),
      alpha_(mi_alpha),
      slope_(bler_slope),
      target_bler_(target_bler),
      re_per_subband_(re_per_subband),
      ir_cap_factor_(ir_cap_factor) {
  const int n = table_.size();
  // Invert the logistic and the capped-Shannon curve for the target point.
  const double margin = std::log((1.0 - target_bler_) / target_bler_) / slope_;
  sinr_at_target_.resize(n);
  for (int i = 0; i < n; ++i) {
    const McsEntry& e = table_[i];
    const double mi_norm = e.normalized_threshold() + margin;
    sinr_at_target_[i] = mi_norm >= 1.0
                             ? std::numeric_limits<double>::infinity()
                             : std::exp2(mi_norm * e.modulation_order / alpha_) - 1.0;
    if (i > 0 && !(sinr_at_target_[i] > sinr_at_target_[i - 1])) {
      throw std::invalid_argument("MCS table: target SINR must increase with index");
    }
  }

  representative_.resize(n + 1);
  representative_[0] = 0.5 * sinr_at_target_[0];
  for (int c = 1; c <= n; ++c) representative_[c] = sinr_at_target_[mcs_for_cqi(c)];

  representative_mi_.resize(static_cast<std::size_t>(n + 1) * n);
  for (int c = 0; c <= n; ++c) {
    for (int m = 0; m < n; ++m) {
      representative_mi_[c * n + m] = normalized_mi(representative_[c], table_[m]);
    }
  }
}

LinkModel LinkModel::from_config(const SimulationConfig& cfg) {
  McsTable table = cfg.mcs_table_file.empty() ? McsTable::standard()
                                              : McsTable::load(cfg.mcs_table_file);
  return LinkModel(std::move(table), cfg.mi_alpha, cfg.bler_slope, cfg.target_bler,
                   cfg.re_per_subband, cfg.ir_cap_factor);
}

double LinkModel::sinr_to_mi(double sinr, int modulation_order) const {
  if (!(sinr > 0.0)) return 0.0;
  return std::min(alpha_ * std::log2(1.0 + sinr), static_cast<double>(modulation_order));
}

double LinkModel::normalized_mi(double sinr, const McsEntry& mcs) const {
  return sinr_to_mi(sinr, mcs.modulation_order) / mcs.modulation_order;
}

double LinkModel::bler(double mi_norm, const McsEntry& mcs) const {
  return 1.0 / (1.0 + std::exp(slope_ * (mi_norm - mcs.normalized_threshold())));
}

double LinkModel::ir_cap(const McsEntry& mcs) const {
  return std::max(ir_cap_factor_ * mcs.normalized_threshold(), 1.0);
}

double LinkModel::accumulate_ir(double accumulated, double attempt_mi,
                                const McsEntry& mcs) const {
  return std::min(accumulated + attempt_mi, ir_cap(mcs));
}

int LinkModel::cqi_for_sinr(double sinr) const {
  // Thresholds increase with index, so the count of satisfied entries is the CQI.
  const auto it = std::upper_bound(sinr_at_target_.begin(), sinr_at_target_.end(), sinr);
  return static_cast<int>(it - sinr_at_target_.begin());
}

CqiReport LinkModel::compute_cqi(std::span<const double> sinr, long ue_id, long tti) const {
  CqiReport report;
  report.ue_id = ue_id;
  report.tti = tti;
  report.cqi.resize(sinr.size());
  for (std::size_t s = 0; s < sinr.size(); ++s) {
    report.cqi[s] = static_cast<std::uint8_t>(cqi_for_sinr(sinr[s]));
  }
  return report;
}

double LinkModel::predicted_mi(std::span<const std::uint8_t> cqi, std::span<const int> subbands,
                               int mcs) const {
  const int n = table_.size();
  double sum = 0.0;
  for (int s : subbands) sum += representative_mi_[cqi[s] * n + mcs];
  return sum / static_cast<double>(subbands.size());
}

McsSelection LinkModel::select_mcs(std::span<const std::uint8_t> cqi,
                                   std::span<const int> subbands) const {
  if (subbands.empty()) throw std::invalid_argument("select_mcs: no subbands assigned");
  for (int m = table_.size() - 1; m >= 0; --m) {
    if (bler(predicted_mi(cqi, subbands, m), table_[m]) <= target_bler_ + kBlerTolerance) {
      return {m, false};
    }
  }
  return {0, true};
}

long LinkModel::transport_block_size(int mcs, int num_subbands) const {
  return static_cast<long>(
      std::floor(table_[mcs].spectral_efficiency * re_per_subband_ * num_subbands + 1e-9));
}

}  // namespace mbms
