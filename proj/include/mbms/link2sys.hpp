#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mbms {

struct SimulationConfig;

struct McsEntry {
  int index = 0;
  int modulation_order = 2;  // bits per symbol
  double code_rate = 0.0;
  double spectral_efficiency = 0.0;  // modulation_order * code_rate
  /// Mutual information in bits/symbol at which the block error rate is 0.5.
  double mi_threshold = 0.0;

  /// Threshold expressed per modulation bit, the unit of the BLER model.
  double normalized_threshold() const { return mi_threshold / modulation_order; }
};

class McsTable {
 public:
  McsTable() = default;
  explicit McsTable(std::vector<McsEntry> entries);

  /// Fifteen LTE-CQI-like entries, QPSK r=0.076 up to 64QAM r=0.926.
  static McsTable standard();
  /// Lines of `index modulation_order code_rate mi_threshold`; `#` comments.
  static McsTable parse(std::istream& in);
  static McsTable load(const std::string& path);

  int size() const { return static_cast<int>(entries_.size()); }
  const McsEntry& operator[](int i) const { return entries_[i]; }
  const std::vector<McsEntry>& entries() const { return entries_; }

 private:
  std::vector<McsEntry> entries_;
};

/// CQI 0 means out of range; CQI c >= 1 names MCS index c - 1.
constexpr int mcs_for_cqi(int cqi) { return cqi - 1; }
constexpr int cqi_for_mcs(int mcs) { return mcs + 1; }

struct CqiReport {
  long ue_id = -1;
  long tti = -1;
  std::vector<std::uint8_t> cqi;
  bool wideband = false;

  bool valid() const { return tti >= 0 && !cqi.empty(); }
};

/// Mean CQI across subbands: the scalar channel quality of a report.
double wideband_quality(std::span<const std::uint8_t> cqi);

struct McsSelection {
  int mcs = 0;
  bool below_range = false;  // even the most robust entry misses the target
};

class LinkModel {
 public:
  LinkModel() : LinkModel(McsTable::standard()) {}
  explicit LinkModel(McsTable table, double mi_alpha = 0.9, double bler_slope = 20.0,
                     double target_bler = 0.1, int re_per_subband = 120,
                     double ir_cap_factor = 2.0);

  static LinkModel from_config(const SimulationConfig& cfg);

  const McsTable& table() const { return table_; }
  int num_mcs() const { return table_.size(); }
  int max_cqi() const { return table_.size(); }
  double target_bler() const { return target_bler_; }
  double bler_slope() const { return slope_; }
  int re_per_subband() const { return re_per_subband_; }

  /// Capped-Shannon mutual information in bits/symbol, bounded by the modulation.
  double sinr_to_mi(double sinr, int modulation_order) const;
  /// Mutual information per modulation bit, in [0, 1].
  double normalized_mi(double sinr, const McsEntry& mcs) const;
  /// Logistic BLER over accumulated normalized MI.
  double bler(double mi_norm, const McsEntry& mcs) const;
  /// Incremental-redundancy combining: additive, capped at
  /// max(ir_cap_factor * threshold, 1).
  double accumulate_ir(double accumulated, double attempt_mi, const McsEntry& mcs) const;
  double ir_cap(const McsEntry& mcs) const;

  /// Lowest SINR at which `mcs` meets the BLER target (infinity if never).
  double sinr_threshold(int mcs) const { return sinr_at_target_[mcs]; }
  /// SINR that stands in for a CQI value when predicting BLER.
  double representative_sinr(int cqi) const { return representative_[cqi]; }

  /// Per-subband CQI from measured SINR.
  CqiReport compute_cqi(std::span<const double> sinr, long ue_id = -1, long tti = -1) const;
  int cqi_for_sinr(double sinr) const;

  /// Mean normalized MI of `mcs` across the given per-subband CQIs.
  double predicted_mi(std::span<const std::uint8_t> cqi, std::span<const int> subbands,
                      int mcs) const;
  /// Highest-efficiency MCS whose predicted single-attempt BLER over the
  /// assigned subbands meets the target.
  McsSelection select_mcs(std::span<const std::uint8_t> cqi, std::span<const int> subbands) const;

  long transport_block_size(int mcs, int num_subbands) const;

 private:
  McsTable table_;
  double alpha_;
  double slope_;
  double target_bler_;
  int re_per_subband_;
  double ir_cap_factor_;
  std::vector<double> sinr_at_target_;
  std::vector<double> representative_;
  std::vector<double> representative_mi_;  // [cqi][mcs]
};

}  // namespace mbms
