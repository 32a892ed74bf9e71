#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mbms {

enum class Mode {
  Ptp,
  PtmFixed,
  PtmAdaptive,
  PtmAdaptiveMinCqi,
  PtmNackOriented,
};

enum class FeedbackScheme {
  AckNackPeriodicCqi,
  ExclusiveNack,
  NackOriented,
};

std::string_view to_string(Mode mode);
std::string_view to_string(FeedbackScheme scheme);
Mode mode_from_string(std::string_view text);
FeedbackScheme scheme_from_string(std::string_view text);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every tunable of a run. Defaults reproduce the reference scenario: a
/// 21-cell wraparound layout, 5 MHz downlink with 25 subbands, 128 kbps video.
struct SimulationConfig {
  // layout and mobility
  double cell_radius_m = 500.0;
  double isd_factor = 3.0;  // inter-site distance = isd_factor * cell_radius_m
  double antenna_max_gain_dbi = 14.0;
  double antenna_beamwidth_deg = 70.0;
  double antenna_max_attenuation_db = 20.0;
  double ue_speed_kmh = 3.0;
  double heading_redraw_s = 5.0;
  int mobility_update_ttis = 100;

  // propagation
  double pathloss_const_db = 29.03;
  double pathloss_slope_db = 35.2;
  double shadowing_sigma_db = 8.0;
  double shadowing_site_correlation = 0.5;
  double bandwidth_mhz = 5.0;
  int num_subbands = 25;
  double subband_bandwidth_hz = 180e3;
  double tx_power_w = 20.0;
  double noise_figure_db = 8.0;
  double carrier_ghz = 2.0;
  int fading_sinusoids = 16;

  // link-to-system
  std::string mcs_table_file;  // empty: built-in table
  double mi_alpha = 0.9;
  double bler_slope = 40.0;
  double target_bler = 0.1;
  int re_per_subband = 144;
  double ir_cap_factor = 2.0;

  // HARQ and feedback
  int max_harq_tx = 8;
  int harq_rtt_ttis = 8;
  double feedback_error_prob = 1e-3;
  FeedbackScheme feedback_scheme = FeedbackScheme::AckNackPeriodicCqi;
  int cqi_period_ttis = 10;
  int cqi_stale_ttis = 100;
  double ue_max_power_dbm = 23.0;
  double nack_target_rx_dbm = -100.0;
  double nack_detector_snr_db = 40.0;
  double nack_threshold_rel_db = -30.0;
  int recovery_window = 20;
  int recovery_k_max = 10;
  int recovery_safety_step = 1;

  // scheduling
  double age_weight_beta = 1.0;
  double age_ref_s = 0.25;
  double drop_deadline_s = 1.0;
  long ptp_min_tb_bits = 3200;
  long ptp_floor_tb_bits = 3200;
  long ptm_min_tb_bits = 3200;
  long ptm_floor_tb_bits = 3200;
  double ptm_efficiency_tolerance = 0.8;
  double ptp_efficiency_tolerance = 0.8;
  double load_target = 0.7;
  int load_window_ttis = 100;
  double load_gain = 1.0;
  double mincqi_percentile = 5.0;
  int mincqi_max_hold_ttis = 150;
  int fixed_ptm_transmissions = 5;
  int fixed_ptm_mcs = -1;  // -1: calibrate before the run
  double fixed_ptm_usr_target = 0.96;
  int calibration_ttis = 20000;
  int calibration_users_per_cell = 24;
  std::string calibration_cache;

  // traffic and QoE
  double video_rate_kbps = 128.0;
  int frame_interval_ttis = 100;
  double mean_session_s = 30.0;
  double playout_offset_s = 0.3;
  double stall_wait_s = 0.2;
  double wait_budget_s = 0.5;
  double stall_budget_s = 0.5;
  double loss_budget = 0.01;

  // run control
  Mode mode = Mode::PtmAdaptive;
  int users_per_cell = 2;
  std::uint64_t seed = 1;
  long duration_ttis = 60000;
  long warmup_ttis = 2000;
  long max_sessions = 0;  // 0: run for duration_ttis only
  bool collect_worst_user_samples = false;

  static constexpr int kNumCells = 21;
  static constexpr double kTtiSeconds = 1e-3;

  int population() const { return users_per_cell * kNumCells; }
  double isd_m() const { return isd_factor * cell_radius_m; }
  double ue_speed_mps() const { return ue_speed_kmh / 3.6; }
  double subband_power_w() const { return tx_power_w / num_subbands; }
  long frame_bits() const;
  /// Scheme actually used by the MBMS group in this mode.
  FeedbackScheme effective_scheme() const;
};

/// Applies one `key = value` assignment. Unknown keys and out-of-range values
/// raise ConfigError naming the key and the accepted range.
void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value);

/// Parses flat `key = value` text with `#` comments, starting from defaults.
SimulationConfig parse_config(std::istream& in);
SimulationConfig load_config(const std::string& path);

/// Cross-field checks; throws ConfigError.
void validate(const SimulationConfig& cfg);

/// Canonical `key = value` dump, one line per key in a fixed order.
std::string to_text(const SimulationConfig& cfg);

/// FNV-1a over the canonical dump of every key except run controls.
std::uint64_t radio_config_hash(const SimulationConfig& cfg);

}  // namespace mbms
