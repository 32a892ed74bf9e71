#include "mbms/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <variant>
#include <vector>

namespace mbms {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::Ptp: return "ptp";
    case Mode::PtmFixed: return "ptm-fixed";
    case Mode::PtmAdaptive: return "ptm-adaptive";
    case Mode::PtmAdaptiveMinCqi: return "ptm-adaptive-mincqi";
    case Mode::PtmNackOriented: return "ptm-nack-oriented";
  }
  return "?";
}

std::string_view to_string(FeedbackScheme scheme) {
  switch (scheme) {
    case FeedbackScheme::AckNackPeriodicCqi: return "ack_nack_periodic_cqi";
    case FeedbackScheme::ExclusiveNack: return "exclusive_nack";
    case FeedbackScheme::NackOriented: return "nack_oriented";
  }
  return "?";
}

Mode mode_from_string(std::string_view text) {
  for (Mode m : {Mode::Ptp, Mode::PtmFixed, Mode::PtmAdaptive, Mode::PtmAdaptiveMinCqi,
                 Mode::PtmNackOriented}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("mode: unknown value '" + std::string(text) +
                    "' (allowed: ptp, ptm-fixed, ptm-adaptive, ptm-adaptive-mincqi, "
                    "ptm-nack-oriented)");
}

FeedbackScheme scheme_from_string(std::string_view text) {
  for (FeedbackScheme s : {FeedbackScheme::AckNackPeriodicCqi, FeedbackScheme::ExclusiveNack,
                           FeedbackScheme::NackOriented}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("feedback_scheme: unknown value '" + std::string(text) +
                    "' (allowed: ack_nack_periodic_cqi, exclusive_nack, nack_oriented)");
}

long SimulationConfig::frame_bits() const {
  return std::lround(video_rate_kbps * frame_interval_ttis);  // kbps * ms = bits
}

FeedbackScheme SimulationConfig::effective_scheme() const {
  if (mode == Mode::PtmNackOriented) return FeedbackScheme::NackOriented;
  if (mode == Mode::Ptp) return FeedbackScheme::AckNackPeriodicCqi;
  if (feedback_scheme == FeedbackScheme::NackOriented) return FeedbackScheme::AckNackPeriodicCqi;
  return feedback_scheme;
}

namespace {

using Field = std::variant<double SimulationConfig::*, int SimulationConfig::*,
                           long SimulationConfig::*, std::uint64_t SimulationConfig::*,
                           bool SimulationConfig::*, std::string SimulationConfig::*,
                           Mode SimulationConfig::*, FeedbackScheme SimulationConfig::*>;

struct Key {
  std::string_view name;
  Field field;
  double lo;
  double hi;
  bool run_control = false;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<Key>& keys() {
  using C = SimulationConfig;
  static const std::vector<Key> table = {
      {"cell_radius_m", &C::cell_radius_m, 1e-3, 1e5},
      {"isd_factor", &C::isd_factor, 1.0, 10.0},
      {"antenna_max_gain_dbi", &C::antenna_max_gain_dbi, -10.0, 30.0},
      {"antenna_beamwidth_deg", &C::antenna_beamwidth_deg, 1.0, 360.0},
      {"antenna_max_attenuation_db", &C::antenna_max_attenuation_db, 0.0, 60.0},
      {"ue_speed_kmh", &C::ue_speed_kmh, 0.0, 500.0},
      {"heading_redraw_s", &C::heading_redraw_s, 1e-3, 1e6},
      {"mobility_update_ttis", &C::mobility_update_ttis, 1, 100000},
      {"pathloss_const_db", &C::pathloss_const_db, -100.0, 200.0},
      {"pathloss_slope_db", &C::pathloss_slope_db, 0.0, 100.0},
      {"shadowing_sigma_db", &C::shadowing_sigma_db, 0.0, 30.0},
      {"shadowing_site_correlation", &C::shadowing_site_correlation, 0.0, 1.0},
      {"bandwidth_mhz", &C::bandwidth_mhz, 0.1, 100.0},
      {"num_subbands", &C::num_subbands, 1, 32},
      {"subband_bandwidth_hz", &C::subband_bandwidth_hz, 1e3, 1e7},
      {"tx_power_w", &C::tx_power_w, 1e-3, 1e3},
      {"noise_figure_db", &C::noise_figure_db, 0.0, 30.0},
      {"carrier_ghz", &C::carrier_ghz, 0.1, 100.0},
      {"fading_sinusoids", &C::fading_sinusoids, 1, 256},
      {"mcs_table_file", &C::mcs_table_file, 0, 0},
      {"mi_alpha", &C::mi_alpha, 0.1, 1.0},
      {"bler_slope", &C::bler_slope, 0.1, 1000.0},
      {"target_bler", &C::target_bler, 1e-6, 0.5},
      {"re_per_subband", &C::re_per_subband, 1, 1000},
      {"ir_cap_factor", &C::ir_cap_factor, 1.0, 100.0},
      {"max_harq_tx", &C::max_harq_tx, 1, 8},
      {"harq_rtt_ttis", &C::harq_rtt_ttis, 1, 100},
      {"feedback_error_prob", &C::feedback_error_prob, 0.0, 0.5},
      {"feedback_scheme", &C::feedback_scheme, 0, 0},
      {"cqi_period_ttis", &C::cqi_period_ttis, 1, 10000},
      {"cqi_stale_ttis", &C::cqi_stale_ttis, 1, 100000},
      {"ue_max_power_dbm", &C::ue_max_power_dbm, -50.0, 50.0},
      {"nack_target_rx_dbm", &C::nack_target_rx_dbm, -200.0, 0.0},
      {"nack_detector_snr_db", &C::nack_detector_snr_db, -20.0, 100.0},
      {"nack_threshold_rel_db", &C::nack_threshold_rel_db, -100.0, 20.0},
      {"recovery_window", &C::recovery_window, 1, 10000},
      {"recovery_k_max", &C::recovery_k_max, 1, 10000},
      {"recovery_safety_step", &C::recovery_safety_step, 0, 14},
      {"age_weight_beta", &C::age_weight_beta, 0.0, 1e3},
      {"age_ref_s", &C::age_ref_s, 1e-3, 1e3},
      {"drop_deadline_s", &C::drop_deadline_s, 1e-3, 1e3},
      {"ptp_min_tb_bits", &C::ptp_min_tb_bits, 0, 1000000},
      {"ptp_floor_tb_bits", &C::ptp_floor_tb_bits, 0, 1000000},
      {"ptm_min_tb_bits", &C::ptm_min_tb_bits, 0, 1000000},
      {"ptm_floor_tb_bits", &C::ptm_floor_tb_bits, 0, 1000000},
      {"ptm_efficiency_tolerance", &C::ptm_efficiency_tolerance, 0.0, 1.0},
      {"ptp_efficiency_tolerance", &C::ptp_efficiency_tolerance, 0.0, 1.0},
      {"load_target", &C::load_target, 0.0, 1.0},
      {"load_window_ttis", &C::load_window_ttis, 1, 100000},
      {"load_gain", &C::load_gain, 0.0, 100.0},
      {"mincqi_percentile", &C::mincqi_percentile, 0.0, 100.0},
      {"mincqi_max_hold_ttis", &C::mincqi_max_hold_ttis, 0, 100000},
      {"fixed_ptm_transmissions", &C::fixed_ptm_transmissions, 1, 8},
      {"fixed_ptm_mcs", &C::fixed_ptm_mcs, -1, 63},
      {"fixed_ptm_usr_target", &C::fixed_ptm_usr_target, 0.0, 1.0},
      {"calibration_ttis", &C::calibration_ttis, 1000, 10000000},
      {"calibration_users_per_cell", &C::calibration_users_per_cell, 1, 1000},
      {"calibration_cache", &C::calibration_cache, 0, 0},
      {"video_rate_kbps", &C::video_rate_kbps, 1e-3, 1e5},
      {"frame_interval_ttis", &C::frame_interval_ttis, 1, 10000},
      {"mean_session_s", &C::mean_session_s, 1e-3, 1e6},
      {"playout_offset_s", &C::playout_offset_s, 0.0, 100.0},
      {"stall_wait_s", &C::stall_wait_s, 0.0, 100.0},
      {"wait_budget_s", &C::wait_budget_s, 0.0, 100.0},
      {"stall_budget_s", &C::stall_budget_s, 0.0, 100.0},
      {"loss_budget", &C::loss_budget, 0.0, 1.0},
      {"mode", &C::mode, 0, 0, true},
      {"users_per_cell", &C::users_per_cell, 1, 1000, true},
      {"seed", &C::seed, 0, kInf, true},
      {"duration_ttis", &C::duration_ttis, 0, 1e9, true},
      {"warmup_ttis", &C::warmup_ttis, 0, 1e9, true},
      {"max_sessions", &C::max_sessions, 0, 1e9, true},
      {"collect_worst_user_samples", &C::collect_worst_user_samples, 0, 1, true},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string range_text(const Key& k) {
  std::ostringstream os;
  os << "[" << k.lo << ", " << k.hi << "]";
  return os.str();
}

[[noreturn]] void bad_value(const Key& k, std::string_view value) {
  throw ConfigError(std::string(k.name) + ": invalid value '" + std::string(value) +
                    "' (allowed range " + range_text(k) + ")");
}

double parse_number(const Key& k, std::string_view value) {
  const std::string v(value);
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    bad_value(k, value);
  }
  if (pos != v.size() || !std::isfinite(x) || x < k.lo || x > k.hi) bad_value(k, value);
  return x;
}

template <class Int>
Int parse_integer(const Key& k, std::string_view value) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(k, value);
  const auto d = static_cast<double>(x);
  if (d < k.lo || d > k.hi) bad_value(k, value);
  return x;
}

std::string format_value(const SimulationConfig& cfg, const Key& k) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](auto member) {
        using T = std::decay_t<decltype(cfg.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          os << (cfg.*member ? "true" : "false");
        } else if constexpr (std::is_same_v<T, Mode> || std::is_same_v<T, FeedbackScheme>) {
          os << to_string(cfg.*member);
        } else {
          os << cfg.*member;
        }
      },
      k.field);
  return os.str();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

void apply_setting(SimulationConfig& cfg, std::string_view key, std::string_view value) {
  for (const Key& k : keys()) {
    if (k.name != key) continue;
    std::visit(
        [&](auto member) {
          using T = std::decay_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, double>) {
            cfg.*member = parse_number(k, value);
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true" || value == "1") {
              cfg.*member = true;
            } else if (value == "false" || value == "0") {
              cfg.*member = false;
            } else {
              throw ConfigError(std::string(k.name) + ": expected true or false, got '" +
                                std::string(value) + "'");
            }
          } else if constexpr (std::is_same_v<T, std::string>) {
            cfg.*member = std::string(value);
          } else if constexpr (std::is_same_v<T, Mode>) {
            cfg.*member = mode_from_string(value);
          } else if constexpr (std::is_same_v<T, FeedbackScheme>) {
            cfg.*member = scheme_from_string(value);
          } else {
            cfg.*member = parse_integer<T>(k, value);
          }
        },
        k.field);
    return;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

SimulationConfig parse_config(std::istream& in) {
  SimulationConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    apply_setting(cfg, trim(std::string_view(body).substr(0, eq)),
                  trim(std::string_view(body).substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void validate(const SimulationConfig& cfg) {
  for (const Key& k : keys()) {
    std::visit(
        [&](auto member) {
          using T = std::decay_t<decltype(cfg.*member)>;
          if constexpr (std::is_arithmetic_v<T> && !std::is_same_v<T, bool>) {
            const auto v = static_cast<double>(cfg.*member);
            if (!(v >= k.lo && v <= k.hi)) bad_value(k, format_value(cfg, k));
          }
        },
        k.field);
  }
  const double occupied_hz = cfg.num_subbands * cfg.subband_bandwidth_hz;
  if (occupied_hz > cfg.bandwidth_mhz * 1e6) {
    throw ConfigError("num_subbands: " + std::to_string(cfg.num_subbands) + " x " +
                      std::to_string(cfg.subband_bandwidth_hz) +
                      " Hz exceeds bandwidth_mhz");
  }
  if (cfg.frame_bits() <= 0) throw ConfigError("video_rate_kbps: frame size rounds to 0 bits");
}

std::string to_text(const SimulationConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) {
    out += k.name;
    out += " = ";
    out += format_value(cfg, k);
    out += '\n';
  }
  return out;
}

std::uint64_t radio_config_hash(const SimulationConfig& cfg) {
  std::string canon;
  for (const Key& k : keys()) {
    if (k.run_control || k.name == "calibration_cache" || k.name == "fixed_ptm_mcs") continue;
    canon += k.name;
    canon += '=';
    canon += format_value(cfg, k);
    canon += '\n';
  }
  return fnv1a(canon);
}

}  // namespace mbms
