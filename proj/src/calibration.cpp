#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "mbms/engine.hpp"
#include "mbms/rng.hpp"

namespace mbms {

namespace {

SimulationConfig calibration_config(const SimulationConfig& cfg, int mcs) {
  SimulationConfig c = cfg;
  c.mode = Mode::PtmFixed;
  c.fixed_ptm_mcs = mcs;
  c.users_per_cell = cfg.calibration_users_per_cell;
  c.duration_ttis = cfg.calibration_ttis;
  c.seed = splitmix64(radio_config_hash(cfg) ^ 0x6361'6c69'6272'6174ULL);
  c.max_sessions = 0;
  c.collect_worst_user_samples = false;
  return c;
}

std::string hash_key(const SimulationConfig& cfg) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << radio_config_hash(cfg);
  return os.str();
}

bool read_cache(const SimulationConfig& cfg, CalibrationResult& out) {
  if (cfg.calibration_cache.empty()) return false;
  std::ifstream in(cfg.calibration_cache);
  if (!in) return false;
  const std::string key = hash_key(cfg);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string k;
    CalibrationResult r;
    if (!(fields >> k >> r.mcs >> r.subbands >> r.usr)) continue;
    if (k == key) {
      r.from_cache = true;
      out = r;
      return true;
    }
  }
  return false;
}

void write_cache(const SimulationConfig& cfg, const CalibrationResult& r) {
  if (cfg.calibration_cache.empty()) return;
  std::ofstream out(cfg.calibration_cache, std::ios::app);
  if (!out) return;
  out << hash_key(cfg) << ' ' << r.mcs << ' ' << r.subbands << ' ' << std::setprecision(6)
      << r.usr << '\n';
}

}  // namespace

int fixed_ptm_min_mcs(const SimulationConfig& cfg) {
  const LinkModel link = LinkModel::from_config(cfg);
  for (int m = 0; m < link.num_mcs(); ++m) {
    if (fixed_ptm_fits(cfg, link, m, fixed_ptm_subbands(cfg, link, m))) return m;
  }
  return link.num_mcs() - 1;
}

double fixed_ptm_usr(const SimulationConfig& cfg, int mcs) {
  const RunResult r = Simulator(calibration_config(cfg, mcs)).run();
  return r.metrics.usr.value_or(0.0);
}

CalibrationResult calibrate_fixed_ptm(const SimulationConfig& cfg) {
  CalibrationResult r;
  if (read_cache(cfg, r)) return r;

  const LinkModel link = LinkModel::from_config(cfg);
  const double target = cfg.fixed_ptm_usr_target;
  auto passes = [&](int mcs, double& usr) {
    usr = fixed_ptm_usr(cfg, mcs);
    return usr >= target;
  };

  const int floor_mcs = fixed_ptm_min_mcs(cfg);
  double usr = 0.0;
  if (!passes(floor_mcs, usr)) {
    throw ConfigError("classical PTM calibration infeasible: USR " + std::to_string(usr) +
                      " at MCS " + std::to_string(floor_mcs) + " is below " +
                      std::to_string(target));
  }
  int lo = floor_mcs;
  double lo_usr = usr;
  int hi = link.num_mcs();  // first failing index (exclusive bound)
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (passes(mid, usr)) {
      lo = mid;
      lo_usr = usr;
    } else {
      hi = mid;
    }
  }
  r.mcs = lo;
  r.subbands = fixed_ptm_subbands(cfg, link, lo);
  r.usr = lo_usr;
  write_cache(cfg, r);
  return r;
}

}  // namespace mbms
