#pragma once

#include <memory>
#include <string>

#include "mbms/config.hpp"
#include "mbms/link2sys.hpp"
#include "mbms/metrics.hpp"

namespace mbms {

/// One deterministic run: warm-up, then duration_ttis measured TTIs.
/// Classical PTM needs fixed_ptm_mcs >= 0; see run_simulation.
class Simulator {
 public:
  explicit Simulator(const SimulationConfig& cfg);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  RunResult run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Calibrates classical PTM when needed, then runs.
RunResult run_simulation(const SimulationConfig& cfg);

/// True when classical-PTM blocks of `n` subbands at `mcs` carry one frame per
/// frame interval within both the band and the HARQ process pipeline.
bool fixed_ptm_fits(const SimulationConfig& cfg, const LinkModel& link, int mcs, int n);

/// Subband count per classical-PTM block at `mcs`: among sizes that fit, the
/// fewest subband-TTIs per frame, preferring wider blocks on ties.
int fixed_ptm_subbands(const SimulationConfig& cfg, const LinkModel& link, int mcs);

struct CalibrationResult {
  int mcs = 0;
  int subbands = 0;
  double usr = 0.0;
  bool from_cache = false;
};

/// Least robust MCS whose classical-PTM run reaches the USR target, searched
/// by bisection above fixed_ptm_min_mcs on a seed derived from the radio configuration. Results are
/// cached in cfg.calibration_cache when set. Throws ConfigError if even the
/// most robust MCS misses the target.
CalibrationResult calibrate_fixed_ptm(const SimulationConfig& cfg);

/// Most robust MCS whose blocks still fit the band and the HARQ pipeline
/// within one frame interval; the lower end of the calibration search.
int fixed_ptm_min_mcs(const SimulationConfig& cfg);

/// USR of one classical-PTM calibration run at `mcs`.
double fixed_ptm_usr(const SimulationConfig& cfg, int mcs);

}  // namespace mbms
