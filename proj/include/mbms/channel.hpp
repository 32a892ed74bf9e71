#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "mbms/rng.hpp"

namespace mbms {

/// Distance attenuation `constant + slope * log10(d)`, d clamped to >= 1 m.
double path_loss_db(double distance_m, double constant_db = 29.03, double slope_db = 35.2);

/// Thermal noise (-174 dBm/Hz) over `bandwidth_hz` raised by the noise figure, in W.
double noise_power_w(double bandwidth_hz, double noise_figure_db);

double db_to_linear(double db);
double linear_to_db(double lin);
double dbm_to_w(double dbm);

/// Per-site shadowing in dB: Gaussian, zero mean, `sigma_db` spread, with
/// correlation `site_correlation` between any two sites of the same UE.
std::vector<double> draw_shadowing(Rng& rng, int num_sites, double sigma_db,
                                   double site_correlation);

/// 3GPP Typical Urban six-tap power-delay profile.
struct TapProfile {
  std::array<double, 6> delay_s{0.0, 0.2e-6, 0.5e-6, 1.6e-6, 2.3e-6, 5.0e-6};
  std::array<double, 6> power_db{-3.0, 0.0, -2.0, -6.0, -8.0, -10.0};
};

/// Subband centre frequencies relative to the carrier, in Hz.
std::vector<double> subband_offsets_hz(int num_subbands, double subband_bandwidth_hz);

double doppler_hz(double speed_mps, double carrier_hz);

/// Time-correlated frequency-selective Rayleigh fading for one link. Each tap
/// is a sum of `sinusoids` random-angle Doppler components, so its
/// autocorrelation converges to J0(2 pi f_d tau); the state is a closed-form
/// function of time and can be sampled at any TTI.
class FastFading {
 public:
  FastFading() = default;
  FastFading(Rng& rng, const TapProfile& profile, double max_doppler_hz,
             std::span<const double> subband_offsets, int sinusoids);

  /// Per-subband power gains |H(f_s, t)|^2, long-run mean 1.
  void power_gains(double t_s, std::span<double> out) const;
  /// Same as power_gains at t = tti * tti_s; consecutive TTIs rotate the
  /// cached Doppler phasors instead of re-evaluating them.
  void power_gains_at(long tti, double tti_s, std::span<double> out);
  /// Complex response of one tap at time t.
  std::complex<double> tap(int index, double t_s) const;

  int num_subbands() const { return static_cast<int>(steering_.size() / kTaps); }

 private:
  static constexpr int kTaps = 6;
  int sinusoids_ = 0;
  std::vector<double> omega_;   // [tap][n] angular Doppler frequency
  std::vector<double> phase_;   // [tap][n]
  std::array<double, kTaps> amplitude_{};  // sqrt(p_l / M)
  std::vector<std::complex<double>> steering_;  // [subband][tap] exp(-j 2 pi f tau)
  std::vector<std::complex<double>> phasor_;    // [tap][n] at cached_tti_
  std::vector<std::complex<double>> rotation_;  // [tap][n] one-TTI advance
  long cached_tti_ = -1;
  double rotation_dt_ = 0.0;

  void combine(const std::array<std::complex<double>, kTaps>& h, std::span<double> out) const;
};

/// Per-subband linear SINR for one TTI.
struct SubbandSinr {
  long tti = 0;
  std::vector<double> values;
};

/// SINR on every subband of the serving cell. `mean_gain` holds the linear
/// large-scale gain (pathloss, shadowing, antenna) towards each cell,
/// `fading` the serving-link power gains, and `activity` one bit per subband
/// for every cell that transmitted in the reference TTI. Interferers add
/// their mean received power on each subband where their bit is set.
void compute_sinr(std::span<const double> mean_gain, int serving_cell,
                  std::span<const double> fading, std::span<const std::uint32_t> activity,
                  double subband_power_w, double noise_w, std::span<double> out);

}  // namespace mbms
