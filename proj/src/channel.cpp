#include "mbms/channel.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

namespace mbms {

double path_loss_db(double distance_m, double constant_db, double slope_db) {
  return constant_db + slope_db * std::log10(std::max(distance_m, 1.0));
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_w(double dbm) { return db_to_linear(dbm - 30.0); }

double noise_power_w(double bandwidth_hz, double noise_figure_db) {
  return dbm_to_w(-174.0 + linear_to_db(bandwidth_hz) + noise_figure_db);
}

std::vector<double> draw_shadowing(Rng& rng, int num_sites, double sigma_db,
                                   double site_correlation) {
  const double common = rng.normal();
  const double a = std::sqrt(site_correlation);
  const double b = std::sqrt(1.0 - site_correlation);
  std::vector<double> out(num_sites);
  for (double& v : out) v = sigma_db * (a * common + b * rng.normal());
  return out;
}

std::vector<double> subband_offsets_hz(int num_subbands, double subband_bandwidth_hz) {
  std::vector<double> f(num_subbands);
  const double centre = 0.5 * (num_subbands - 1);
  for (int s = 0; s < num_subbands; ++s) f[s] = (s - centre) * subband_bandwidth_hz;
  return f;
}

double doppler_hz(double speed_mps, double carrier_hz) {
  return speed_mps * carrier_hz / 299792458.0;
}

FastFading::FastFading(Rng& rng, const TapProfile& profile, double max_doppler_hz,
                       std::span<const double> subband_offsets, int sinusoids)
    : sinusoids_(sinusoids) {
  double total = 0.0;
  for (double p : profile.power_db) total += db_to_linear(p);

  omega_.resize(kTaps * sinusoids_);
  phase_.resize(kTaps * sinusoids_);
  for (int l = 0; l < kTaps; ++l) {
    amplitude_[l] = std::sqrt(db_to_linear(profile.power_db[l]) / total / sinusoids_);
    for (int n = 0; n < sinusoids_; ++n) {
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      omega_[l * sinusoids_ + n] = 2.0 * std::numbers::pi * max_doppler_hz * std::cos(angle);
      phase_[l * sinusoids_ + n] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
  }

  steering_.resize(subband_offsets.size() * kTaps);
  for (std::size_t s = 0; s < subband_offsets.size(); ++s) {
    for (int l = 0; l < kTaps; ++l) {
      const double arg = -2.0 * std::numbers::pi * subband_offsets[s] * profile.delay_s[l];
      steering_[s * kTaps + l] = std::polar(1.0, arg);
    }
  }
}

std::complex<double> FastFading::tap(int index, double t_s) const {
  double re = 0.0;
  double im = 0.0;
  const double* w = &omega_[index * sinusoids_];
  const double* p = &phase_[index * sinusoids_];
  for (int n = 0; n < sinusoids_; ++n) {
    const double arg = w[n] * t_s + p[n];
    re += std::cos(arg);
    im += std::sin(arg);
  }
  return {amplitude_[index] * re, amplitude_[index] * im};
}

void FastFading::power_gains(double t_s, std::span<double> out) const {
  std::array<std::complex<double>, kTaps> h;
  for (int l = 0; l < kTaps; ++l) h[l] = tap(l, t_s);
  combine(h, out);
}

void FastFading::power_gains_at(long tti, double tti_s, std::span<double> out) {
  const std::size_t total = omega_.size();
  if (rotation_dt_ != tti_s || rotation_.size() != total) {
    rotation_.resize(total);
    for (std::size_t k = 0; k < total; ++k) rotation_[k] = std::polar(1.0, omega_[k] * tti_s);
    rotation_dt_ = tti_s;
    cached_tti_ = -1;
  }
  if (cached_tti_ >= 0 && tti == cached_tti_ + 1) {
    for (std::size_t k = 0; k < total; ++k) phasor_[k] *= rotation_[k];
  } else if (tti != cached_tti_) {
    phasor_.resize(total);
    const double t = static_cast<double>(tti) * tti_s;
    for (std::size_t k = 0; k < total; ++k) phasor_[k] = std::polar(1.0, omega_[k] * t + phase_[k]);
  }
  cached_tti_ = tti;
  std::array<std::complex<double>, kTaps> h;
  for (int l = 0; l < kTaps; ++l) {
    std::complex<double> acc{};
    for (int n = 0; n < sinusoids_; ++n) acc += phasor_[l * sinusoids_ + n];
    h[l] = amplitude_[l] * acc;
  }
  combine(h, out);
}

void FastFading::combine(const std::array<std::complex<double>, kTaps>& h,
                         std::span<double> out) const {
  assert(out.size() * kTaps == steering_.size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    std::complex<double> acc{};
    const std::complex<double>* e = &steering_[s * kTaps];
    for (int l = 0; l < kTaps; ++l) acc += h[l] * e[l];
    out[s] = std::norm(acc);
  }
}

void compute_sinr(std::span<const double> mean_gain, int serving_cell,
                  std::span<const double> fading, std::span<const std::uint32_t> activity,
                  double subband_power_w, double noise_w, std::span<double> out) {
  const int num_subbands = static_cast<int>(out.size());
  for (int s = 0; s < num_subbands; ++s) out[s] = noise_w;
  for (std::size_t c = 0; c < mean_gain.size(); ++c) {
    if (static_cast<int>(c) == serving_cell) continue;
    const std::uint32_t mask = c < activity.size() ? activity[c] : 0u;
    if (mask == 0u) continue;
    const double rx = subband_power_w * mean_gain[c];
    for (int s = 0; s < num_subbands; ++s) {
      if (mask & (1u << s)) out[s] += rx;
    }
  }
  const double signal = subband_power_w * mean_gain[serving_cell];
  for (int s = 0; s < num_subbands; ++s) out[s] = signal * fading[s] / out[s];
}

}  // namespace mbms
