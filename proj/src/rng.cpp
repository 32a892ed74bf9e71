#include "mbms/rng.hpp"

#include <cmath>
#include <numbers>

namespace mbms {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t master_seed, Stream stream, std::uint64_t entity) {
  std::uint64_t k = splitmix64(master_seed);
  k = splitmix64(k ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ULL));
  key_ = splitmix64(k ^ splitmix64(entity + 0x632BE59BD9B4E019ULL));
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return splitmix64(key_ + counter_ * kGamma);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Lemire's multiply-shift; bias is < n / 2^64 and irrelevant here.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::normal() {
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::exponential(double mean) {
  // Midpoint sampling keeps u strictly inside (0, 1): draws are finite and > 0.
  const double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  return -mean * std::log(u);
}

}  // namespace mbms
