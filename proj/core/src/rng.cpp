#include "stcov/rng.hpp"

#include <cmath>
#include <numbers>

namespace stcov {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed ^ 0x5ca1ab1e0ddba11ULL);
  for (std::uint64_t step : path) h = mix64(h ^ mix64(step + 0x632be59bd9b4e019ULL));
  return h;
}

CounterRng::result_type CounterRng::operator()() noexcept {
  // Two rounds decorrelate neighbouring keys as well as neighbouring counters.
  const std::uint64_t c = counter_++;
  return mix64(mix64(key_ ^ (c * 0xd1b54a32d192ed03ULL)) + c);
}

double CounterRng::uniform() noexcept {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

void CounterRng::fill_normal(std::span<double> out) noexcept {
  for (double& v : out) v = normal();
}

}  // namespace stcov
