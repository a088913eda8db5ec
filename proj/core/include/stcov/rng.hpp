#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace stcov {

/// Counter-based generator: draw k is a fixed hash of (key, k), so a stream is
/// fully determined by its key and independent of how work is scheduled.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller, both outputs used).
  double normal() noexcept;
  void fill_normal(std::span<double> out) noexcept;

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix64(std::uint64_t x) noexcept;

/// Substream key for a path of indices below a master seed, e.g.
/// derive_stream(seed, {replicate, role, member}).
[[nodiscard]] std::uint64_t derive_stream(std::uint64_t seed,
                                          std::initializer_list<std::uint64_t> path) noexcept;

}  // namespace stcov
