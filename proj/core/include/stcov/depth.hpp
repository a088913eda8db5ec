#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stcov/simfield.hpp"

namespace stcov {

// Band depth with J = 2 over all C(N,2) pairs of distinct curves. A curve on
// the boundary of a band counts as inside it. Curves are the rows of the
// matrix, sampled on a common grid (the columns).

/// Per-curve integer tallies behind the depth values.
struct DepthCounts {
  std::vector<std::int64_t> bands;  // pairs whose band contains the curve everywhere
  std::vector<std::int64_t> hits;   // (pair, grid point) combinations inside the band
  std::int64_t pairs = 0;           // C(N, 2)
  std::int64_t grid = 0;            // T
};

/// Exhaustive pair enumeration, O(N^3 T). Reference implementation.
[[nodiscard]] DepthCounts depth_counts_direct(const RowMatrix& curves);

/// Band counts by enumeration, hit counts from pointwise ranks:
/// hits(c, t) = C(N,2) - C(below,2) - C(above,2).
[[nodiscard]] DepthCounts depth_counts(const RowMatrix& curves);

[[nodiscard]] std::vector<double> band_depth(const RowMatrix& curves);
[[nodiscard]] std::vector<double> modified_band_depth(const RowMatrix& curves);

struct DepthRanking {
  std::vector<double> bd;
  std::vector<double> mbd;
  std::vector<std::size_t> order;  // deepest first: bd desc, mbd desc, index asc
};

[[nodiscard]] DepthRanking rank_curves(const RowMatrix& curves);

/// Indices sorted by MBD descending, index ascending on ties.
[[nodiscard]] std::vector<std::size_t> mbd_order(const DepthCounts& counts);

/// Where a new curve x falls when pooled with a fixed reference sample.
struct PoolPosition {
  std::size_t below = 0;  // reference curves after x in the BD-then-MBD order
  bool tied = false;      // some reference curve had the same BD and MBD as x
};

/// Answers "pool x with the reference and rank" queries without rebuilding
/// the pooled depth from scratch. In the pool x takes index 0, so reference
/// curves fully tied with x are ordered after it.
class ReferenceDepthIndex {
 public:
  explicit ReferenceDepthIndex(RowMatrix reference);

  [[nodiscard]] PoolPosition locate(std::span<const double> x) const;
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(ref_.rows()); }
  [[nodiscard]] std::size_t grid() const { return static_cast<std::size_t>(ref_.cols()); }

 private:
  using Bits = std::vector<std::uint64_t>;

  RowMatrix ref_;
  std::size_t words_ = 0;
  DepthCounts own_;                          // depth counts within the reference alone
  std::vector<std::vector<double>> sorted_;  // per grid point, ascending reference values
  // Per (curve k, grid point t): sets {j : y_j(t) >= y_k(t)} and {j : y_j(t) <= y_k(t)}.
  std::vector<Bits> geq_;
  std::vector<Bits> leq_;
  std::vector<std::int64_t> geq_count_;
  std::vector<std::int64_t> leq_count_;
};

}  // namespace stcov
