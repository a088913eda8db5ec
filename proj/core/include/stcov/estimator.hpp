#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stcov/simfield.hpp"

namespace stcov {

enum class TestKind { Separability, Symmetry };

[[nodiscard]] std::string_view kind_name(TestKind kind);
[[nodiscard]] TestKind kind_from_name(std::string_view name);

/// Which autocovariance stands in for C(0, u) in the separability estimate.
enum class AutocovMode {
  PairAverage,    // (C_ii(u) + C_jj(u)) / 2 for the pair (i, j)
  GlobalAverage,  // mean over all usable sites
};

struct PairInfo {
  std::size_t i = 0;  // first site of the (oriented) pair
  std::size_t j = 0;
  Vec2 h;             // sites[j] - sites[i]
};

/// Test-function curves, one per site pair, on a shared integer lag grid.
struct CurveSet {
  TestKind kind = TestKind::Separability;
  std::vector<int> lags;  // 0..U for separability, 1..U for symmetry
  RowMatrix curves;       // one row per curve
  std::vector<PairInfo> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> dropped;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(curves.rows()); }
};

/// Lag-windowed sample cross-covariance. For u >= 0:
///   sum_{t=1}^{p-u} (x_t - mean(x_{1..p-u})) (y_{t+u} - mean(y_{u+1..p})) / (p - u);
/// negative lags use cross_cov_hat(y, x, -u). Requires |u| <= p - 2.
[[nodiscard]] double cross_cov_hat(std::span<const double> x, std::span<const double> y, int u);

/// f_hat_h(u) for u = 0..max_lag using the series of sites i and j.
[[nodiscard]] std::vector<double> sep_test_fn_hat(const SpaceTimeDataset& data, std::size_t i,
                                                  std::size_t j, int max_lag,
                                                  AutocovMode mode = AutocovMode::PairAverage);

/// g_hat_h(u) for u = 1..max_lag. The pair is oriented so the first nonzero
/// coordinate of h is positive; swapping i and j gives the same curve.
[[nodiscard]] std::vector<double> sym_test_fn_hat(const SpaceTimeDataset& data, std::size_t i,
                                                  std::size_t j, int max_lag);

/// Orientation used by the symmetry estimator: returns (a, b) with h = s_b - s_a
/// pointing into the canonical half-plane.
[[nodiscard]] std::pair<std::size_t, std::size_t> canonical_pair(const SpaceTimeDataset& data,
                                                                 std::size_t i, std::size_t j);

struct EstimatorOptions {
  AutocovMode autocov = AutocovMode::PairAverage;
  bool warn_on_drop = true;
};

/// Every unordered pair i < j, in lexicographic order. Pairs touching a
/// constant series (or with zero lag-0 cross-covariance) are dropped with a
/// warning. Throws DegenerateDataError if no pair remains.
[[nodiscard]] CurveSet all_pairs_test_fns(const SpaceTimeDataset& data, TestKind kind, int max_lag,
                                          const EstimatorOptions& options = {});

// CSV: header `i,j,hx,hy,u<lag>...`, one row per curve.
void write_curveset_csv(const CurveSet& set, std::ostream& out);
[[nodiscard]] CurveSet read_curveset_csv(std::istream& in, std::string_view source = "<input>");
[[nodiscard]] std::string curveset_to_json(const CurveSet& set, std::string_view extra = "{}");
[[nodiscard]] CurveSet curveset_from_json(std::string_view text);

}  // namespace stcov
