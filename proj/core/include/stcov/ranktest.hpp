#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stcov/covmodels.hpp"
#include "stcov/estimator.hpp"
#include "stcov/simfield.hpp"

namespace stcov {

struct RankTestConfig {
  TestKind kind = TestKind::Separability;
  int max_lag = 10;          // U
  std::size_t m = 1;         // simulated datasets pooled into the H0 set
  std::size_t r = 1;         // simulated datasets pooled into the reference set
  std::size_t b = 100;       // bootstrap replicates
  std::uint64_t seed = 0;
  double alpha = 0.05;
  std::size_t block_len = 100;    // symmetry H0 sampler block length
  bool frozen_reference = false;  // reuse the replicate-0 reference set in every replicate
  AutocovMode autocov = AutocovMode::PairAverage;
  std::size_t threads = 1;        // 0 = hardware concurrency
  // Called after each finished bootstrap replicate; may run on any worker thread.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// How the null covariance was built and simulated.
struct H0Meta {
  std::string family;
  std::string sampler;
  double variance_scale = 0.0;     // average lag-0 variance of the data
  std::size_t lag_window = 0;      // largest temporal lag kept in the null model
  std::size_t block_len = 0;
  std::size_t simulated_length = 0;
  double jitter = 0.0;
  double clipped_mass = 0.0;
};

struct RankTestReport {
  RankTestConfig config;
  double W = 0.0;
  std::vector<double> null_W;
  double p_value = 1.0;
  std::vector<double> r_obs;
  std::vector<double> r_h0;
  bool tie_flag = false;
  std::size_t n_obs_curves = 0;
  std::size_t n_h0_curves = 0;
  std::size_t n_ref_curves = 0;
  H0Meta h0;

  [[nodiscard]] bool reject(double alpha) const { return p_value <= alpha; }
};

/// Separable null: spatial(i, j) = lag-0 sample covariance, temporal = site-averaged
/// autocovariance over all lags 0..p-1 divided by its lag-0 value, so
/// C(h, u) = C(h, 0) C(0, u) / C(0, 0). Divisor p throughout.
[[nodiscard]] CovarianceSpec build_separable_h0(const SpaceTimeDataset& data);

/// Fully symmetric null: lag covariances (G(u) + G(u)^T) / 2 for u = 0..max_lag,
/// divisor p and full-series means, which keeps every block-Toeplitz section PSD.
[[nodiscard]] CovarianceSpec build_symmetric_h0(const SpaceTimeDataset& data, std::size_t max_lag);

/// Null spec for `kind`; the symmetric window covers two sampler blocks.
[[nodiscard]] CovarianceSpec build_h0_spec(const SpaceTimeDataset& data, TestKind kind,
                                           std::size_t block_len = 100);

struct RankScores {
  std::vector<double> scores;  // fraction of reference curves below each observed curve
  bool tied = false;
};

/// Pools each observed curve with the reference curves and ranks by band depth,
/// then modified band depth; a reference curve fully tied with the observed one
/// counts as below it.
[[nodiscard]] RankScores rank_scores(const RowMatrix& observed, const RowMatrix& reference);

/// Sum of the midranks of r_obs within r_obs and r_h0 pooled.
[[nodiscard]] double w_statistic(const std::vector<double>& r_obs, const std::vector<double>& r_h0);

/// (1 + #{null_W <= W}) / (b + 1).
[[nodiscard]] double lower_tail_p_value(double W, const std::vector<double>& null_W);

[[nodiscard]] RankTestReport rank_test(const SpaceTimeDataset& data, const RankTestConfig& config);

[[nodiscard]] std::string rank_report_to_json(const RankTestReport& report,
                                              std::string_view extra = "{}");
[[nodiscard]] std::string rank_report_summary(const RankTestReport& report);

/// Runs fn(0..count-1) on up to `threads` workers. fn must only write to
/// per-index state. The first exception thrown is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace stcov
