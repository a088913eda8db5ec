#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcov/covmodels.hpp"
#include "stcov/linalg.hpp"
#include "stcov/rng.hpp"

namespace stcov {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Provenance attached to simulated data.
struct SimulationMeta {
  std::uint64_t seed = 0;
  std::string sampler;    // "exact", "block_sequential" or "kronecker"
  std::string spec_json;  // generating model, empty for the Kronecker path
  std::size_t block_len = 0;
  double jitter = 0.0;
  double clipped_mass = 0.0;
};

/// n sites x p equally spaced times. Row i of `values` is the series at site i.
struct SpaceTimeDataset {
  std::vector<Vec2> sites;
  RowMatrix values;
  double dt = 1.0;
  // Optional annotations carried through file I/O.
  std::vector<std::string> time_labels;  // size p when present
  std::vector<std::string> site_classes;  // size n when present
  std::optional<SimulationMeta> meta;

  [[nodiscard]] std::size_t n_sites() const { return sites.size(); }
  [[nodiscard]] std::size_t n_times() const { return static_cast<std::size_t>(values.cols()); }
  [[nodiscard]] std::span<const double> series(std::size_t i) const {
    return {values.data() + static_cast<std::ptrdiff_t>(i) * values.cols(),
            static_cast<std::size_t>(values.cols())};
  }
};

/// Throws InputError unless n >= 2, p >= 2, values are finite, rows match
/// sites and site coordinates are pairwise distinct.
void validate(const SpaceTimeDataset& data);

/// Times 0, 1, ..., p-1.
[[nodiscard]] std::vector<double> unit_times(std::size_t p);

/// Draws vec(Z) = L g for the full n*p joint covariance. Reusable across draws.
class ExactSampler {
 public:
  ExactSampler(const CovarianceSpec& spec, std::vector<Vec2> sites, std::size_t p,
               std::size_t cap = 4000);

  [[nodiscard]] SpaceTimeDataset sample(std::uint64_t stream) const;
  [[nodiscard]] const TriangularFactor& factor() const { return factor_; }

 private:
  std::vector<Vec2> sites_;
  std::size_t p_;
  TriangularFactor factor_;
  std::string spec_json_;
};

/// Block-sequential conditional sampler. Block 1 is drawn from its marginal;
/// block i >= 2 from the Gaussian conditional given block i-1 only:
///   Z_i = A Z_{i-1} + L_c g,  A = S21 S11^{-1},  L_c L_c^T = S22 - S21 S11^{-1} S12,
/// where S is the covariance of two consecutive blocks. Factors are computed
/// once and reused for every block and every draw.
class BlockSequentialSampler {
 public:
  BlockSequentialSampler(const CovarianceSpec& spec, std::vector<Vec2> sites, std::size_t p,
                         std::size_t block_len, bool repair_indefinite = false);

  [[nodiscard]] SpaceTimeDataset sample(std::uint64_t stream) const;
  /// Draws one dataset per stream. Output depends only on the list of streams.
  [[nodiscard]] std::vector<SpaceTimeDataset> sample_many(std::span<const std::uint64_t> streams) const;

  [[nodiscard]] std::size_t block_len() const { return block_; }
  [[nodiscard]] double jitter() const { return std::max(marginal_.jitter, joint_jitter_); }
  [[nodiscard]] double clipped_mass() const { return clipped_mass_; }

 private:
  std::vector<Vec2> sites_;
  std::size_t p_;
  std::size_t block_;
  TriangularFactor marginal_;
  Eigen::MatrixXd transition_;   // A
  Eigen::MatrixXd conditional_;  // L_c, lower triangular
  double joint_jitter_ = 0.0;
  double clipped_mass_ = 0.0;
  std::string spec_json_;
};

/// Matrix-normal sampler: values = L_s G L_t^T, covariance spatial (x) Toeplitz(temporal).
/// Indefinite inputs are repaired by eigenvalue clipping before factorization.
class KronSampler {
 public:
  KronSampler(const Eigen::MatrixXd& spatial_cov, std::span<const double> temporal_autocov,
              std::vector<Vec2> sites);

  [[nodiscard]] SpaceTimeDataset sample(std::uint64_t stream) const;
  [[nodiscard]] std::vector<SpaceTimeDataset> sample_many(std::span<const std::uint64_t> streams) const;

  [[nodiscard]] double jitter() const { return std::max(spatial_.jitter, temporal_.jitter); }
  [[nodiscard]] double clipped_mass() const { return clipped_mass_; }
  [[nodiscard]] const TriangularFactor& spatial_factor() const { return spatial_; }
  [[nodiscard]] const TriangularFactor& temporal_factor() const { return temporal_; }

 private:
  std::vector<Vec2> sites_;
  TriangularFactor spatial_;
  TriangularFactor temporal_;
  double clipped_mass_ = 0.0;
};

[[nodiscard]] SpaceTimeDataset simulate_exact(const CovarianceSpec& spec, std::vector<Vec2> sites,
                                              std::size_t p, std::uint64_t seed,
                                              std::size_t cap = 4000);

[[nodiscard]] SpaceTimeDataset simulate_block_sequential(const CovarianceSpec& spec,
                                                         std::vector<Vec2> sites, std::size_t p,
                                                         std::size_t block_len, std::uint64_t seed);

[[nodiscard]] SpaceTimeDataset simulate_separable_kron(const Eigen::MatrixXd& spatial_cov,
                                                       std::span<const double> temporal_autocov,
                                                       std::vector<Vec2> sites, std::uint64_t seed);

}  // namespace stcov
