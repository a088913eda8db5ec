#pragma once

#include <span>

#include <Eigen/Dense>

namespace stcov {

/// Lower Cholesky factor plus the diagonal jitter that was needed to obtain it.
struct TriangularFactor {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Cholesky with jitter escalation: on failure retries with
/// 1e-10 * trace/dim added to the diagonal, multiplied by 10 up to four times.
/// Throws NotPsdError (carrying the most negative LDL^T pivot) if all fail and
/// InputError if the input is not symmetric to 1e-10 relative tolerance.
[[nodiscard]] TriangularFactor chol_psd(const Eigen::MatrixXd& a);

struct PsdRepair {
  Eigen::MatrixXd matrix;
  double clipped_mass = 0.0;  // sum of (floor - lambda) over clipped eigenvalues
  int clipped_count = 0;
};

/// Eigenvalues below floor_ratio * lambda_max are raised to that floor.
[[nodiscard]] PsdRepair psd_repair(const Eigen::MatrixXd& a, double floor_ratio = 1e-10);

/// chol_psd, falling back to psd_repair when the matrix is indefinite.
struct RepairedFactor {
  TriangularFactor factor;
  double clipped_mass = 0.0;
  bool repaired = false;
};
[[nodiscard]] RepairedFactor chol_with_repair(const Eigen::MatrixXd& a);

/// Symmetric Toeplitz matrix with first row `first_row`.
[[nodiscard]] Eigen::MatrixXd toeplitz(std::span<const double> first_row);

}  // namespace stcov
