#include "stcov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stcov/errors.hpp"

namespace stcov {

TriangularFactor chol_psd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw InputError("chol_psd: matrix is not square");
  if (a.size() == 0) return {};
  if (!a.allFinite()) throw InputError("chol_psd: matrix has non-finite entries");
  const double scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError("chol_psd: matrix is not symmetric");
  }

  const auto dim = a.rows();
  const double base = 1e-10 * a.trace() / static_cast<double>(dim);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return {llt.matrixL(), 0.0};

  double jitter = base;
  for (int attempt = 0; attempt < 4 && base > 0.0; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double pivot = ldlt.vectorD().minCoeff();
  throw NotPsdError("matrix is not positive semidefinite (most negative pivot " +
                        std::to_string(pivot) + ")",
                    pivot);
}

PsdRepair psd_repair(const Eigen::MatrixXd& a, double floor_ratio) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("psd_repair: eigendecomposition failed");
  Eigen::VectorXd values = eig.eigenvalues();
  const double top = values.maxCoeff();
  if (!(top > 0.0)) throw NotPsdError("psd_repair: no positive eigenvalue", values.minCoeff());
  const double floor = floor_ratio * top;
  PsdRepair out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) < floor) {
      out.clipped_mass += floor - values(i);
      ++out.clipped_count;
      values(i) = floor;
    }
  }
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  out.matrix = vecs * values.asDiagonal() * vecs.transpose();
  out.matrix = 0.5 * (out.matrix + out.matrix.transpose()).eval();
  return out;
}

RepairedFactor chol_with_repair(const Eigen::MatrixXd& a) {
  try {
    return {chol_psd(a), 0.0, false};
  } catch (const NotPsdError&) {
    PsdRepair fixed = psd_repair(a);
    return {chol_psd(fixed.matrix), fixed.clipped_mass, true};
  }
}

Eigen::MatrixXd toeplitz(std::span<const double> first_row) {
  const auto n = static_cast<Eigen::Index>(first_row.size());
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = first_row[static_cast<std::size_t>(std::abs(i - j))];
  }
  return t;
}

}  // namespace stcov
