#include "stcov/simfield.hpp"

#include <cmath>
#include <string>

#include "stcov/errors.hpp"

namespace stcov {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

// Draws `rows` normals per stream into the columns of a rows x K matrix. Every
// sampler goes through this so single and batched draws consume streams alike.
MatrixXd draw_normals(std::vector<CounterRng>& rngs, Index rows) {
  MatrixXd g(rows, static_cast<Index>(rngs.size()));
  for (std::size_t k = 0; k < rngs.size(); ++k) {
    rngs[k].fill_normal({g.col(static_cast<Index>(k)).data(), static_cast<std::size_t>(rows)});
  }
  return g;
}

std::vector<CounterRng> make_rngs(std::span<const std::uint64_t> streams) {
  std::vector<CounterRng> rngs;
  rngs.reserve(streams.size());
  for (auto s : streams) rngs.emplace_back(s);
  return rngs;
}

SpaceTimeDataset empty_dataset(const std::vector<Vec2>& sites, std::size_t p) {
  SpaceTimeDataset d;
  d.sites = sites;
  d.values.resize(static_cast<Index>(sites.size()), static_cast<Index>(p));
  return d;
}

// Writes column k of a block-vector matrix (site-major within the block) into
// times [offset, offset + block) of dataset k.
void scatter_block(const MatrixXd& z, std::size_t block, std::size_t offset,
                   std::vector<SpaceTimeDataset>& out) {
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& values = out[k].values;
    for (Index s = 0; s < values.rows(); ++s) {
      for (std::size_t t = 0; t < block; ++t) {
        values(s, static_cast<Index>(offset + t)) =
            z(s * static_cast<Index>(block) + static_cast<Index>(t), static_cast<Index>(k));
      }
    }
  }
}

std::vector<double> time_range(std::size_t begin, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(begin + i);
  return t;
}

}  // namespace

void validate(const SpaceTimeDataset& data) {
  const auto n = data.sites.size();
  if (n < 2) throw InputError("dataset needs at least 2 sites, got " + std::to_string(n));
  if (data.values.rows() != static_cast<Index>(n)) {
    throw InputError("dataset has " + std::to_string(data.values.rows()) + " series for " +
                     std::to_string(n) + " sites");
  }
  if (data.values.cols() < 2) throw InputError("dataset needs at least 2 time points");
  if (!data.values.allFinite()) throw InputError("dataset contains non-finite values");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(data.sites[i].x) || !std::isfinite(data.sites[i].y)) {
      throw InputError("site " + std::to_string(i) + " has non-finite coordinates");
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      if (data.sites[i] == data.sites[j]) {
        throw InputError("sites " + std::to_string(i) + " and " + std::to_string(j) +
                         " share coordinates");
      }
    }
  }
  if (!data.time_labels.empty() && data.time_labels.size() != data.n_times()) {
    throw InputError("time label count does not match the number of time points");
  }
  if (!data.site_classes.empty() && data.site_classes.size() != n) {
    throw InputError("site class count does not match the number of sites");
  }
}

std::vector<double> unit_times(std::size_t p) { return time_range(0, p); }

// ---------------------------------------------------------------------------

ExactSampler::ExactSampler(const CovarianceSpec& spec, std::vector<Vec2> sites, std::size_t p,
                           std::size_t cap)
    : sites_(std::move(sites)), p_(p), spec_json_(spec_to_json(spec)) {
  if (p_ == 0 || sites_.empty()) throw InputError("simulation needs at least one site and time");
  if (sites_.size() * p_ > cap) {
    throw InputError("exact simulation of " + std::to_string(sites_.size() * p_) +
                     " variables exceeds the cap of " + std::to_string(cap));
  }
  const auto times = unit_times(p_);
  factor_ = chol_psd(build_covariance_matrix(spec, sites_, times));
}

SpaceTimeDataset ExactSampler::sample(std::uint64_t stream) const {
  const std::uint64_t streams[] = {stream};
  auto rngs = make_rngs(streams);
  const MatrixXd g = draw_normals(rngs, factor_.lower.rows());
  const MatrixXd z = factor_.lower.triangularView<Eigen::Lower>() * g;
  std::vector<SpaceTimeDataset> out{empty_dataset(sites_, p_)};
  scatter_block(z, p_, 0, out);
  out[0].meta = SimulationMeta{stream, "exact", spec_json_, p_, factor_.jitter, 0.0};
  return std::move(out[0]);
}

// ---------------------------------------------------------------------------

BlockSequentialSampler::BlockSequentialSampler(const CovarianceSpec& spec, std::vector<Vec2> sites,
                                               std::size_t p, std::size_t block_len,
                                               bool repair_indefinite)
    : sites_(std::move(sites)), p_(p), block_(block_len), spec_json_(spec_to_json(spec)) {
  if (sites_.empty() || p_ == 0) throw InputError("simulation needs at least one site and time");
  if (block_ == 0 || p_ % block_ != 0) {
    throw InputError("block length " + std::to_string(block_) + " does not divide p = " +
                     std::to_string(p_));
  }
  auto factorize = [&](const MatrixXd& m) {
    if (!repair_indefinite) return RepairedFactor{chol_psd(m), 0.0, false};
    return chol_with_repair(m);
  };

  const auto first = time_range(0, block_);
  const MatrixXd s11 = build_covariance_matrix(spec, sites_, first);
  auto marginal = factorize(s11);
  marginal_ = std::move(marginal.factor);
  clipped_mass_ += marginal.clipped_mass;
  if (p_ == block_) return;

  const auto second = time_range(block_, block_);
  const MatrixXd s12 = covariance_block(spec, sites_, first, second);
  const MatrixXd s22 = build_covariance_matrix(spec, sites_, second);
  const Index m = s11.rows();
  MatrixXd joint(2 * m, 2 * m);
  joint.topLeftCorner(m, m) = s11;
  joint.topRightCorner(m, m) = s12;
  joint.bottomLeftCorner(m, m) = s12.transpose();
  joint.bottomRightCorner(m, m) = s22;

  auto jf = factorize(joint);
  joint_jitter_ = jf.factor.jitter;
  clipped_mass_ += jf.clipped_mass;
  const MatrixXd l11 = jf.factor.lower.topLeftCorner(m, m);
  const MatrixXd l21 = jf.factor.lower.bottomLeftCorner(m, m);
  // A L11 = L21  <=>  L11^T A^T = L21^T
  transition_ = l11.transpose().triangularView<Eigen::Upper>().solve(l21.transpose()).transpose();
  conditional_ = jf.factor.lower.bottomRightCorner(m, m);
}

SpaceTimeDataset BlockSequentialSampler::sample(std::uint64_t stream) const {
  const std::uint64_t streams[] = {stream};
  return std::move(sample_many(streams).front());
}

std::vector<SpaceTimeDataset> BlockSequentialSampler::sample_many(
    std::span<const std::uint64_t> streams) const {
  auto rngs = make_rngs(streams);
  std::vector<SpaceTimeDataset> out;
  out.reserve(streams.size());
  for (auto s : streams) {
    out.push_back(empty_dataset(sites_, p_));
    out.back().meta = SimulationMeta{s, "block_sequential", spec_json_, block_, jitter(), clipped_mass_};
  }
  if (streams.empty()) return out;

  const Index m = marginal_.lower.rows();
  MatrixXd z = marginal_.lower.triangularView<Eigen::Lower>() * draw_normals(rngs, m);
  scatter_block(z, block_, 0, out);
  MatrixXd next(m, z.cols());
  for (std::size_t offset = block_; offset < p_; offset += block_) {
    const MatrixXd g = draw_normals(rngs, m);
    next.noalias() = transition_ * z;
    next.noalias() += conditional_.triangularView<Eigen::Lower>() * g;
    z.swap(next);
    scatter_block(z, block_, offset, out);
  }
  return out;
}

// ---------------------------------------------------------------------------

KronSampler::KronSampler(const MatrixXd& spatial_cov, std::span<const double> temporal_autocov,
                         std::vector<Vec2> sites)
    : sites_(std::move(sites)) {
  if (spatial_cov.rows() != static_cast<Index>(sites_.size()) ||
      spatial_cov.cols() != spatial_cov.rows()) {
    throw InputError("spatial covariance must be n x n for n sites");
  }
  if (temporal_autocov.empty()) throw InputError("temporal autocovariance is empty");
  auto s = chol_with_repair(spatial_cov);
  auto t = chol_with_repair(toeplitz(temporal_autocov));
  spatial_ = std::move(s.factor);
  temporal_ = std::move(t.factor);
  clipped_mass_ = s.clipped_mass + t.clipped_mass;
}

SpaceTimeDataset KronSampler::sample(std::uint64_t stream) const {
  const std::uint64_t streams[] = {stream};
  return std::move(sample_many(streams).front());
}

std::vector<SpaceTimeDataset> KronSampler::sample_many(std::span<const std::uint64_t> streams) const {
  const Index n = spatial_.lower.rows();
  const Index p = temporal_.lower.rows();
  const auto k_count = static_cast<Index>(streams.size());

  // Stack the K white-noise fields vertically; each row of G is one site's series.
  RowMatrix g(n * k_count, p);
  for (Index k = 0; k < k_count; ++k) {
    CounterRng rng(streams[static_cast<std::size_t>(k)]);
    rng.fill_normal({g.data() + k * n * p, static_cast<std::size_t>(n * p)});
  }
  const RowMatrix right = g * temporal_.lower.triangularView<Eigen::Lower>().transpose();

  std::vector<SpaceTimeDataset> out;
  out.reserve(streams.size());
  for (Index k = 0; k < k_count; ++k) {
    SpaceTimeDataset d;
    d.sites = sites_;
    d.values = spatial_.lower.triangularView<Eigen::Lower>() * right.middleRows(k * n, n);
    d.meta = SimulationMeta{streams[static_cast<std::size_t>(k)], "kronecker", "", 0, jitter(),
                            clipped_mass_};
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------

SpaceTimeDataset simulate_exact(const CovarianceSpec& spec, std::vector<Vec2> sites, std::size_t p,
                                std::uint64_t seed, std::size_t cap) {
  return ExactSampler(spec, std::move(sites), p, cap).sample(seed);
}

SpaceTimeDataset simulate_block_sequential(const CovarianceSpec& spec, std::vector<Vec2> sites,
                                           std::size_t p, std::size_t block_len,
                                           std::uint64_t seed) {
  return BlockSequentialSampler(spec, std::move(sites), p, block_len).sample(seed);
}

SpaceTimeDataset simulate_separable_kron(const MatrixXd& spatial_cov,
                                         std::span<const double> temporal_autocov,
                                         std::vector<Vec2> sites, std::uint64_t seed) {
  return KronSampler(spatial_cov, temporal_autocov, std::move(sites)).sample(seed);
}

}  // namespace stcov
