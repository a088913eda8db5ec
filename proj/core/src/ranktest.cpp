#include "stcov/ranktest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "stcov/depth.hpp"
#include "stcov/errors.hpp"

namespace stcov {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

MatrixXd centered(const SpaceTimeDataset& data) {
  MatrixXd x = data.values;
  for (Index i = 0; i < x.rows(); ++i) x.row(i).array() -= x.row(i).mean();
  return x;
}

// Draws datasets from the null model, cropped to the observed length.
using NullDraw = std::function<std::vector<SpaceTimeDataset>(std::span<const std::uint64_t>)>;

struct NullModel {
  NullDraw draw;
  H0Meta meta;
};

NullModel make_null_model(const SpaceTimeDataset& data, const RankTestConfig& config) {
  const std::size_t p = data.n_times();
  NullModel model;
  if (config.kind == TestKind::Separability) {
    const auto spec = build_separable_h0(data);
    const auto& params = std::get<EmpiricalSeparableParams>(spec.params());
    auto sampler = std::make_shared<KronSampler>(params.spatial, params.temporal, data.sites);
    model.meta = {"EmpiricalSeparable", "kronecker", params.variance_scale, p - 1, 0, p,
                  sampler->jitter(), sampler->clipped_mass()};
    model.draw = [sampler](std::span<const std::uint64_t> streams) { return sampler->sample_many(streams); };
    return model;
  }

  const std::size_t block = std::min(config.block_len, p);
  if (block == 0) throw InputError("block length must be positive");
  const std::size_t window = std::min(2 * block - 1, p - 1);
  const std::size_t length = (p + block - 1) / block * block;
  const auto spec = build_symmetric_h0(data, window);
  auto sampler = std::make_shared<BlockSequentialSampler>(spec, data.sites, length, block, true);
  const auto& lag0 = std::get<EmpiricalSymmetrizedParams>(spec.params()).lag_cov[0];
  model.meta = {"EmpiricalSymmetrized", "block_sequential", lag0.diagonal().mean(), window, block,
                length, sampler->jitter(), sampler->clipped_mass()};
  model.draw = [sampler, p](std::span<const std::uint64_t> streams) {
    auto out = sampler->sample_many(streams);
    for (auto& d : out) {
      if (d.n_times() != p) d.values = RowMatrix(d.values.leftCols(static_cast<Index>(p)));
    }
    return out;
  };
  return model;
}

RowMatrix stack(const std::vector<RowMatrix>& parts) {
  Index rows = 0;
  for (const auto& m : parts) rows += m.rows();
  RowMatrix out(rows, parts.front().cols());
  Index at = 0;
  for (const auto& m : parts) {
    out.middleRows(at, m.rows()) = m;
    at += m.rows();
  }
  return out;
}

RowMatrix pooled_curves(const std::vector<SpaceTimeDataset>& sets, std::size_t from, std::size_t count,
                        const RankTestConfig& config) {
  std::vector<RowMatrix> parts;
  for (std::size_t k = from; k < from + count; ++k) {
    parts.push_back(all_pairs_test_fns(sets[k], config.kind, config.max_lag,
                                       {config.autocov, /*warn_on_drop=*/false})
                        .curves);
  }
  return stack(parts);
}

struct ReplicateOutcome {
  double W = 0.0;
  std::vector<double> r_obs, r_h0;
  bool tied = false;
  std::size_t n_h0 = 0, n_ref = 0;
};

ReplicateOutcome score(const RowMatrix& observed, const RowMatrix& h0, const ReferenceDepthIndex& ref) {
  ReplicateOutcome out;
  const double r = static_cast<double>(ref.size());
  for (const RowMatrix* set : {&observed, &h0}) {
    auto& dest = set == &observed ? out.r_obs : out.r_h0;
    dest.reserve(static_cast<std::size_t>(set->rows()));
    for (Index i = 0; i < set->rows(); ++i) {
      const auto pos = ref.locate({set->data() + i * set->cols(), static_cast<std::size_t>(set->cols())});
      dest.push_back(static_cast<double>(pos.below) / r);
      out.tied = out.tied || pos.tied;
    }
  }
  out.W = w_statistic(out.r_obs, out.r_h0);
  out.n_h0 = static_cast<std::size_t>(h0.rows());
  out.n_ref = ref.size();
  return out;
}

enum Role : std::uint64_t { kObserved = 0, kNull = 1, kReference = 2 };

constexpr std::size_t kReplicateChunk = 8;

}  // namespace

CovarianceSpec build_separable_h0(const SpaceTimeDataset& data) {
  validate(data);
  const MatrixXd x = centered(data);
  const auto p = static_cast<Index>(data.n_times());
  const auto n = static_cast<Index>(data.n_sites());
  MatrixXd spatial = (x * x.transpose()) / static_cast<double>(p);
  spatial = spatial.selfadjointView<Eigen::Lower>();
  std::vector<double> temporal(static_cast<std::size_t>(p), 0.0);
  for (Index u = 0; u < p; ++u) {
    double s = 0.0;
    for (Index i = 0; i < n; ++i) {
      s += x.row(i).head(p - u).dot(x.row(i).tail(p - u)) / static_cast<double>(p);
    }
    temporal[static_cast<std::size_t>(u)] = s / static_cast<double>(n);
  }
  return CovarianceSpec::empirical_separable(data.sites, std::move(spatial), std::move(temporal));
}

CovarianceSpec build_symmetric_h0(const SpaceTimeDataset& data, std::size_t max_lag) {
  validate(data);
  const std::size_t p = data.n_times();
  if (max_lag >= p) throw InputError("null lag window must be below the series length");
  const MatrixXd x = centered(data);
  std::vector<MatrixXd> lag_cov;
  lag_cov.reserve(max_lag + 1);
  for (std::size_t u = 0; u <= max_lag; ++u) {
    const auto len = static_cast<Index>(p - u);
    const MatrixXd g = x.leftCols(len) * x.rightCols(len).transpose() / static_cast<double>(p);
    lag_cov.push_back((g + g.transpose()) / 2.0);
  }
  return CovarianceSpec::empirical_symmetrized(data.sites, std::move(lag_cov));
}

CovarianceSpec build_h0_spec(const SpaceTimeDataset& data, TestKind kind, std::size_t block_len) {
  if (kind == TestKind::Separability) return build_separable_h0(data);
  const std::size_t block = std::min(block_len, data.n_times());
  return build_symmetric_h0(data, std::min(2 * block - 1, data.n_times() - 1));
}

RankScores rank_scores(const RowMatrix& observed, const RowMatrix& reference) {
  if (reference.rows() < 2) throw InputError("reference set needs at least 2 curves");
  if (observed.cols() != reference.cols()) {
    throw InputError("observed and reference curves use different lag grids");
  }
  const ReferenceDepthIndex index(reference);
  RankScores out;
  for (Index i = 0; i < observed.rows(); ++i) {
    const auto pos =
        index.locate({observed.data() + i * observed.cols(), static_cast<std::size_t>(observed.cols())});
    out.scores.push_back(static_cast<double>(pos.below) / static_cast<double>(index.size()));
    out.tied = out.tied || pos.tied;
  }
  return out;
}

double w_statistic(const std::vector<double>& r_obs, const std::vector<double>& r_h0) {
  if (r_obs.empty() || r_h0.empty()) throw InputError("rank-sum needs non-empty samples");
  const std::size_t n = r_obs.size();
  std::vector<std::pair<double, bool>> pooled;
  pooled.reserve(n + r_h0.size());
  for (double v : r_obs) pooled.emplace_back(v, true);
  for (double v : r_h0) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  double w = 0.0;
  for (std::size_t lo = 0; lo < pooled.size();) {
    std::size_t hi = lo;
    while (hi < pooled.size() && pooled[hi].first == pooled[lo].first) ++hi;
    // Ranks lo+1 .. hi share their average.
    const double midrank = static_cast<double>(lo + 1 + hi) / 2.0;
    for (std::size_t k = lo; k < hi; ++k) {
      if (pooled[k].second) w += midrank;
    }
    lo = hi;
  }
  return w;
}

double lower_tail_p_value(double W, const std::vector<double>& null_W) {
  const auto hits = std::count_if(null_W.begin(), null_W.end(), [&](double w) { return w <= W; });
  return static_cast<double>(1 + hits) / static_cast<double>(null_W.size() + 1);
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

RankTestReport rank_test(const SpaceTimeDataset& data, const RankTestConfig& config) {
  validate(data);
  if (config.max_lag < 1) throw InputError("max lag U must be at least 1");
  if (config.m < 1 || config.r < 1 || config.b < 1) throw InputError("m, r and b must be at least 1");
  if (data.n_times() <= 2 * static_cast<std::size_t>(config.max_lag)) {
    throw InputError("series length " + std::to_string(data.n_times()) + " must exceed 2U = " +
                     std::to_string(2 * config.max_lag));
  }

  RankTestReport report;
  report.config = config;
  report.config.progress = nullptr;

  const CurveSet observed = all_pairs_test_fns(data, config.kind, config.max_lag, {config.autocov, true});
  const NullModel null_model = [&] {
    try {
      return make_null_model(data, config);
    } catch (const NumericalError& e) {
      throw NumericalError("building the " + std::string(kind_name(config.kind)) + " null model: " + e.what());
    }
  }();
  report.h0 = null_model.meta;

  // Replicate k draws its datasets from streams (seed, k, role, j): the
  // observed dataset (k > 0 only), m null datasets, then r reference datasets.
  const bool frozen = config.frozen_reference;
  const auto append_streams = [&](std::size_t k, std::vector<std::uint64_t>& streams) {
    if (k > 0) streams.push_back(derive_stream(config.seed, {k, kObserved, 0}));
    for (std::size_t j = 0; j < config.m; ++j) streams.push_back(derive_stream(config.seed, {k, kNull, j}));
    if (k == 0 || !frozen) {
      for (std::size_t j = 0; j < config.r; ++j) {
        streams.push_back(derive_stream(config.seed, {k, kReference, j}));
      }
    }
  };
  const auto evaluate = [&](std::size_t k, const std::vector<SpaceTimeDataset>& sets, std::size_t at,
                            const ReferenceDepthIndex* shared, std::unique_ptr<ReferenceDepthIndex>* keep) {
    RowMatrix obs_curves;
    if (k > 0) obs_curves = pooled_curves(sets, at++, 1, config);
    const RowMatrix h0_curves = pooled_curves(sets, at, config.m, config);
    at += config.m;
    std::unique_ptr<ReferenceDepthIndex> own;
    if (shared == nullptr) own = std::make_unique<ReferenceDepthIndex>(pooled_curves(sets, at, config.r, config));
    const ReferenceDepthIndex& ref = shared == nullptr ? *own : *shared;
    auto outcome = score(k > 0 ? obs_curves : observed.curves, h0_curves, ref);
    if (keep != nullptr) *keep = std::move(own);
    return outcome;
  };

  std::unique_ptr<ReferenceDepthIndex> reference0;
  std::vector<std::uint64_t> streams0;
  append_streams(0, streams0);
  const auto first = evaluate(0, null_model.draw(streams0), 0, nullptr, frozen ? &reference0 : nullptr);
  report.W = first.W;
  report.r_obs = first.r_obs;
  report.r_h0 = first.r_h0;
  report.tie_flag = first.tied;
  report.n_obs_curves = observed.size();
  report.n_h0_curves = first.n_h0;
  report.n_ref_curves = first.n_ref;

  // Bootstrap replicates are simulated in fixed chunks: one batched draw per
  // chunk keeps the samplers compute-bound. Chunks depend only on b, so the
  // output does not depend on the thread count.
  report.null_W.assign(config.b, 0.0);
  const std::size_t chunks = (config.b + kReplicateChunk - 1) / kReplicateChunk;
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(chunks, config.threads, [&](std::size_t c) {
    const std::size_t lo = 1 + c * kReplicateChunk;
    const std::size_t hi = std::min(config.b, lo + kReplicateChunk - 1);
    std::vector<std::uint64_t> streams;
    std::vector<std::size_t> offsets;
    for (std::size_t k = lo; k <= hi; ++k) {
      offsets.push_back(streams.size());
      append_streams(k, streams);
    }
    const auto sets = null_model.draw(streams);
    for (std::size_t k = lo; k <= hi; ++k) {
      report.null_W[k - 1] = evaluate(k, sets, offsets[k - lo], reference0.get(), nullptr).W;
      const std::size_t finished = ++done;
      if (config.progress) {
        std::lock_guard lock(progress_mutex);
        config.progress(finished, config.b);
      }
    }
  });
  report.p_value = lower_tail_p_value(report.W, report.null_W);
  return report;
}

std::string rank_report_to_json(const RankTestReport& rep, std::string_view extra) {
  using nlohmann::json;
  const auto& c = rep.config;
  json j = {
      {"kind", std::string(kind_name(c.kind))},
      {"W", rep.W},
      {"p_value", rep.p_value},
      {"alpha", c.alpha},
      {"reject", rep.reject(c.alpha)},
      {"null_W", rep.null_W},
      {"r_obs", rep.r_obs},
      {"r_h0", rep.r_h0},
      {"tie_flag", rep.tie_flag},
      {"n_obs_curves", rep.n_obs_curves},
      {"n_h0_curves", rep.n_h0_curves},
      {"n_ref_curves", rep.n_ref_curves},
      {"config",
       {{"max_lag", c.max_lag},
        {"m", c.m},
        {"r", c.r},
        {"b", c.b},
        {"block_len", c.block_len},
        {"frozen_reference", c.frozen_reference},
        {"autocov", c.autocov == AutocovMode::PairAverage ? "pair_average" : "global_average"}}},
      {"h0",
       {{"family", rep.h0.family},
        {"sampler", rep.h0.sampler},
        {"variance_scale", rep.h0.variance_scale},
        {"lag_window", rep.h0.lag_window},
        {"block_len", rep.h0.block_len},
        {"simulated_length", rep.h0.simulated_length},
        {"jitter", rep.h0.jitter},
        {"clipped_mass", rep.h0.clipped_mass},
        {"reference_distribution", "null"}}},
      {"seeds",
       {{"seed", c.seed}, {"streams", "derive_stream(seed, [replicate, role, index]); role 0 observed, 1 null set, 2 reference set"}}},
      {"ranking", "band depth, then modified band depth, then index; observed curve first on full ties"},
      {"tail", "lower"},
      {"meta", json::parse(extra)},
  };
  return j.dump(2);
}

std::string rank_report_summary(const RankTestReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s test: W = %.1f, p = %.4f, %s at alpha = %g",
                std::string(kind_name(rep.config.kind)).c_str(), rep.W, rep.p_value,
                rep.reject(rep.config.alpha) ? "reject" : "do not reject", rep.config.alpha);
  return buf;
}

}  // namespace stcov
