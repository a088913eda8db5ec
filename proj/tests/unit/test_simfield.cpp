#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "mc.hpp"
#include "stcov/errors.hpp"
#include "stcov/rng.hpp"
#include "stcov/simfield.hpp"

using namespace stcov;

namespace {

Eigen::VectorXd site_major(const SpaceTimeDataset& d) {
  Eigen::VectorXd v(d.values.size());
  for (Eigen::Index s = 0; s < d.values.rows(); ++s) {
    for (Eigen::Index t = 0; t < d.values.cols(); ++t) v(s * d.values.cols() + t) = d.values(s, t);
  }
  return v;
}

}  // namespace

TEST_CASE("exact sampler basics", "[simfield]") {
  const std::vector<Vec2> one{{0, 0}};
  const auto d = simulate_exact(CovarianceSpec::gneiting_sep(0.5), one, 1, 11);
  CounterRng rng(11);
  CHECK(d.values(0, 0) == rng.normal());

  const auto sites = unit_grid(2, 2);
  const auto a = simulate_exact(CovarianceSpec::cesare(1.0), sites, 10, 5);
  const auto b = simulate_exact(CovarianceSpec::cesare(1.0), sites, 10, 5);
  CHECK(a.values == b.values);
  CHECK(a.meta->sampler == "exact");
  CHECK_THROWS_AS(simulate_exact(CovarianceSpec::cesare(1.0), unit_grid(4, 4), 300, 1), InputError);
}

TEST_CASE("exact sampler covariance", "[simfield][mc]") {
  const auto spec = CovarianceSpec::gneiting_sep(1.0);
  const auto sites = unit_grid(2, 2);
  const std::size_t p = 50, reps = 2000;
  const ExactSampler sampler(spec, sites, p);
  mc::Accumulator acc(static_cast<Eigen::Index>(sites.size() * p));
  for (std::size_t r = 0; r < reps; ++r) acc.add(site_major(sampler.sample(derive_stream(21, {r}))));
  const auto target = build_covariance_matrix(spec, sites, unit_times(p));
  const auto s = mc::summarize(mc::z_scores(acc.covariance(), target, reps), 3.0);
  // 20100 distinct entries: expect about 0.27% beyond 3 standard errors.
  CHECK(s.fraction_within >= 0.99);
  CHECK(s.max_abs < 5.5);
}

TEST_CASE("block-sequential sampler", "[simfield]") {
  const auto spec = CovarianceSpec::gneiting_sep(1.0);
  const auto sites = unit_grid(2, 2);

  SECTION("one block equals the exact draw") {
    const auto exact = simulate_exact(spec, sites, 20, 99);
    const auto block = simulate_block_sequential(spec, sites, 20, 20, 99);
    CHECK(exact.values == block.values);
  }
  SECTION("divisibility") {
    CHECK_THROWS_AS(BlockSequentialSampler(spec, sites, 25, 10), InputError);
  }
  SECTION("batched equals single draws") {
    const BlockSequentialSampler s(spec, sites, 30, 10);
    const std::vector<std::uint64_t> streams{3, 4, 5};
    const auto many = s.sample_many(streams);
    for (std::size_t k = 0; k < streams.size(); ++k) CHECK(many[k].values == s.sample(streams[k]).values);
  }
  SECTION("two blocks reproduce the joint covariance") {
    const std::size_t p = 20, reps = 2000;
    const BlockSequentialSampler s(spec, sites, p, 10);
    mc::Accumulator acc(static_cast<Eigen::Index>(sites.size() * p));
    for (std::size_t r = 0; r < reps; ++r) acc.add(site_major(s.sample(derive_stream(5, {r}))));
    const auto target = build_covariance_matrix(spec, sites, unit_times(p));
    const auto sum = mc::summarize(mc::z_scores(acc.covariance(), target, reps), 3.0);
    CHECK(sum.fraction_within >= 0.99);
    CHECK(sum.max_abs < 5.0);
  }
}

TEST_CASE("block-sequential lag covariances on the simulation grid", "[simfield][mc][slow]") {
  const auto spec = CovarianceSpec::gneiting_sep(0.5);
  const auto sites = unit_grid(4, 4);
  const std::size_t p = 2000, reps = 50;
  const int U = 10;
  const BlockSequentialSampler sampler(spec, sites, p, 100);

  // Per replicate: known-mean lag covariance averaged over site pairs sharing h.
  struct Key {
    long hx, hy;
    int u;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, std::vector<double>> estimates;
  std::vector<std::uint64_t> streams(reps);
  for (std::size_t r = 0; r < reps; ++r) streams[r] = derive_stream(77, {r});
  for (const auto& d : sampler.sample_many(streams)) {
    std::map<Key, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      for (std::size_t j = 0; j < sites.size(); ++j) {
        const Key base{std::lround(3 * (sites[j].x - sites[i].x)), std::lround(3 * (sites[j].y - sites[i].y)), 0};
        for (int u = 0; u <= U; ++u) {
          double s = 0.0;
          for (std::size_t t = 0; t + static_cast<std::size_t>(u) < p; ++t) {
            s += d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) *
                 d.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(t) + u);
          }
          auto& slot = acc[{base.hx, base.hy, u}];
          slot.first += s / static_cast<double>(p - static_cast<std::size_t>(u));
          slot.second += 1;
        }
      }
    }
    for (const auto& [k, v] : acc) estimates[k].push_back(v.first / v.second);
  }
  std::size_t inside = 0;
  double worst = 0.0;
  for (const auto& [k, values] : estimates) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
    const double truth = evaluate(spec, {k.hx / 3.0, k.hy / 3.0}, k.u);
    const double z = std::abs(mean - truth) / se;
    worst = std::max(worst, z);
    inside += z <= 3.0 ? 1 : 0;
  }
  // 49 spatial lags x 11 temporal lags.
  REQUIRE(estimates.size() == 49 * 11);
  CHECK(static_cast<double>(inside) / static_cast<double>(estimates.size()) >= 0.99);
  CHECK(worst < 5.0);
}

TEST_CASE("white noise through the block sampler", "[simfield]") {
  // A +-2/sqrt(p) band holds a single lag-1 autocorrelation about 95% of the
  // time, so the band is checked as a frequency over many draws.
  const auto spec = CovarianceSpec::separable_product(Kernel1D::delta(), Kernel1D::delta());
  const std::size_t p = 2000;
  const BlockSequentialSampler sampler(spec, unit_grid(2, 2), p, 100);
  const double band = 2.0 / std::sqrt(static_cast<double>(p));
  std::size_t inside = 0;
  std::size_t total = 0;
  double worst = 0.0;
  for (std::uint64_t rep = 0; rep < 250; ++rep) {
    const auto d = sampler.sample(derive_stream(8, {rep}));
    for (Eigen::Index s = 0; s < d.values.rows(); ++s) {
      const Eigen::RowVectorXd x = d.values.row(s).array() - d.values.row(s).mean();
      const double r1 = x.head(p - 1).dot(x.tail(p - 1)) / x.squaredNorm();
      inside += std::abs(r1) < band ? 1 : 0;
      worst = std::max(worst, std::abs(r1));
      ++total;
    }
  }
  CHECK(static_cast<double>(inside) / static_cast<double>(total) >= 0.93);
  CHECK(worst < 2.5 * band);
}

TEST_CASE("Kronecker sampler", "[simfield]") {
  const std::vector<Vec2> two{{0, 0}, {1, 0}};
  SECTION("identity inputs give white noise") {
    const std::vector<double> spike{1.0, 0.0, 0.0, 0.0};
    const auto d = simulate_separable_kron(Eigen::MatrixXd::Identity(2, 2), spike, two, 4);
    CounterRng rng(4);
    for (Eigen::Index s = 0; s < 2; ++s) {
      for (Eigen::Index t = 0; t < 4; ++t) CHECK(d.values(s, t) == rng.normal());
    }
  }
  SECTION("determinism and batching") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.6, 0.6, 1.0;
    const std::vector<double> ar{1.0, 0.5, 0.25, 0.125};
    const KronSampler k(s, ar, two);
    const std::vector<std::uint64_t> streams{10, 11};
    const auto many = k.sample_many(streams);
    CHECK(many[1].values == k.sample(11).values);
    CHECK(simulate_separable_kron(s, ar, two, 10).values == many[0].values);
  }
  SECTION("covariance equals spatial x Toeplitz(temporal)") {
    Eigen::MatrixXd s(2, 2);
    s << 1.0, 0.6, 0.6, 2.0;
    const std::vector<double> ar{1.0, 0.5, 0.25, 0.125};
    const KronSampler k(s, ar, two);
    const std::size_t reps = 100000;
    mc::Accumulator acc(8);
    std::vector<std::uint64_t> streams(1000);
    for (std::size_t batch = 0; batch < reps / streams.size(); ++batch) {
      for (std::size_t i = 0; i < streams.size(); ++i) streams[i] = derive_stream(31, {batch, i});
      for (const auto& d : k.sample_many(streams)) acc.add(site_major(d));
    }
    Eigen::MatrixXd target(8, 8);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        for (int t = 0; t < 4; ++t) {
          for (int v = 0; v < 4; ++v) target(a * 4 + t, b * 4 + v) = s(a, b) * ar[static_cast<std::size_t>(std::abs(t - v))];
        }
      }
    }
    CHECK(mc::summarize(mc::z_scores(acc.covariance(), target, reps), 4.0).max_abs < 4.0);
  }
}

TEST_CASE("dataset validation", "[simfield]") {
  SpaceTimeDataset d;
  d.sites = {{0, 0}, {1, 0}};
  d.values = RowMatrix::Zero(2, 3);
  CHECK_NOTHROW(validate(d));
  d.values(0, 1) = NAN;
  CHECK_THROWS_AS(validate(d), InputError);
  d.values(0, 1) = 0;
  d.sites[1] = {0, 0};
  CHECK_THROWS_AS(validate(d), InputError);
  d.sites = {{0, 0}};
  d.values = RowMatrix::Zero(1, 3);
  CHECK_THROWS_AS(validate(d), InputError);
}
