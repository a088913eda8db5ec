#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "stcov/errors.hpp"
#include "stcov/linalg.hpp"
#include "stcov/rng.hpp"

using namespace stcov;
using Catch::Approx;

TEST_CASE("chol_psd", "[linalg]") {
  SECTION("identity") {
    const auto f = chol_psd(Eigen::MatrixXd::Identity(3, 3));
    CHECK(f.lower == Eigen::MatrixXd::Identity(3, 3));
    CHECK(f.jitter == 0.0);
  }
  SECTION("hand factorization") {
    Eigen::MatrixXd a(2, 2);
    a << 4, 2, 2, 3;
    const auto f = chol_psd(a);
    CHECK(f.lower(0, 0) == 2.0);
    CHECK(f.lower(0, 1) == 0.0);
    CHECK(f.lower(1, 0) == 1.0);
    CHECK(f.lower(1, 1) == Approx(std::sqrt(2.0)).epsilon(1e-15));
  }
  SECTION("indefinite") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 2, 2, 1;
    try {
      (void)chol_psd(a);
      FAIL("expected NotPsdError");
    } catch (const NotPsdError& e) {
      CHECK(e.most_negative_pivot() < 0.0);
    }
  }
  SECTION("singular PSD needs jitter") {
    Eigen::MatrixXd a(3, 3);
    a << 1, 1, 1, 1, 1, 1, 1, 1, 1;
    const auto f = chol_psd(a);
    CHECK(f.jitter > 0.0);
    const Eigen::MatrixXd target = a + f.jitter * Eigen::MatrixXd::Identity(3, 3);
    CHECK((f.lower * f.lower.transpose() - target).norm() <= 1e-8 * target.norm());
  }
  SECTION("asymmetric input") {
    Eigen::MatrixXd a(2, 2);
    a << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(chol_psd(a), InputError);
  }
}

TEST_CASE("psd_repair clips negative eigenvalues", "[linalg]") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 2, 1;
  const auto r = psd_repair(a);
  CHECK(r.clipped_count == 1);
  CHECK(r.clipped_mass == Approx(1.0 + 3e-10).epsilon(1e-9));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.matrix);
  CHECK(eig.eigenvalues().minCoeff() >= 3e-10 * (1 - 1e-6));
  const auto f = chol_with_repair(a);
  CHECK(f.repaired);
  const auto g = chol_with_repair(Eigen::MatrixXd::Identity(2, 2));
  CHECK_FALSE(g.repaired);
  CHECK(g.clipped_mass == 0.0);
}

TEST_CASE("toeplitz", "[linalg]") {
  const std::vector<double> row{3, 2, 1};
  const auto t = toeplitz(row);
  CHECK(t(0, 2) == 1.0);
  CHECK(t(2, 0) == 1.0);
  CHECK(t(1, 2) == 2.0);
  CHECK(t(2, 2) == 3.0);
}

TEST_CASE("counter rng", "[rng]") {
  SECTION("same key, same sequence") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
  }
  SECTION("substreams differ") {
    std::set<std::uint64_t> keys;
    for (std::uint64_t k = 0; k < 50; ++k) {
      for (std::uint64_t role = 0; role < 3; ++role) keys.insert(derive_stream(7, {k, role, 0}));
    }
    CHECK(keys.size() == 150);
    CHECK(derive_stream(7, {1, 2}) != derive_stream(7, {2, 1}));
    CHECK(derive_stream(7, {1}) != derive_stream(8, {1}));
  }
  SECTION("uniform in (0, 1) and normal moments") {
    CounterRng rng(3);
    double sum = 0.0, sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u > 0.0);
      REQUIRE(u < 1.0);
      const double z = rng.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }
  SECTION("fill_normal equals repeated normal") {
    CounterRng a(9), b(9);
    std::vector<double> v(7);
    a.fill_normal(v);
    for (double x : v) CHECK(x == b.normal());
  }
}
