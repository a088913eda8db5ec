#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "stcov/covmodels.hpp"
#include "stcov/errors.hpp"

using namespace stcov;
using Catch::Approx;

namespace {

std::vector<CovarianceSpec> parametric_specs() {
  return {CovarianceSpec::gneiting_sep(0.0),      CovarianceSpec::gneiting_sep(0.5),
          CovarianceSpec::gneiting_sep(1.0),      CovarianceSpec::cressie_huang_sep(),
          CovarianceSpec::cressie_huang_nonsep(), CovarianceSpec::cesare(0.0),
          CovarianceSpec::cesare(1.0),            CovarianceSpec::cesare(3.0),
          CovarianceSpec::gneiting_asym(0.0),     CovarianceSpec::gneiting_asym(0.1),
          CovarianceSpec::separable_product(Kernel1D::exponential(2.0, 0.7), Kernel1D::gaussian(2.0, 3.0))};
}

std::vector<CovarianceSpec> symmetric_specs() {
  auto all = parametric_specs();
  std::erase_if(all, [](const CovarianceSpec& s) {
    return s.family() == Family::GneitingAsym && std::get<GneitingAsymParams>(s.params()).lambda > 0.0;
  });
  return all;
}

const std::vector<Vec2> kLags = {{0, 0}, {1, 0}, {0, 1}, {0.3, -0.4}, {-1, 2}, {2.5, 0.25}};

}  // namespace

TEST_CASE("evaluate matches the closed forms", "[covmodels]") {
  for (const Vec2 h : kLags) {
    for (double u : {-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 7.0}) {
      for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CHECK(evaluate(CovarianceSpec::gneiting_sep(beta), h, u) ==
              Approx(oracle::gneiting(beta, h.x, h.y, u)).epsilon(1e-14));
      }
      CHECK(evaluate(CovarianceSpec::cressie_huang_sep(), h, u) ==
            Approx(oracle::cressie_huang_sep(h.x, h.y, u)).epsilon(1e-14));
      CHECK(evaluate(CovarianceSpec::cressie_huang_nonsep(), h, u) ==
            Approx(oracle::cressie_huang_nonsep(h.x, h.y, u)).epsilon(1e-14));
      for (double k : {0.0, 1.0, 2.5}) {
        CHECK(evaluate(CovarianceSpec::cesare(k), h, u) == Approx(oracle::cesare(k, h.x, h.y, u)).epsilon(1e-14));
      }
      for (double lambda : {0.0, 0.05, 0.1, 1.0}) {
        CHECK(evaluate(CovarianceSpec::gneiting_asym(lambda), h, u) ==
              Approx(oracle::gneiting_asym(lambda, h.x, h.y, u)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("worked values", "[covmodels]") {
  for (double beta : {0.0, 0.3, 1.0}) CHECK(evaluate(CovarianceSpec::gneiting_sep(beta), {0, 0}, 0) == 1.0);
  CHECK(evaluate(CovarianceSpec::cesare(1.0), {0, 0}, 0) == 1.0);
  // 0.5 * exp(-1/sqrt(2))
  CHECK(evaluate(CovarianceSpec::gneiting_sep(1.0), {1, 0}, 2) == Approx(0.2465343).epsilon(1e-6));
  // 0.9 e^{-1} / 1.2 + 0.1 * 0.6
  CHECK(evaluate(CovarianceSpec::gneiting_asym(0.1), {1, 0}, 1) == Approx(0.3359095).epsilon(1e-6));
}

TEST_CASE("origin dominates every value", "[covmodels]") {
  for (const auto& spec : parametric_specs()) {
    const double c0 = evaluate(spec, {0, 0}, 0);
    REQUIRE(c0 > 0.0);
    for (const Vec2 h : kLags) {
      for (double u = -6; u <= 6; u += 0.5) CHECK(std::abs(evaluate(spec, h, u)) <= c0);
    }
  }
}

TEST_CASE("symmetric families are even in h and u", "[covmodels]") {
  for (const auto& spec : symmetric_specs()) {
    for (const Vec2 h : kLags) {
      for (double u : {0.5, 1.0, 3.0}) {
        CHECK(evaluate(spec, h, u) == evaluate(spec, h, -u));
        CHECK(evaluate(spec, h, u) == evaluate(spec, -h, u));
      }
    }
  }
}

TEST_CASE("separability test function", "[covmodels]") {
  SECTION("exactly zero for separable models") {
    const std::vector<CovarianceSpec> separable = {
        CovarianceSpec::gneiting_sep(0.0), CovarianceSpec::cressie_huang_sep(),
        CovarianceSpec::separable_product(Kernel1D::exponential(1.0, 1.0), Kernel1D::exponential(1.0, 2.0)),
        CovarianceSpec::separable_product(Kernel1D::gaussian(3.0, 0.5), Kernel1D::tabulated({2.0, 1.0, 0.5, 0.25})),
    };
    for (const auto& spec : separable) {
      for (const Vec2 h : kLags) {
        for (double v : analytic_sep_test_fn(spec, h, 3)) CHECK(v == 0.0);
      }
    }
    // k = 0 is separable but a sum in floating point, so only rounding remains.
    for (const Vec2 h : kLags) {
      for (double v : analytic_sep_test_fn(CovarianceSpec::cesare(0.0), h, 3)) {
        CHECK(std::abs(v) < 1e-15);
      }
    }
  }
  SECTION("worked value and sign") {
    const auto f = analytic_sep_test_fn(CovarianceSpec::gneiting_sep(1.0), {1, 0}, 2);
    REQUIRE(f.size() == 3);
    CHECK(f[0] == 0.0);
    // C(h,2)/C(h,0) - C(0,2)/C(0,0) = 0.5 exp(1 - 2^{-1/2}) - 0.5
    CHECK(f[2] == Approx(0.5 * (std::exp(1.0 - 1.0 / std::sqrt(2.0)) - 1.0)).epsilon(1e-12));
    CHECK(f[2] == Approx(0.17014).epsilon(1e-4));
    CHECK(analytic_sep_test_fn(CovarianceSpec::cesare(1.0), {1, 0}, 1)[1] < 0.0);
    CHECK(analytic_sep_test_fn(CovarianceSpec::cesare(0.0), {1, 0}, 1)[1] == 0.0);
  }
  SECTION("nondecreasing in beta") {
    double last = -1.0;
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double v = analytic_sep_test_fn(CovarianceSpec::gneiting_sep(beta), {1, 0}, 2)[2];
      CHECK(v >= last);
      last = v;
    }
  }
  SECTION("zero denominator") {
    CHECK_THROWS_AS(analytic_sep_test_fn(CovarianceSpec::gneiting_asym(1.0), {3, 0}, 2), SingularModelError);
  }
}

TEST_CASE("symmetry test function", "[covmodels]") {
  for (const auto& spec : symmetric_specs()) {
    for (const Vec2 h : kLags) {
      for (double v : analytic_sym_test_fn(spec, h, 5)) CHECK(v == 0.0);
    }
  }
  const auto g = analytic_sym_test_fn(CovarianceSpec::gneiting_asym(0.1), {1, 0}, 3);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == Approx(0.02).margin(1e-15));
}

TEST_CASE("parameter ranges", "[covmodels]") {
  CHECK_THROWS_AS(CovarianceSpec::gneiting_sep(-0.1), InputError);
  CHECK_THROWS_AS(CovarianceSpec::gneiting_sep(1.5), InputError);
  CHECK_THROWS_AS(CovarianceSpec::gneiting_asym(1.01), InputError);
  CHECK_THROWS_AS(CovarianceSpec::cesare(-1.0), InputError);
  CHECK_THROWS_AS(evaluate(CovarianceSpec::cesare(1.0), {NAN, 0}, 0), DomainError);
  CHECK_THROWS_AS(evaluate(CovarianceSpec::cesare(1.0), {0, 0}, INFINITY), DomainError);
}

TEST_CASE("covariance matrix", "[covmodels]") {
  const std::vector<double> one_time{0.0};
  SECTION("small cases") {
    const std::vector<Vec2> single{{0, 0}};
    const auto m1 = build_covariance_matrix(CovarianceSpec::gneiting_sep(0.5), single, one_time);
    REQUIRE(m1.rows() == 1);
    CHECK(m1(0, 0) == 1.0);
    const std::vector<Vec2> two{{0, 0}, {1, 0}};
    const auto m2 = build_covariance_matrix(CovarianceSpec::gneiting_sep(1.0), two, one_time);
    CHECK(m2(0, 1) == Approx(std::exp(-1.0)).epsilon(1e-14));
  }
  SECTION("site-major ordering") {
    const std::vector<Vec2> two{{0, 0}, {0.5, 0.5}};
    const std::vector<double> times{0, 1, 2};
    const auto spec = CovarianceSpec::gneiting_asym(0.1);
    const auto m = build_covariance_matrix(spec, two, times);
    // row (site 0, t=2), column (site 1, t=0): lag h = s1 - s0, u = 0 - 2
    CHECK(m(2, 3) == evaluate(spec, {0.5, 0.5}, -2.0));
  }
  SECTION("symmetric, constant diagonal and PSD") {
    const auto sites = unit_grid(4, 4);
    std::vector<double> times(50);
    for (std::size_t t = 0; t < times.size(); ++t) times[t] = static_cast<double>(t);
    for (const auto& spec : parametric_specs()) {
      const auto m = build_covariance_matrix(spec, sites, times);
      CHECK(m == m.transpose());
      CHECK((m.diagonal().array() == evaluate(spec, {0, 0}, 0)).all());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * eig.eigenvalues().maxCoeff());
    }
  }
  SECTION("geometry checks") {
    const std::vector<Vec2> dup{{0, 0}, {0, 0}};
    CHECK_THROWS_AS(build_covariance_matrix(CovarianceSpec::cesare(1), dup, one_time), InputError);
    const std::vector<Vec2> single{{0, 0}};
    const std::vector<double> unsorted{1.0, 0.0};
    CHECK_THROWS_AS(build_covariance_matrix(CovarianceSpec::cesare(1), single, unsorted), InputError);
  }
}

TEST_CASE("unit grid", "[covmodels]") {
  const auto g = unit_grid(4, 4);
  REQUIRE(g.size() == 16);
  CHECK(g[0] == Vec2{0, 0});
  CHECK(g[1].x == Approx(1.0 / 3.0));
  CHECK(g[4] == Vec2{0, 1.0 / 3.0});
  CHECK(g[15] == Vec2{1, 1});
}

TEST_CASE("spec JSON round trip", "[covmodels]") {
  for (const auto& spec : parametric_specs()) {
    const auto back = spec_from_json(spec_to_json(spec));
    CHECK(back.family() == spec.family());
    for (const Vec2 h : kLags) CHECK(evaluate(back, h, 1.5) == evaluate(spec, h, 1.5));
  }
  const std::vector<Vec2> sites{{0, 0}, {1, 0}};
  Eigen::MatrixXd s(2, 2);
  s << 2.0, 0.5, 0.5, 1.0;
  const auto emp = CovarianceSpec::empirical_separable(sites, s, {4.0, 2.0, 1.0});
  const auto back = spec_from_json(spec_to_json(emp));
  CHECK(evaluate(back, {1, 0}, 2) == evaluate(emp, {1, 0}, 2));
  CHECK_THROWS_AS(spec_from_json("{\"family\": \"Nope\"}"), InputError);
  CHECK_THROWS_AS(spec_from_json("not json"), InputError);
  CHECK_THROWS_AS(spec_from_json(R"({"family": "GneitingSep", "params": {"beta": 2}})"), InputError);
}

TEST_CASE("empirical separable lookup", "[covmodels]") {
  const std::vector<Vec2> sites{{0, 0}, {1, 0}, {0, 1}};
  Eigen::MatrixXd s(3, 3);
  s << 2.0, 0.5, 0.25, 0.5, 1.0, 0.125, 0.25, 0.125, 4.0;
  const auto spec = CovarianceSpec::empirical_separable(sites, s, {2.0, 1.0, 0.5});
  // variance at the origin is the mean of the site variances
  CHECK(evaluate(spec, {0, 0}, 0) == Approx((2.0 + 1.0 + 4.0) / 3.0));
  CHECK(evaluate(spec, {1, 0}, 1) == Approx(0.5 * 0.5));
  CHECK(spec.site_covariance(0, 2, -2) == 0.25 * 0.25);
  CHECK_THROWS_AS(evaluate(spec, {5, 5}, 0), DomainError);
  CHECK_THROWS_AS(spec.site_covariance(0, 1, 3), DomainError);
  CHECK_THROWS_AS(evaluate(spec, {1, 0}, 0.5), DomainError);
}
