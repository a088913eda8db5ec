#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace stcov {

/// Planar point or spatial lag.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  [[nodiscard]] double norm() const { return std::hypot(x, y); }
};

enum class Family {
  GneitingSep,
  CressieHuangSep,
  CressieHuangNonsep,
  Cesare,
  GneitingAsym,
  SeparableProduct,
  EmpiricalSeparable,
  EmpiricalSymmetrized,
};

[[nodiscard]] std::string_view family_name(Family f);
[[nodiscard]] Family family_from_name(std::string_view name);

/// One-dimensional covariance of a non-negative distance (spatial norm or |temporal lag|).
struct Kernel1D {
  enum class Kind { Exponential, Gaussian, Delta, Table };

  Kind kind = Kind::Exponential;
  double variance = 1.0;
  double range = 1.0;
  // Table: values at integer distances 0, 1, 2, ...
  std::vector<double> table;

  static Kernel1D exponential(double variance, double range);
  static Kernel1D gaussian(double variance, double range);
  static Kernel1D delta(double variance = 1.0);
  static Kernel1D tabulated(std::vector<double> values);

  [[nodiscard]] double operator()(double distance) const;
};

struct GneitingSepParams {
  double beta = 0.0;
};
struct CressieHuangSepParams {};
struct CressieHuangNonsepParams {};
struct CesareParams {
  double k = 1.0;
};
struct GneitingAsymParams {
  double lambda = 0.0;
};
struct SeparableProductParams {
  Kernel1D spatial;
  Kernel1D temporal;
};

/// Separable covariance assembled from data: spatial(i,j) * temporal[|u|].
/// `temporal` is normalized so temporal[0] == 1; `variance_scale` keeps the
/// unnormalized lag-0 autocovariance for reporting.
struct EmpiricalSeparableParams {
  std::vector<Vec2> sites;
  Eigen::MatrixXd spatial;
  std::vector<double> temporal;
  double variance_scale = 1.0;
};

/// Fully symmetric covariance assembled from data: lag_cov[|u|](i,j), each a
/// symmetric n x n matrix. Lags beyond lag_cov.size()-1 are zero.
struct EmpiricalSymmetrizedParams {
  std::vector<Vec2> sites;
  std::vector<Eigen::MatrixXd> lag_cov;
};

/// Tagged parametric covariance model. Parameter ranges are checked by the
/// factory functions; a constructed spec is always valid.
class CovarianceSpec {
 public:
  using Params = std::variant<GneitingSepParams, CressieHuangSepParams, CressieHuangNonsepParams,
                              CesareParams, GneitingAsymParams, SeparableProductParams,
                              EmpiricalSeparableParams, EmpiricalSymmetrizedParams>;

  static CovarianceSpec gneiting_sep(double beta);
  static CovarianceSpec cressie_huang_sep();
  static CovarianceSpec cressie_huang_nonsep();
  static CovarianceSpec cesare(double k);
  static CovarianceSpec gneiting_asym(double lambda);
  static CovarianceSpec separable_product(Kernel1D spatial, Kernel1D temporal);
  static CovarianceSpec empirical_separable(std::vector<Vec2> sites, Eigen::MatrixXd spatial,
                                            std::vector<double> temporal_autocov);
  static CovarianceSpec empirical_symmetrized(std::vector<Vec2> sites,
                                              std::vector<Eigen::MatrixXd> lag_cov);

  [[nodiscard]] Family family() const;
  [[nodiscard]] const Params& params() const { return params_; }

  [[nodiscard]] bool is_empirical() const;
  /// Sites an empirical spec is tied to; empty for parametric families.
  [[nodiscard]] const std::vector<Vec2>& sites() const;

  /// Covariance between site i at time t and site j at time t + lag, for
  /// empirical specs. Lag must be integral.
  [[nodiscard]] double site_covariance(std::size_t i, std::size_t j, long lag) const;

 private:
  explicit CovarianceSpec(Params p) : params_(std::move(p)) {}
  Params params_;
};

/// C(h, u) = Cov{Z(s, t), Z(s + h, t + u)}.
[[nodiscard]] double evaluate(const CovarianceSpec& spec, Vec2 h, double u);

/// f_h(u) = C(h,u)/C(h,0) - C(0,u)/C(0,0) at u = 0..max_lag.
[[nodiscard]] std::vector<double> analytic_sep_test_fn(const CovarianceSpec& spec, Vec2 h,
                                                       int max_lag);

/// g_h(u) = C(h,u) - C(h,-u) at u = 1..max_lag.
[[nodiscard]] std::vector<double> analytic_sym_test_fn(const CovarianceSpec& spec, Vec2 h,
                                                       int max_lag);

/// Covariance between the space-time points (sites x row_times) and
/// (sites x col_times), both ordered site-major: index = site * times + t.
[[nodiscard]] Eigen::MatrixXd covariance_block(const CovarianceSpec& spec,
                                               std::span<const Vec2> sites,
                                               std::span<const double> row_times,
                                               std::span<const double> col_times);

/// Full (n*p) x (n*p) covariance in site-major order.
[[nodiscard]] Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec,
                                                      std::span<const Vec2> sites,
                                                      std::span<const double> times);

/// Regular side x side grid on the unit square, row-major in y then x.
[[nodiscard]] std::vector<Vec2> unit_grid(std::size_t side_x, std::size_t side_y);

std::string spec_to_json(const CovarianceSpec& spec);
CovarianceSpec spec_from_json(std::string_view text);

}  // namespace stcov
