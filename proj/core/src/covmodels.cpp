#include "stcov/covmodels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "stcov/errors.hpp"

namespace stcov {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kLagMatchTol = 1e-9;

bool is_integral(double v) { return std::abs(v - std::round(v)) <= kLagMatchTol; }

void require_finite(Vec2 h, double u) {
  if (!std::isfinite(h.x) || !std::isfinite(h.y) || !std::isfinite(u)) {
    throw DomainError("covariance evaluated at a non-finite lag");
  }
}

void require_range(double v, double lo, double hi, const char* name) {
  if (!(v >= lo && v <= hi)) {
    throw InputError(std::string("parameter ") + name + " = " + std::to_string(v) +
                     " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

// Fixed-parameter model instances. Separable factors are exactly 1 at the
// origin so product forms cancel without rounding in the test functions.
double gneiting(double beta, Vec2 h, double u) {
  const double psi = 0.5 * std::abs(u) + 1.0;
  return (1.0 / psi) * std::exp(-h.norm() / std::pow(psi, beta / 2.0));
}

double cressie_huang_sep(Vec2 h, double u) {
  const double psi = 0.5 * std::abs(u) + 1.0;
  const double hn = h.norm();
  return (1.0 / (psi * psi)) * std::pow(hn * hn + 1.0, -1.5);
}

double cressie_huang_nonsep(Vec2 h, double u) {
  const double psi = 0.5 * std::abs(u) + 1.0;
  const double hn = h.norm();
  return psi / std::pow(psi * psi + hn * hn, 1.5);
}

double cesare(double k, Vec2 h, double u) {
  const double es = std::exp(-h.norm());
  const double et = std::exp(-std::abs(u));
  return (es * et + et + k * es) / 3.0;
}

// Asymmetric instance: a = 0.2, c = 1, alpha = 0.5, beta = 0, v = 0.2 and a
// Lagrangian hinge of half-width 2 along the first coordinate.
double gneiting_asym(double lambda, Vec2 h, double u) {
  const double symmetric = (1.0 - lambda) / (0.2 * std::abs(u) + 1.0) * std::exp(-h.norm());
  const double hinge = std::max(0.0, 1.0 - 0.5 * std::abs(h.x - 0.2 * u));
  return symmetric + lambda * hinge;
}

double empirical_lookup(const CovarianceSpec& spec, Vec2 h, double u) {
  if (!is_integral(u)) {
    throw DomainError("empirical covariance requires an integral temporal lag, got " +
                      std::to_string(u));
  }
  const long lag = std::lround(u);
  const auto& sites = spec.sites();
  const double tol = kLagMatchTol * (1.0 + h.norm());
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t j = 0; j < sites.size(); ++j) {
      if (((sites[j] - sites[i]) - h).norm() <= tol) {
        sum += spec.site_covariance(i, j, lag);
        ++count;
      }
    }
  }
  if (count == 0) {
    throw DomainError("spatial lag (" + std::to_string(h.x) + ", " + std::to_string(h.y) +
                      ") is not in the observed lag set");
  }
  return sum / static_cast<double>(count);
}

std::vector<std::size_t> match_sites(const CovarianceSpec& spec, std::span<const Vec2> sites) {
  const auto& own = spec.sites();
  std::vector<std::size_t> index(sites.size());
  for (std::size_t a = 0; a < sites.size(); ++a) {
    auto it = std::find_if(own.begin(), own.end(), [&](Vec2 s) {
      return (s - sites[a]).norm() <= kLagMatchTol * (1.0 + s.norm());
    });
    if (it == own.end()) {
      throw DomainError("site (" + std::to_string(sites[a].x) + ", " + std::to_string(sites[a].y) +
                        ") is not one of the empirical model's sites");
    }
    index[a] = static_cast<std::size_t>(it - own.begin());
  }
  return index;
}

void check_geometry(std::span<const Vec2> sites, std::span<const double> times, const char* what) {
  for (double t : times) {
    if (!std::isfinite(t)) throw InputError(std::string(what) + " contain a non-finite time");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw InputError(std::string(what) + " are not strictly increasing");
    }
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (!std::isfinite(sites[i].x) || !std::isfinite(sites[i].y)) {
      throw InputError("site coordinates must be finite");
    }
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      if (sites[i] == sites[j]) {
        throw InputError("sites " + std::to_string(i) + " and " + std::to_string(j) +
                         " coincide");
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view family_name(Family f) {
  switch (f) {
    case Family::GneitingSep: return "GneitingSep";
    case Family::CressieHuangSep: return "CressieHuangSep";
    case Family::CressieHuangNonsep: return "CressieHuangNonsep";
    case Family::Cesare: return "Cesare";
    case Family::GneitingAsym: return "GneitingAsym";
    case Family::SeparableProduct: return "SeparableProduct";
    case Family::EmpiricalSeparable: return "EmpiricalSeparable";
    case Family::EmpiricalSymmetrized: return "EmpiricalSymmetrized";
  }
  return "?";
}

Family family_from_name(std::string_view name) {
  static const std::map<std::string, Family, std::less<>> names = {
      {"GneitingSep", Family::GneitingSep},
      {"CressieHuangSep", Family::CressieHuangSep},
      {"CressieHuangNonsep", Family::CressieHuangNonsep},
      {"Cesare", Family::Cesare},
      {"GneitingAsym", Family::GneitingAsym},
      {"SeparableProduct", Family::SeparableProduct},
      {"EmpiricalSeparable", Family::EmpiricalSeparable},
      {"EmpiricalSymmetrized", Family::EmpiricalSymmetrized},
  };
  auto it = names.find(name);
  if (it == names.end()) throw InputError("unknown covariance family '" + std::string(name) + "'");
  return it->second;
}

// ---------------------------------------------------------------------------

Kernel1D Kernel1D::exponential(double variance, double range) {
  if (!(variance > 0.0) || !(range > 0.0)) {
    throw InputError("exponential kernel needs variance > 0 and range > 0");
  }
  return {Kind::Exponential, variance, range, {}};
}

Kernel1D Kernel1D::gaussian(double variance, double range) {
  if (!(variance > 0.0) || !(range > 0.0)) {
    throw InputError("gaussian kernel needs variance > 0 and range > 0");
  }
  return {Kind::Gaussian, variance, range, {}};
}

Kernel1D Kernel1D::delta(double variance) {
  if (!(variance > 0.0)) throw InputError("delta kernel needs variance > 0");
  return {Kind::Delta, variance, 1.0, {}};
}

Kernel1D Kernel1D::tabulated(std::vector<double> values) {
  if (values.empty() || !(values[0] > 0.0)) {
    throw InputError("tabulated kernel needs a positive lag-0 value");
  }
  for (double v : values) {
    if (!std::isfinite(v) || std::abs(v) > values[0]) {
      throw InputError("tabulated kernel values must be finite and bounded by the lag-0 value");
    }
  }
  return {Kind::Table, values[0], 1.0, std::move(values)};
}

double Kernel1D::operator()(double distance) const {
  const double d = std::abs(distance);
  switch (kind) {
    case Kind::Exponential: return variance * std::exp(-d / range);
    case Kind::Gaussian: {
      const double z = d / range;
      return variance * std::exp(-z * z);
    }
    case Kind::Delta: return d <= kLagMatchTol ? variance : 0.0;
    case Kind::Table: {
      if (!is_integral(d)) {
        throw DomainError("tabulated kernel evaluated at non-integral distance " +
                          std::to_string(d));
      }
      const auto k = static_cast<std::size_t>(std::lround(d));
      if (k >= table.size()) {
        throw DomainError("tabulated kernel evaluated beyond its table at distance " +
                          std::to_string(k));
      }
      return table[k];
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

CovarianceSpec CovarianceSpec::gneiting_sep(double beta) {
  require_range(beta, 0.0, 1.0, "beta");
  return CovarianceSpec(GneitingSepParams{beta});
}

CovarianceSpec CovarianceSpec::cressie_huang_sep() { return CovarianceSpec(CressieHuangSepParams{}); }

CovarianceSpec CovarianceSpec::cressie_huang_nonsep() {
  return CovarianceSpec(CressieHuangNonsepParams{});
}

CovarianceSpec CovarianceSpec::cesare(double k) {
  require_range(k, 0.0, std::numeric_limits<double>::max(), "k");
  return CovarianceSpec(CesareParams{k});
}

CovarianceSpec CovarianceSpec::gneiting_asym(double lambda) {
  require_range(lambda, 0.0, 1.0, "lambda");
  return CovarianceSpec(GneitingAsymParams{lambda});
}

CovarianceSpec CovarianceSpec::separable_product(Kernel1D spatial, Kernel1D temporal) {
  if (!(spatial(0.0) > 0.0) || !(temporal(0.0) > 0.0)) {
    throw InputError("separable product kernels need positive variance");
  }
  return CovarianceSpec(SeparableProductParams{std::move(spatial), std::move(temporal)});
}

CovarianceSpec CovarianceSpec::empirical_separable(std::vector<Vec2> sites, Eigen::MatrixXd spatial,
                                                   std::vector<double> temporal_autocov) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  if (n == 0 || spatial.rows() != n || spatial.cols() != n) {
    throw InputError("empirical separable model: spatial matrix must be n x n for n sites");
  }
  if (temporal_autocov.empty() || !(temporal_autocov[0] > 0.0)) {
    throw DegenerateDataError("empirical separable model: lag-0 temporal autocovariance is not positive");
  }
  if (!spatial.allFinite() || !(spatial.diagonal().mean() > 0.0)) {
    throw DegenerateDataError("empirical separable model: spatial covariance has no positive variance");
  }
  if ((spatial - spatial.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + spatial.cwiseAbs().maxCoeff())) {
    throw InputError("empirical separable model: spatial matrix is not symmetric");
  }
  const double c0 = temporal_autocov[0];
  std::vector<double> normalized(temporal_autocov.size());
  normalized[0] = 1.0;
  for (std::size_t u = 1; u < temporal_autocov.size(); ++u) {
    if (!std::isfinite(temporal_autocov[u])) {
      throw InputError("empirical separable model: non-finite temporal autocovariance");
    }
    normalized[u] = temporal_autocov[u] / c0;
  }
  return CovarianceSpec(
      EmpiricalSeparableParams{std::move(sites), std::move(spatial), std::move(normalized), c0});
}

CovarianceSpec CovarianceSpec::empirical_symmetrized(std::vector<Vec2> sites,
                                                     std::vector<Eigen::MatrixXd> lag_cov) {
  const auto n = static_cast<Eigen::Index>(sites.size());
  if (n == 0 || lag_cov.empty()) {
    throw InputError("empirical symmetrized model needs sites and at least the lag-0 matrix");
  }
  for (const auto& m : lag_cov) {
    if (m.rows() != n || m.cols() != n || !m.allFinite()) {
      throw InputError("empirical symmetrized model: lag matrices must be finite n x n");
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
      throw InputError("empirical symmetrized model: lag matrices must be symmetric");
    }
  }
  if (!(lag_cov[0].diagonal().mean() > 0.0)) {
    throw DegenerateDataError("empirical symmetrized model has no positive variance");
  }
  return CovarianceSpec(EmpiricalSymmetrizedParams{std::move(sites), std::move(lag_cov)});
}

Family CovarianceSpec::family() const {
  return std::visit(
      overloaded{
          [](const GneitingSepParams&) { return Family::GneitingSep; },
          [](const CressieHuangSepParams&) { return Family::CressieHuangSep; },
          [](const CressieHuangNonsepParams&) { return Family::CressieHuangNonsep; },
          [](const CesareParams&) { return Family::Cesare; },
          [](const GneitingAsymParams&) { return Family::GneitingAsym; },
          [](const SeparableProductParams&) { return Family::SeparableProduct; },
          [](const EmpiricalSeparableParams&) { return Family::EmpiricalSeparable; },
          [](const EmpiricalSymmetrizedParams&) { return Family::EmpiricalSymmetrized; },
      },
      params_);
}

bool CovarianceSpec::is_empirical() const {
  const Family f = family();
  return f == Family::EmpiricalSeparable || f == Family::EmpiricalSymmetrized;
}

const std::vector<Vec2>& CovarianceSpec::sites() const {
  static const std::vector<Vec2> none;
  if (const auto* p = std::get_if<EmpiricalSeparableParams>(&params_)) return p->sites;
  if (const auto* p = std::get_if<EmpiricalSymmetrizedParams>(&params_)) return p->sites;
  return none;
}

double CovarianceSpec::site_covariance(std::size_t i, std::size_t j, long lag) const {
  const auto abs_lag = static_cast<std::size_t>(lag < 0 ? -lag : lag);
  if (const auto* p = std::get_if<EmpiricalSeparableParams>(&params_)) {
    if (abs_lag >= p->temporal.size()) {
      throw DomainError("temporal lag " + std::to_string(lag) + " outside the observed lag set");
    }
    return p->spatial(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
           p->temporal[abs_lag];
  }
  if (const auto* p = std::get_if<EmpiricalSymmetrizedParams>(&params_)) {
    if (abs_lag >= p->lag_cov.size()) return 0.0;
    return p->lag_cov[abs_lag](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  throw InputError("site_covariance is only defined for empirical models");
}

// ---------------------------------------------------------------------------

double evaluate(const CovarianceSpec& spec, Vec2 h, double u) {
  require_finite(h, u);
  return std::visit(
      overloaded{
          [&](const GneitingSepParams& p) { return gneiting(p.beta, h, u); },
          [&](const CressieHuangSepParams&) { return cressie_huang_sep(h, u); },
          [&](const CressieHuangNonsepParams&) { return cressie_huang_nonsep(h, u); },
          [&](const CesareParams& p) { return cesare(p.k, h, u); },
          [&](const GneitingAsymParams& p) { return gneiting_asym(p.lambda, h, u); },
          [&](const SeparableProductParams& p) { return p.spatial(h.norm()) * p.temporal(u); },
          [&](const EmpiricalSeparableParams&) { return empirical_lookup(spec, h, u); },
          [&](const EmpiricalSymmetrizedParams&) { return empirical_lookup(spec, h, u); },
      },
      spec.params());
}

std::vector<double> analytic_sep_test_fn(const CovarianceSpec& spec, Vec2 h, int max_lag) {
  if (max_lag < 0) throw InputError("max_lag must be non-negative");
  const double c_h0 = evaluate(spec, h, 0.0);
  const double c_00 = evaluate(spec, Vec2{}, 0.0);
  if (c_h0 == 0.0 || c_00 == 0.0) {
    throw SingularModelError("separability test function undefined: C(h,0) or C(0,0) is zero");
  }
  std::vector<double> f(static_cast<std::size_t>(max_lag) + 1, 0.0);
  // Cross-multiplied form of C(h,u)/C(h,0) - C(0,u)/C(0,0); product-form
  // models then cancel to exactly zero.
  const double denom = c_h0 * c_00;
  for (int u = 1; u <= max_lag; ++u) {
    const double c_hu = evaluate(spec, h, u);
    const double c_0u = evaluate(spec, Vec2{}, u);
    f[static_cast<std::size_t>(u)] = (c_hu * c_00 - c_0u * c_h0) / denom;
  }
  return f;
}

std::vector<double> analytic_sym_test_fn(const CovarianceSpec& spec, Vec2 h, int max_lag) {
  if (max_lag < 1) throw InputError("max_lag must be at least 1");
  std::vector<double> g(static_cast<std::size_t>(max_lag));
  for (int u = 1; u <= max_lag; ++u) {
    g[static_cast<std::size_t>(u - 1)] = evaluate(spec, h, u) - evaluate(spec, h, -u);
  }
  return g;
}

Eigen::MatrixXd covariance_block(const CovarianceSpec& spec, std::span<const Vec2> sites,
                                 std::span<const double> row_times,
                                 std::span<const double> col_times) {
  check_geometry(sites, row_times, "row times");
  check_geometry({}, col_times, "column times");
  const auto n = sites.size();
  const auto pr = row_times.size();
  const auto pc = col_times.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n * pr), static_cast<Eigen::Index>(n * pc));

  const bool integral_times = std::all_of(row_times.begin(), row_times.end(), is_integral) &&
                              std::all_of(col_times.begin(), col_times.end(), is_integral);

  if (spec.is_empirical()) {
    if (!integral_times) throw DomainError("empirical models need integral time stamps");
    const auto idx = match_sites(spec, sites);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t t = 0; t < pr; ++t) {
          for (std::size_t s = 0; s < pc; ++s) {
            const long lag = std::lround(col_times[s] - row_times[t]);
            out(static_cast<Eigen::Index>(a * pr + t), static_cast<Eigen::Index>(b * pc + s)) =
                spec.site_covariance(idx[a], idx[b], lag);
          }
        }
      }
    }
    return out;
  }

  if (integral_times && pr > 0 && pc > 0) {
    // Tabulate C per site pair and integral lag; each value is evaluated once.
    const long lag_lo = std::lround(col_times.front() - row_times.back());
    const long lag_hi = std::lround(col_times.back() - row_times.front());
    const auto width = static_cast<std::size_t>(lag_hi - lag_lo + 1);
    std::vector<double> table(width);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        const Vec2 h = sites[b] - sites[a];
        for (std::size_t k = 0; k < width; ++k) {
          table[k] = evaluate(spec, h, static_cast<double>(lag_lo + static_cast<long>(k)));
        }
        for (std::size_t t = 0; t < pr; ++t) {
          for (std::size_t s = 0; s < pc; ++s) {
            const long lag = std::lround(col_times[s] - row_times[t]);
            out(static_cast<Eigen::Index>(a * pr + t), static_cast<Eigen::Index>(b * pc + s)) =
                table[static_cast<std::size_t>(lag - lag_lo)];
          }
        }
      }
    }
    return out;
  }

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const Vec2 h = sites[b] - sites[a];
      for (std::size_t t = 0; t < pr; ++t) {
        for (std::size_t s = 0; s < pc; ++s) {
          out(static_cast<Eigen::Index>(a * pr + t), static_cast<Eigen::Index>(b * pc + s)) =
              evaluate(spec, h, col_times[s] - row_times[t]);
        }
      }
    }
  }
  return out;
}

Eigen::MatrixXd build_covariance_matrix(const CovarianceSpec& spec, std::span<const Vec2> sites,
                                        std::span<const double> times) {
  Eigen::MatrixXd m = covariance_block(spec, sites, times, times);
  // C(h,u) = C(-h,-u) holds analytically; copy the upper triangle so the
  // matrix is bitwise symmetric.
  const auto dim = m.rows();
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i + 1; j < dim; ++j) m(j, i) = m(i, j);
  }
  return m;
}

std::vector<Vec2> unit_grid(std::size_t side_x, std::size_t side_y) {
  if (side_x == 0 || side_y == 0) throw InputError("grid sides must be positive");
  std::vector<Vec2> out;
  out.reserve(side_x * side_y);
  auto coord = [](std::size_t i, std::size_t side) {
    return side == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(side - 1);
  };
  for (std::size_t iy = 0; iy < side_y; ++iy) {
    for (std::size_t ix = 0; ix < side_x; ++ix) out.push_back({coord(ix, side_x), coord(iy, side_y)});
  }
  return out;
}

}  // namespace stcov
