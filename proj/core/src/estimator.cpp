#include "stcov/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stcov/errors.hpp"
#include "stcov/log.hpp"

namespace stcov {
namespace {

// Mean computed around the first element, so a constant window yields its
// value exactly.
double window_mean(std::span<const double> v) {
  const double anchor = v.front();
  double s = 0.0;
  for (double x : v) s += x - anchor;
  return anchor + s / static_cast<double>(v.size());
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::string pair_name(std::size_t i, std::size_t j) {
  return "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

void check_pair(const SpaceTimeDataset& data, std::size_t i, std::size_t j, int max_lag, int min_lag) {
  if (i >= data.n_sites() || j >= data.n_sites()) throw InputError("site index out of range");
  if (i == j) throw InputError("test functions need two distinct sites");
  if (max_lag < min_lag) throw InputError("max lag must be at least " + std::to_string(min_lag));
  if (static_cast<std::size_t>(max_lag) + 2 > data.n_times()) {
    throw InputError("max lag " + std::to_string(max_lag) + " needs at least " +
                     std::to_string(max_lag + 2) + " time points");
  }
}

// Means of the leading and trailing p - u points, u = 0..max_lag.
struct WindowMeans {
  std::vector<double> head, tail;
};

WindowMeans window_means(std::span<const double> x, int max_lag) {
  WindowMeans w;
  for (int u = 0; u <= max_lag; ++u) {
    const std::size_t m = x.size() - static_cast<std::size_t>(u);
    w.head.push_back(window_mean(x.first(m)));
    w.tail.push_back(window_mean(x.subspan(static_cast<std::size_t>(u), m)));
  }
  return w;
}

// sum_t (x_t - mx)(y_{t+u} - my) / (p - u) over the overlap, u >= 0.
double lagged_cov(std::span<const double> x, std::span<const double> y, int u, double mx, double my) {
  const std::size_t m = x.size() - static_cast<std::size_t>(u);
  const double* ys = y.data() + u;
  double s = 0.0;
  for (std::size_t t = 0; t < m; ++t) s += (x[t] - mx) * (ys[t] - my);
  return s / static_cast<double>(m);
}

// Cross-covariance of x and y at lag u with x's leading and y's trailing window means.
double lagged_cov(std::span<const double> x, const WindowMeans& wx, std::span<const double> y,
                  const WindowMeans& wy, int u) {
  const auto k = static_cast<std::size_t>(u);
  return lagged_cov(x, y, u, wx.head[k], wy.tail[k]);
}

std::vector<double> autocov(std::span<const double> x, const WindowMeans& w, int max_lag) {
  std::vector<double> out(static_cast<std::size_t>(max_lag) + 1);
  for (int u = 0; u <= max_lag; ++u) out[static_cast<std::size_t>(u)] = lagged_cov(x, w, x, w, u);
  return out;
}

std::vector<double> sep_curve(std::span<const double> x, const WindowMeans& wx,
                              std::span<const double> y, const WindowMeans& wy,
                              const std::vector<double>& c0, int max_lag, std::size_t i,
                              std::size_t j) {
  const double cross0 = lagged_cov(x, wx, y, wy, 0);
  if (cross0 == 0.0 || c0[0] == 0.0) {
    throw DegenerateDataError("pair " + pair_name(i, j) + " has zero lag-0 covariance");
  }
  std::vector<double> f(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int u = 1; u <= max_lag; ++u) {
    const auto k = static_cast<std::size_t>(u);
    f[k] = lagged_cov(x, wx, y, wy, u) / cross0 - c0[k] / c0[0];
  }
  return f;
}

std::vector<double> sym_curve(std::span<const double> x, const WindowMeans& wx,
                              std::span<const double> y, const WindowMeans& wy, int max_lag) {
  std::vector<double> g(static_cast<std::size_t>(max_lag));
  for (int u = 1; u <= max_lag; ++u) {
    g[static_cast<std::size_t>(u - 1)] = lagged_cov(x, wx, y, wy, u) - lagged_cov(y, wy, x, wx, u);
  }
  return g;
}

}  // namespace

std::string_view kind_name(TestKind kind) {
  return kind == TestKind::Separability ? "separability" : "symmetry";
}

TestKind kind_from_name(std::string_view name) {
  if (name == "separability" || name == "sep") return TestKind::Separability;
  if (name == "symmetry" || name == "sym") return TestKind::Symmetry;
  throw InputError("unknown test kind '" + std::string(name) + "' (separability|symmetry)");
}

double cross_cov_hat(std::span<const double> x, std::span<const double> y, int u) {
  const std::size_t p = x.size();
  if (p < 2 || y.size() != p) throw InputError("cross_cov_hat needs two series of equal length >= 2");
  if (u < 0) return cross_cov_hat(y, x, -u);
  if (static_cast<std::size_t>(u) + 2 > p) {
    throw InputError("lag " + std::to_string(u) + " too large for series of length " + std::to_string(p));
  }
  const std::size_t m = p - static_cast<std::size_t>(u);
  return lagged_cov(x, y, u, window_mean(x.first(m)), window_mean(y.subspan(static_cast<std::size_t>(u), m)));
}

std::pair<std::size_t, std::size_t> canonical_pair(const SpaceTimeDataset& data, std::size_t i,
                                                   std::size_t j) {
  const Vec2 h = data.sites[j] - data.sites[i];
  const bool flip = h.x < 0.0 || (h.x == 0.0 && h.y < 0.0);
  return flip ? std::pair{j, i} : std::pair{i, j};
}

std::vector<double> sep_test_fn_hat(const SpaceTimeDataset& data, std::size_t i, std::size_t j,
                                    int max_lag, AutocovMode mode) {
  check_pair(data, i, j, max_lag, 0);
  const auto x = data.series(i);
  const auto y = data.series(j);
  if (is_constant(x) || is_constant(y)) {
    throw DegenerateDataError("pair " + pair_name(i, j) + " involves a constant series");
  }
  const auto wx = window_means(x, max_lag);
  const auto wy = window_means(y, max_lag);
  std::vector<double> c0(static_cast<std::size_t>(max_lag) + 1, 0.0);
  if (mode == AutocovMode::PairAverage) {
    const auto ci = autocov(x, wx, max_lag);
    const auto cj = autocov(y, wy, max_lag);
    for (std::size_t k = 0; k < c0.size(); ++k) c0[k] = (ci[k] + cj[k]) / 2.0;
  } else {
    std::size_t used = 0;
    for (std::size_t s = 0; s < data.n_sites(); ++s) {
      if (is_constant(data.series(s))) continue;
      const auto series = data.series(s);
      const auto cs = autocov(series, window_means(series, max_lag), max_lag);
      for (std::size_t k = 0; k < c0.size(); ++k) c0[k] += cs[k];
      ++used;
    }
    for (double& v : c0) v /= static_cast<double>(used);
  }
  return sep_curve(x, wx, y, wy, c0, max_lag, i, j);
}

std::vector<double> sym_test_fn_hat(const SpaceTimeDataset& data, std::size_t i, std::size_t j,
                                    int max_lag) {
  check_pair(data, i, j, max_lag, 1);
  const auto [a, b] = canonical_pair(data, i, j);
  const auto x = data.series(a);
  const auto y = data.series(b);
  return sym_curve(x, window_means(x, max_lag), y, window_means(y, max_lag), max_lag);
}

CurveSet all_pairs_test_fns(const SpaceTimeDataset& data, TestKind kind, int max_lag,
                            const EstimatorOptions& options) {
  validate(data);
  const int min_lag = kind == TestKind::Separability ? 0 : 1;
  check_pair(data, 0, 1, max_lag, std::max(min_lag, 1));
  const std::size_t n = data.n_sites();

  std::vector<bool> constant(n);
  std::vector<WindowMeans> means(n);
  std::vector<std::vector<double>> auto_cov(n);
  std::vector<double> global(static_cast<std::size_t>(max_lag) + 1, 0.0);
  std::size_t usable = 0;
  for (std::size_t s = 0; s < n; ++s) {
    constant[s] = is_constant(data.series(s));
    if (constant[s]) continue;
    means[s] = window_means(data.series(s), max_lag);
    if (kind != TestKind::Separability) continue;
    auto_cov[s] = autocov(data.series(s), means[s], max_lag);
    for (std::size_t k = 0; k < global.size(); ++k) global[k] += auto_cov[s][k];
    ++usable;
  }
  if (usable > 0) {
    for (double& v : global) v /= static_cast<double>(usable);
  }

  CurveSet out;
  out.kind = kind;
  for (int u = min_lag; u <= max_lag; ++u) out.lags.push_back(u);
  std::vector<std::vector<double>> rows;

  auto drop = [&](std::size_t i, std::size_t j, const std::string& why) {
    out.dropped.emplace_back(i, j);
    if (options.warn_on_drop) log_warning("dropping pair " + pair_name(i, j) + ": " + why);
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (constant[i] || constant[j]) {
        drop(i, j, "constant series");
        continue;
      }
      if (kind == TestKind::Separability) {
        std::vector<double> c0(global.size());
        if (options.autocov == AutocovMode::PairAverage) {
          for (std::size_t k = 0; k < c0.size(); ++k) c0[k] = (auto_cov[i][k] + auto_cov[j][k]) / 2.0;
        } else {
          c0 = global;
        }
        try {
          rows.push_back(sep_curve(data.series(i), means[i], data.series(j), means[j], c0, max_lag, i, j));
        } catch (const DegenerateDataError& e) {
          drop(i, j, e.what());
          continue;
        }
        out.pairs.push_back({i, j, data.sites[j] - data.sites[i]});
      } else {
        const auto [a, b] = canonical_pair(data, i, j);
        rows.push_back(sym_curve(data.series(a), means[a], data.series(b), means[b], max_lag));
        out.pairs.push_back({a, b, data.sites[b] - data.sites[a]});
      }
    }
  }

  if (rows.empty()) throw DegenerateDataError("no usable site pairs: every pair was dropped");
  out.curves.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.lags.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      out.curves(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return out;
}

}  // namespace stcov
