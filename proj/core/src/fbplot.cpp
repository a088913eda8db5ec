#include "stcov/fbplot.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "stcov/depth.hpp"
#include "stcov/errors.hpp"

namespace stcov {

BoxplotSummary functional_boxplot(const RowMatrix& curves, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw InputError("fence factor must be positive");
  const auto counts = depth_counts(curves);
  const auto n = static_cast<std::size_t>(curves.rows());
  const auto T = static_cast<Eigen::Index>(curves.cols());

  BoxplotSummary out;
  out.factor = factor;
  out.mbd.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.mbd[i] = static_cast<double>(counts.hits[i]) / static_cast<double>(counts.pairs * counts.grid);
  }
  const auto order = mbd_order(counts);
  out.median_index = order.front();
  out.central_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2));

  const auto envelope = [&](const std::vector<std::size_t>& rows, std::vector<double>& lo,
                            std::vector<double>& hi) {
    lo.assign(static_cast<std::size_t>(T), 0.0);
    hi.assign(static_cast<std::size_t>(T), 0.0);
    for (Eigen::Index t = 0; t < T; ++t) {
      double a = curves(static_cast<Eigen::Index>(rows.front()), t);
      double b = a;
      for (std::size_t r : rows) {
        a = std::min(a, curves(static_cast<Eigen::Index>(r), t));
        b = std::max(b, curves(static_cast<Eigen::Index>(r), t));
      }
      lo[static_cast<std::size_t>(t)] = a;
      hi[static_cast<std::size_t>(t)] = b;
    }
  };
  envelope(out.central_indices, out.central_lower, out.central_upper);

  out.fence_lower.resize(static_cast<std::size_t>(T));
  out.fence_upper.resize(static_cast<std::size_t>(T));
  for (std::size_t t = 0; t < out.fence_lower.size(); ++t) {
    const double width = out.central_upper[t] - out.central_lower[t];
    out.fence_lower[t] = out.central_lower[t] - factor * width;
    out.fence_upper[t] = out.central_upper[t] + factor * width;
  }

  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    bool outside = false;
    for (Eigen::Index t = 0; t < T && !outside; ++t) {
      const double v = curves(static_cast<Eigen::Index>(i), t);
      outside = v < out.fence_lower[static_cast<std::size_t>(t)] ||
                v > out.fence_upper[static_cast<std::size_t>(t)];
    }
    (outside ? out.outlier_indices : inliers).push_back(i);
  }
  envelope(inliers, out.whisker_lower, out.whisker_upper);

  for (Eigen::Index t = 0; t < T; ++t) {
    const double v = curves(static_cast<Eigen::Index>(out.median_index), t);
    if (std::abs(v) > out.median_max_abs) {
      out.median_max_abs = std::abs(v);
      out.median_sign = v > 0.0 ? 1 : -1;
    }
  }
  return out;
}

BoxplotSummary functional_boxplot(const CurveSet& set, double factor) {
  return functional_boxplot(set.curves, factor);
}

std::string boxplot_to_json(const BoxplotSummary& s, const std::vector<int>& lags,
                            std::string_view extra) {
  nlohmann::json j = {
      {"lags", lags},
      {"median_index", s.median_index},
      {"central_indices", s.central_indices},
      {"central_lower", s.central_lower},
      {"central_upper", s.central_upper},
      {"fence_factor", s.factor},
      {"fence_lower", s.fence_lower},
      {"fence_upper", s.fence_upper},
      {"whisker_lower", s.whisker_lower},
      {"whisker_upper", s.whisker_upper},
      {"outlier_indices", s.outlier_indices},
      {"mbd", s.mbd},
      {"median_max_abs", s.median_max_abs},
      {"median_sign", s.median_sign},
      {"depth", "modified_band_depth"},
      {"notes", "median_max_abs and median_sign are descriptive summaries of the median curve"},
      {"meta", nlohmann::json::parse(extra)},
  };
  return j.dump(2);
}

}  // namespace stcov
