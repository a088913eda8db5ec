#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stcov/estimator.hpp"

namespace stcov {

/// Functional boxplot of a curve sample, ranked by modified band depth.
struct BoxplotSummary {
  std::size_t median_index = 0;
  std::vector<double> mbd;
  std::vector<std::size_t> central_indices;  // the ceil(N/2) deepest curves
  std::vector<double> central_lower, central_upper;
  std::vector<double> fence_lower, fence_upper;
  std::vector<double> whisker_lower, whisker_upper;
  std::vector<std::size_t> outlier_indices;  // ascending
  double factor = 1.5;
  // Departure of the median from zero: largest |value| and its sign (-1, 0, 1).
  double median_max_abs = 0.0;
  int median_sign = 0;
};

/// Needs at least 3 curves and factor > 0.
[[nodiscard]] BoxplotSummary functional_boxplot(const RowMatrix& curves, double factor = 1.5);
[[nodiscard]] BoxplotSummary functional_boxplot(const CurveSet& set, double factor = 1.5);

/// `extra` is a JSON object merged in under "meta".
[[nodiscard]] std::string boxplot_to_json(const BoxplotSummary& summary,
                                          const std::vector<int>& lags,
                                          std::string_view extra = "{}");

struct SvgOptions {
  int width = 800;
  int height = 500;
  std::string title;
  std::string x_label = "u";
  std::string y_label;
  bool zero_line = true;
  std::string central_color = "magenta";
  std::string median_color = "black";
  std::string outlier_color = "red";
  std::string whisker_color = "blue";
  std::string zero_color = "green";
};

/// Standalone SVG 1.1 document. Output depends only on the arguments.
[[nodiscard]] std::string render_svg(const BoxplotSummary& summary, const RowMatrix& curves,
                                     const std::vector<int>& lags, const SvgOptions& options = {});

}  // namespace stcov
