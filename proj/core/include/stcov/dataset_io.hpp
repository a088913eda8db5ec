#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "stcov/simfield.hpp"

namespace stcov {

// Wide CSV: one row per site. Header `x,y,t1,...,tp`, optionally with a
// `class` column right after `y`. Time column headers are kept as labels.
void write_dataset_csv(const SpaceTimeDataset& data, std::ostream& out);
[[nodiscard]] SpaceTimeDataset read_dataset_csv(std::istream& in, std::string_view source = "<input>");

// Long CSV: header `site,x,y,time,value` (an optional `class` column may follow
// `y`); one row per observation. Sites and times keep first-appearance order.
[[nodiscard]] SpaceTimeDataset read_long_csv(std::istream& in, std::string_view source = "<input>");

/// Sidecar JSON for a dataset: simulation provenance plus `extra` (a JSON
/// object text, e.g. the resolved run configuration).
[[nodiscard]] std::string dataset_sidecar_json(const SpaceTimeDataset& data,
                                               std::string_view extra = "{}");

/// Subtracts, per site, the mean over each calendar month. Time labels must
/// start with an ISO date (YYYY-MM...).
void remove_monthly_mean(SpaceTimeDataset& data);

/// Keeps only the sites whose class label equals `label`.
[[nodiscard]] SpaceTimeDataset select_class(const SpaceTimeDataset& data, std::string_view label);

/// Shortest round-trip decimal text for a double.
[[nodiscard]] std::string format_double(double v);

}  // namespace stcov
