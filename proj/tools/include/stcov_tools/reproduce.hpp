#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "stcov/covmodels.hpp"
#include "stcov/estimator.hpp"

namespace stcov::tools {

struct ExperimentColumn {
  std::string key;  // e.g. "beta=0.25"
  CovarianceSpec spec;
  TestKind kind;
};

/// Simulation-study layouts: "table2" (GneitingSep over beta), "table3"
/// (Cressie-Huang separable vs non-separable), "table4" (GneitingAsym over lambda).
[[nodiscard]] std::vector<ExperimentColumn> table_columns(std::string_view table);
[[nodiscard]] std::vector<std::string> table_names();

struct RunRecord {
  std::string column;
  std::size_t run = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t test_seed = 0;
  double W = 0.0;
  double p_value = 1.0;
  bool tie_flag = false;
};

struct ColumnSummary {
  std::string key;
  std::size_t runs = 0;
  std::size_t reject_05 = 0;  // p <= 0.05
  std::size_t reject_01 = 0;  // p <= 0.01

  [[nodiscard]] double rate(double alpha) const;
  /// sqrt(rate (1 - rate) / runs)
  [[nodiscard]] double binomial_se(double alpha) const;
};

struct ReproduceOptions {
  std::string table;
  std::vector<std::string> columns;  // subset of column keys; empty = all
  std::size_t runs = 100;
  std::size_t side = 4;  // side x side unit-square grid
  std::size_t p = 2000;
  std::size_t block_len = 100;
  std::size_t b = 100;
  std::size_t m = 1;  // simulated datasets in the null set
  std::size_t r = 1;  // simulated datasets in the reference set
  int max_lag = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  // When set, finished runs are appended to <table>_runs.csv as they complete
  // and a matching earlier file is resumed instead of recomputed.
  std::filesystem::path out_dir;
  bool resume = true;
  std::string config_json = "{}";
  std::function<void(const RunRecord&, std::size_t done, std::size_t total)> on_run;
};

/// Applies "full" (p = 2000, 100 runs) or "desk" (p = 500, 50 runs).
void apply_scale(ReproduceOptions& options, std::string_view scale);

struct TableResult {
  std::string table;
  std::vector<ColumnSummary> columns;
  std::vector<RunRecord> runs;  // sorted by (column order, run)
};

/// Data for run k of column c is simulated from derive_stream(seed, {c, k, 0})
/// and tested with seed derive_stream(seed, {c, k, 1}), where c is the
/// column's position in the full table, so subsets and resumed runs agree.
[[nodiscard]] TableResult reproduce_table(const ReproduceOptions& options);

/// Rows: rejection_rate and binomial_se at alpha = 0.05 and 0.01, then runs.
[[nodiscard]] std::string table_csv(const TableResult& result);
[[nodiscard]] std::string table_json(const TableResult& result, const ReproduceOptions& options);

}  // namespace stcov::tools
