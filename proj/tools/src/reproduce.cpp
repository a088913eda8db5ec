#include "stcov_tools/reproduce.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "stcov/dataset_io.hpp"
#include "stcov/errors.hpp"
#include "stcov/ranktest.hpp"
#include "stcov/rng.hpp"
#include "stcov/simfield.hpp"

namespace stcov::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string level_key(const char* name, double v) { return std::string(name) + "=" + format_double(v); }

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

template <class T>
bool parse_number(const std::string& text, T& value) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

constexpr const char* kRunsHeader = "column,run,data_seed,test_seed,W,p_value,tie_flag";

std::string run_line(const RunRecord& r) {
  return r.column + ',' + std::to_string(r.run) + ',' + std::to_string(r.data_seed) + ',' +
         std::to_string(r.test_seed) + ',' + format_double(r.W) + ',' + format_double(r.p_value) +
         ',' + (r.tie_flag ? "1" : "0");
}

// Lines that do not parse (e.g. cut off by an interruption) are skipped.
std::vector<RunRecord> read_runs(const fs::path& path) {
  std::vector<RunRecord> out;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != kRunsHeader) return out;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    RunRecord r;
    if (f.size() != 7 || f[0].empty()) continue;
    r.column = f[0];
    if (!parse_number(f[1], r.run) || !parse_number(f[2], r.data_seed) ||
        !parse_number(f[3], r.test_seed) || !parse_number(f[4], r.W) ||
        !parse_number(f[5], r.p_value) || (f[6] != "0" && f[6] != "1")) {
      continue;
    }
    r.tie_flag = f[6] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

void write_runs(const fs::path& path, const std::vector<RunRecord>& runs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << kRunsHeader << '\n';
  for (const auto& r : runs) out << run_line(r) << '\n';
}

// Settings that change results. A runs file made under other settings is
// never mixed into a table.
json manifest(const ReproduceOptions& o) {
  return {{"table", o.table}, {"side", o.side}, {"p", o.p},     {"block_len", o.block_len},
          {"b", o.b},         {"m", o.m},       {"r", o.r},     {"max_lag", o.max_lag},
          {"seed", o.seed}};
}

std::size_t count_at(const std::vector<RunRecord>& runs, const std::string& key, double alpha) {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [&](const RunRecord& r) {
    return r.column == key && r.p_value <= alpha;
  }));
}

}  // namespace

std::vector<std::string> table_names() { return {"table2", "table3", "table4"}; }

std::vector<ExperimentColumn> table_columns(std::string_view table) {
  std::vector<ExperimentColumn> cols;
  if (table == "table2") {
    for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      cols.push_back({level_key("beta", beta), CovarianceSpec::gneiting_sep(beta), TestKind::Separability});
    }
  } else if (table == "table3") {
    cols.push_back({"sep", CovarianceSpec::cressie_huang_sep(), TestKind::Separability});
    cols.push_back({"nonsep", CovarianceSpec::cressie_huang_nonsep(), TestKind::Separability});
  } else if (table == "table4") {
    for (double lambda : {0.0, 0.025, 0.05, 0.075, 0.1}) {
      cols.push_back({level_key("lambda", lambda), CovarianceSpec::gneiting_asym(lambda), TestKind::Symmetry});
    }
  } else {
    throw InputError("unknown table '" + std::string(table) + "' (expected table2, table3 or table4)");
  }
  return cols;
}

void apply_scale(ReproduceOptions& options, std::string_view scale) {
  if (scale == "full") {
    options.p = 2000;
    options.runs = 100;
  } else if (scale == "desk") {
    options.p = 500;
    options.runs = 50;
  } else {
    throw InputError("unknown scale '" + std::string(scale) + "' (expected full or desk)");
  }
}

double ColumnSummary::rate(double alpha) const {
  if (runs == 0) return 0.0;
  const auto hits = alpha == 0.01 ? reject_01 : reject_05;
  return static_cast<double>(hits) / static_cast<double>(runs);
}

double ColumnSummary::binomial_se(double alpha) const {
  if (runs == 0) return 0.0;
  const double q = rate(alpha);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(runs));
}

TableResult reproduce_table(const ReproduceOptions& o) {
  const auto all = table_columns(o.table);
  if (o.runs == 0) throw InputError("runs must be at least 1");
  if (o.side < 2) throw InputError("grid side must be at least 2");

  std::vector<std::size_t> selected;
  if (o.columns.empty()) {
    for (std::size_t c = 0; c < all.size(); ++c) selected.push_back(c);
  } else {
    for (const auto& key : o.columns) {
      const auto it = std::find_if(all.begin(), all.end(), [&](const auto& c) { return c.key == key; });
      if (it == all.end()) throw InputError("table " + o.table + " has no column '" + key + "'");
      selected.push_back(static_cast<std::size_t>(it - all.begin()));
    }
  }

  // Earlier results under identical settings are kept.
  std::map<std::pair<std::string, std::size_t>, RunRecord> done;
  fs::path runs_path;
  std::ofstream runs_out;
  if (!o.out_dir.empty()) {
    fs::create_directories(o.out_dir);
    runs_path = o.out_dir / (o.table + "_runs.csv");
    const auto manifest_path = o.out_dir / (o.table + "_manifest.json");
    const json want = manifest(o);
    if (o.resume && fs::exists(manifest_path) && fs::exists(runs_path)) {
      std::ifstream in(manifest_path);
      const json have = json::parse(in, nullptr, false);
      if (have != want) {
        throw InputError(runs_path.string() +
                         " was produced with different settings; use another --out-dir or --fresh");
      }
      for (auto& r : read_runs(runs_path)) done[{r.column, r.run}] = std::move(r);
    }
    std::ofstream(manifest_path, std::ios::trunc) << want.dump(2) << '\n';
    std::vector<RunRecord> kept;
    for (const auto& [key, r] : done) kept.push_back(r);
    write_runs(runs_path, kept);
    runs_out.open(runs_path, std::ios::app);
  }

  struct Job {
    std::size_t column;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (auto c : selected) {
    for (std::size_t k = 0; k < o.runs; ++k) {
      if (!done.count({all[c].key, k})) jobs.push_back({c, k});
    }
  }

  // Observation samplers are factorized once per column and shared read-only.
  const auto sites = unit_grid(o.side, o.side);
  std::map<std::size_t, BlockSequentialSampler> samplers;
  for (const auto& job : jobs) {
    if (!samplers.count(job.column)) {
      samplers.emplace(job.column, BlockSequentialSampler(all[job.column].spec, sites, o.p, o.block_len));
    }
  }

  std::mutex mu;
  std::size_t finished = done.size();
  const std::size_t total = done.size() + jobs.size();
  std::vector<RunRecord> fresh(jobs.size());
  parallel_for(jobs.size(), o.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& col = all[job.column];
    RunRecord r;
    r.column = col.key;
    r.run = job.run;
    r.data_seed = derive_stream(o.seed, {job.column, job.run, 0});
    r.test_seed = derive_stream(o.seed, {job.column, job.run, 1});

    const auto data = samplers.at(job.column).sample(r.data_seed);
    RankTestConfig cfg;
    cfg.kind = col.kind;
    cfg.max_lag = o.max_lag;
    cfg.b = o.b;
    cfg.m = o.m;
    cfg.r = o.r;
    cfg.seed = r.test_seed;
    cfg.block_len = o.block_len;
    cfg.threads = 1;
    const auto report = rank_test(data, cfg);
    r.W = report.W;
    r.p_value = report.p_value;
    r.tie_flag = report.tie_flag;

    std::lock_guard lock(mu);
    if (runs_out.is_open()) runs_out << run_line(r) << std::endl;
    ++finished;
    if (o.on_run) o.on_run(r, finished, total);
    fresh[i] = std::move(r);
  });
  for (auto& r : fresh) done[{r.column, r.run}] = std::move(r);

  TableResult result;
  result.table = o.table;
  for (auto c : selected) {
    for (std::size_t k = 0; k < o.runs; ++k) result.runs.push_back(done.at({all[c].key, k}));
  }
  for (auto c : selected) {
    ColumnSummary s;
    s.key = all[c].key;
    s.runs = o.runs;
    s.reject_05 = count_at(result.runs, s.key, 0.05);
    s.reject_01 = count_at(result.runs, s.key, 0.01);
    result.columns.push_back(std::move(s));
  }
  if (runs_out.is_open()) {
    runs_out.close();
    // Keep any extra runs from a longer earlier invocation, sorted for stable bytes.
    std::vector<RunRecord> sorted;
    for (const auto& [key, r] : done) sorted.push_back(r);
    std::stable_sort(sorted.begin(), sorted.end(), [&](const RunRecord& a, const RunRecord& b) {
      auto pos = [&](const std::string& key) {
        return std::find_if(all.begin(), all.end(), [&](const auto& c) { return c.key == key; }) - all.begin();
      };
      return std::pair(pos(a.column), a.run) < std::pair(pos(b.column), b.run);
    });
    write_runs(runs_path, sorted);
  }
  return result;
}

std::string table_csv(const TableResult& result) {
  std::ostringstream out;
  out << "statistic,alpha";
  for (const auto& c : result.columns) out << ',' << c.key;
  out << '\n';
  for (const char* stat : {"rejection_rate", "binomial_se"}) {
    for (double alpha : {0.05, 0.01}) {
      out << stat << ',' << format_double(alpha);
      for (const auto& c : result.columns) {
        out << ',' << format_double(std::string_view(stat) == "rejection_rate" ? c.rate(alpha) : c.binomial_se(alpha));
      }
      out << '\n';
    }
  }
  out << "runs,";
  for (const auto& c : result.columns) out << ',' << c.runs;
  out << '\n';
  return out.str();
}

std::string table_json(const TableResult& result, const ReproduceOptions& o) {
  json cols = json::array();
  for (const auto& c : result.columns) {
    cols.push_back({{"column", c.key},
                    {"runs", c.runs},
                    {"rejections", {{"0.05", c.reject_05}, {"0.01", c.reject_01}}},
                    {"rate", {{"0.05", c.rate(0.05)}, {"0.01", c.rate(0.01)}}},
                    {"binomial_se", {{"0.05", c.binomial_se(0.05)}, {"0.01", c.binomial_se(0.01)}}}});
  }
  json j = manifest(o);
  j["runs"] = o.runs;
  j["columns"] = std::move(cols);
  j["seeds"] = "data: derive_stream(seed, [column, run, 0]); test: derive_stream(seed, [column, run, 1])";
  j["config"] = json::parse(o.config_json);
  return j.dump(2);
}

}  // namespace stcov::tools
