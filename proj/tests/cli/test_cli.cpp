#include <catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "stcov/dataset_io.hpp"
#include "stcov/simfield.hpp"
#include "stcov_tools/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stcov;
using stcov::tools::run_cli;

namespace {

// Scratch directories live under one per-process root, removed at exit.
struct ScratchRoot {
  fs::path path = fs::temp_directory_path() / ("stcov_cli_" + std::to_string(::getpid()));
  ~ScratchRoot() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path scratch(const std::string& name) {
  static ScratchRoot root;
  const auto dir = root.path / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::vector<std::string> header_fields(const std::string& csv) {
  std::vector<std::string> out;
  std::istringstream in(csv.substr(0, csv.find('\n')));
  std::string f;
  while (std::getline(in, f, ',')) out.push_back(f);
  return out;
}

// Captures std::cout and std::cerr for the lifetime of the object.
struct Captured {
  std::ostringstream out, err;
  std::streambuf* old_out;
  std::streambuf* old_err;
  Captured() : old_out(std::cout.rdbuf(out.rdbuf())), old_err(std::cerr.rdbuf(err.rdbuf())) {}
  ~Captured() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
};

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  Captured c;
  const int code = run_cli(args);
  if (out != nullptr) *out = c.out.str();
  if (err != nullptr) *err = c.err.str();
  return code;
}

SpaceTimeDataset read_csv_file(const fs::path& path) {
  std::ifstream in(path);
  return read_dataset_csv(in, path.string());
}

}  // namespace

TEST_CASE("simulate writes the default 16 x 2000 layout", "[cli]") {
  const auto dir = scratch("sim_default");
  REQUIRE(run({"--seed", "11", "--out-dir", dir.string(), "simulate"}) == 0);
  const auto csv = slurp(dir / "simulated.csv");
  CHECK(line_count(csv) == 17);
  CHECK(header_fields(csv).size() == 2 + 2000);
  const auto meta = json::parse(slurp(dir / "simulated.json"));
  CHECK(meta["n_sites"] == 16);
  CHECK(meta["n_times"] == 2000);
  CHECK(meta["sampler"] == "block_sequential");
  CHECK(meta["spec"]["family"] == "GneitingSep");
  CHECK(meta["config"]["simulate"]["beta"] == 0.5);
  CHECK(meta["config"]["seed"] == 11);
}

TEST_CASE("simulate routes --exact and round-trips", "[cli]") {
  const auto dir = scratch("sim_exact");
  REQUIRE(run({"--seed", "4", "--out-dir", dir.string(), "simulate", "--sites", "2x2", "--p", "20", "--exact",
               "--beta", "1"}) == 0);
  const auto from_file = read_csv_file(dir / "simulated.csv");
  const auto direct = simulate_exact(CovarianceSpec::gneiting_sep(1.0), unit_grid(2, 2), 20, 4);
  CHECK(from_file.values == direct.values);
  CHECK(from_file.sites == direct.sites);
  CHECK(json::parse(slurp(dir / "simulated.json"))["sampler"] == "exact");

  REQUIRE(run({"--seed", "4", "--out-dir", dir.string(), "simulate", "--sites", "2x2", "--p", "20", "--block",
               "10", "-o", "blocks"}) == 0);
  const auto blocks = simulate_block_sequential(CovarianceSpec::gneiting_sep(0.5), unit_grid(2, 2), 20, 10, 4);
  CHECK(read_csv_file(dir / "blocks.csv").values == blocks.values);
}

TEST_CASE("simulate is byte-identical for a fixed seed", "[cli]") {
  const auto a = scratch("sim_det_a");
  const auto b = scratch("sim_det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run({"--seed", "9", "--out-dir", d.string(), "simulate", "--sites", "3x3", "--p", "200"}) == 0);
  }
  CHECK(slurp(a / "simulated.csv") == slurp(b / "simulated.csv"));
  CHECK(slurp(a / "simulated.json") == slurp(b / "simulated.json"));
}

TEST_CASE("configuration errors exit with 2", "[cli]") {
  const auto dir = scratch("errors");
  std::string err;
  CHECK(run({"--out-dir", dir.string(), "simulate"}, nullptr, &err) == 2);
  CHECK(err.find("--seed") != std::string::npos);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "simulate", "--family", "Nope"}, nullptr, &err) == 2);
  CHECK(err.find("Nope") != std::string::npos);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "simulate", "--beta", "2"}, nullptr, &err) == 2);
  CHECK(err.find("beta") != std::string::npos);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "simulate", "--sites", "4by4"}) == 2);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "simulate", "--p", "250"}) == 2);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({}) == 2);
  CHECK(run({"ranktest", "--input", (dir / "missing.csv").string(), "--seed", "1"}) == 2);
  CHECK(run({"--help"}) == 0);
}

TEST_CASE("config file supplies options and the command line wins", "[cli]") {
  const auto dir = scratch("config");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"seed": 3, "simulate": {"sites": "2x2", "p": 20, "block": 10, "beta": 1}})";
  REQUIRE(run({"--config", cfg.string(), "--out-dir", dir.string(), "simulate", "--p", "40"}) == 0);
  const auto meta = json::parse(slurp(dir / "simulated.json"));
  CHECK(meta["n_times"] == 40);
  CHECK(meta["n_sites"] == 4);
  CHECK(meta["seed"] == 3);
  CHECK(meta["config"]["simulate"]["p"] == 40);
  CHECK(meta["config"]["simulate"]["beta"] == 1);

  // The echoed configuration is itself a valid config file.
  const auto echoed = dir / "echo.json";
  std::ofstream(echoed) << meta["config"].dump();
  const auto again = scratch("config_again");
  REQUIRE(run({"--config", echoed.string(), "--out-dir", again.string(), "simulate"}) == 0);
  CHECK(slurp(again / "simulated.csv") == slurp(dir / "simulated.csv"));

  std::ofstream(cfg, std::ios::trunc) << R"({"seed": 3, "simulate": {"colour": "red"}})";
  CHECK(run({"--config", cfg.string(), "--out-dir", dir.string(), "simulate"}) == 2);
  std::ofstream(cfg, std::ios::trunc) << "not json";
  CHECK(run({"--config", cfg.string(), "--out-dir", dir.string(), "simulate"}) == 2);
}

TEST_CASE("testfns shapes and the drop rule", "[cli]") {
  const auto dir = scratch("testfns");
  REQUIRE(run({"--seed", "5", "--out-dir", dir.string(), "simulate", "--p", "200", "-o", "data"}) == 0);
  const auto input = (dir / "data.csv").string();

  REQUIRE(run({"--out-dir", dir.string(), "testfns", "-i", input, "-o", "sep"}) == 0);
  const auto sep = slurp(dir / "sep.csv");
  CHECK(line_count(sep) == 1 + 120);
  CHECK(header_fields(sep).size() == 4 + 11);
  CHECK(json::parse(slurp(dir / "sep.json"))["kind"] == "separability");

  REQUIRE(run({"--out-dir", dir.string(), "testfns", "-i", input, "--kind", "symmetry", "-U", "10", "-o", "sym"}) == 0);
  const auto sym = header_fields(slurp(dir / "sym.csv"));
  CHECK(sym.size() == 4 + 10);
  CHECK(sym[4] == "u1");

  // Flatten site 3 and expect its 15 pairs dropped with warnings.
  auto data = read_csv_file(dir / "data.csv");
  data.values.row(3).setConstant(2.5);
  {
    std::ofstream out(dir / "flat_data.csv");
    write_dataset_csv(data, out);
  }
  std::string err;
  REQUIRE(run({"--out-dir", dir.string(), "testfns", "-i", (dir / "flat_data.csv").string(), "-o", "flat"}, nullptr,
              &err) == 0);
  CHECK(line_count(slurp(dir / "flat.csv")) == 1 + 105);
  CHECK(err.find("warning") != std::string::npos);
  CHECK(err.find("constant") != std::string::npos);
}

TEST_CASE("malformed dataset reports row and column", "[cli]") {
  const auto dir = scratch("malformed");
  std::ofstream(dir / "bad.csv") << "x,y,t1,t2,t3\n0,0,1,2,3\n1,0,4,oops,6\n";
  std::string err;
  CHECK(run({"--out-dir", dir.string(), "testfns", "-i", (dir / "bad.csv").string()}, nullptr, &err) == 2);
  CHECK(err.find("row 3") != std::string::npos);
  CHECK(err.find("column 4") != std::string::npos);
}

TEST_CASE("fbplot writes svg and summary", "[cli]") {
  const auto dir = scratch("fbplot");
  REQUIRE(run({"--seed", "6", "--out-dir", dir.string(), "simulate", "--p", "200", "-o", "data"}) == 0);
  REQUIRE(run({"--out-dir", dir.string(), "testfns", "-i", (dir / "data.csv").string(), "-o", "fns"}) == 0);
  for (const char* input : {"fns.csv", "fns.json"}) {
    REQUIRE(run({"--out-dir", dir.string(), "fbplot", "-i", (dir / input).string(), "--title", "beta 0.5"}) == 0);
    const auto svg = slurp(dir / "fbplot.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("width=\"800\" height=\"500\"") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
    CHECK(svg.find("fill=\"magenta\"") != std::string::npos);
    const auto summary = json::parse(slurp(dir / "fbplot.json"));
    CHECK(summary.contains("median_index"));
    CHECK(summary["meta"]["fbplot"]["factor"] == 1.5);
  }
  const auto first = slurp(dir / "fbplot.svg");
  REQUIRE(run({"--out-dir", dir.string(), "fbplot", "-i", (dir / "fns.csv").string(), "--title", "beta 0.5"}) == 0);
  CHECK(slurp(dir / "fbplot.svg") == first);
  REQUIRE(run({"--out-dir", dir.string(), "fbplot", "-i", (dir / "fns.csv").string(), "--no-zero-line", "-o",
               "plain"}) == 0);
  CHECK(slurp(dir / "plain.svg").find("stroke-dasharray") == std::string::npos);

  std::ofstream(dir / "two.csv") << "i,j,hx,hy,u0,u1\n0,1,1,0,0,0.5\n0,2,2,0,0,0.25\n";
  CHECK(run({"--out-dir", dir.string(), "fbplot", "-i", (dir / "two.csv").string()}) == 2);
}

TEST_CASE("ranktest report, determinism and exit codes", "[cli]") {
  const auto dir = scratch("ranktest");
  REQUIRE(run({"--seed", "7", "--out-dir", dir.string(), "simulate", "--sites", "3x3", "--p", "200", "--beta", "0",
               "-o", "data"}) == 0);
  const auto input = (dir / "data.csv").string();
  std::string out, err;
  REQUIRE(run({"--seed", "21", "--threads", "1", "--out-dir", dir.string(), "ranktest", "-i", input, "-b", "12",
               "-o", "t1"},
              &out, &err) == 0);
  CHECK(out.find("separability test: W = ") == 0);
  CHECK(err.find("replicates 12/12") != std::string::npos);
  const auto report = json::parse(slurp(dir / "t1.json"));
  CHECK(report["null_W"].size() == 12);
  CHECK(report["p_value"].get<double>() > 0.0);
  CHECK(report["p_value"].get<double>() <= 1.0);
  CHECK(report["meta"]["seed"] == 21);
  CHECK(report["meta"]["ranktest"]["replicates"] == 12);

  const auto other = scratch("ranktest_threads");
  REQUIRE(run({"--seed", "21", "--threads", "3", "--out-dir", other.string(), "ranktest", "-i", input, "-b", "12",
               "-q", "-o", "t1"},
              nullptr, &err) == 0);
  CHECK(err.empty());
  CHECK(slurp(dir / "t1.json") == slurp(other / "t1.json"));

  CHECK(run({"--out-dir", dir.string(), "ranktest", "-i", input, "-b", "12"}) == 2);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "ranktest", "-i", input, "-b", "0"}) == 2);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "ranktest", "-i", input, "--alpha", "1.5"}) == 2);

  // Every series constant: no usable pair, a numerical failure.
  auto flat = read_csv_file(dir / "data.csv");
  for (Eigen::Index i = 0; i < flat.values.rows(); ++i) flat.values.row(i).setConstant(static_cast<double>(i));
  {
    std::ofstream f(dir / "flat.csv");
    write_dataset_csv(flat, f);
  }
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "ranktest", "-i", (dir / "flat.csv").string(), "-q"}, nullptr,
            &err) == 3);
  CHECK(err.find("numerical") != std::string::npos);
}

TEST_CASE("reproduce writes tables and resumes", "[cli]") {
  const auto dir = scratch("reproduce");
  const std::vector<std::string> base = {"--seed", "13", "--out-dir", dir.string(), "reproduce", "--table", "table2",
                                         "--columns", "beta=0,beta=1", "--runs", "2", "--p", "200", "--side", "2",
                                         "-b", "5", "-q"};
  std::string out;
  REQUIRE(run(base, &out) == 0);
  const auto table = slurp(dir / "table2.csv");
  CHECK(out == table);
  CHECK(header_fields(table) == std::vector<std::string>{"statistic", "alpha", "beta=0", "beta=1"});
  CHECK(line_count(table) == 6);
  CHECK(line_count(slurp(dir / "table2_runs.csv")) == 1 + 4);
  const auto runs = slurp(dir / "table2_runs.csv");

  // Rerun resumes: nothing recomputed, same bytes.
  REQUIRE(run(base) == 0);
  CHECK(slurp(dir / "table2_runs.csv") == runs);
  CHECK(slurp(dir / "table2.csv") == table);

  // More runs extend the earlier file; the first runs are kept as they were.
  auto more = base;
  more[10] = "3";
  REQUIRE(run(more) == 0);
  const auto extended = slurp(dir / "table2_runs.csv");
  CHECK(line_count(extended) == 1 + 6);

  // Same settings from scratch on more threads give the same bytes.
  const auto fresh = scratch("reproduce_fresh");
  auto threaded = more;
  threaded[3] = fresh.string();
  threaded.insert(threaded.begin(), {"--threads", "2"});
  REQUIRE(run(threaded) == 0);
  CHECK(slurp(fresh / "table2_runs.csv") == extended);
  CHECK(slurp(fresh / "table2.csv") == slurp(dir / "table2.csv"));

  // Changed settings are refused unless --fresh.
  auto changed = base;
  changed[16] = "7";
  CHECK(run(changed) == 2);
  changed.push_back("--fresh");
  CHECK(run(changed) == 0);

  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "reproduce", "--table", "table9"}) == 2);
  CHECK(run({"--seed", "1", "--out-dir", dir.string(), "reproduce", "--table", "table2", "--columns", "beta=3"}) == 2);
  CHECK(run({"--out-dir", dir.string(), "reproduce", "--table", "table2"}) == 2);
}
