#include "stcov_tools/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "stcov/dataset_io.hpp"
#include "stcov/errors.hpp"
#include "stcov/estimator.hpp"
#include "stcov/fbplot.hpp"
#include "stcov/ranktest.hpp"
#include "stcov/simfield.hpp"
#include "stcov_tools/reproduce.hpp"

namespace stcov::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Options in this group only affect how a run executes, never its results,
// so they are left out of the configuration echoed into outputs.
constexpr const char* kExecution = "Execution";

json typed(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (!v.is_discarded() && (v.is_number() || v.is_boolean())) return v;
  return text;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// JSON configuration files for CLI11. Nested objects address subcommands,
// e.g. {"seed": 7, "ranktest": {"replicates": 500}}; the command line wins
// over the file. to_config produces the same shape from parsed values.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool, bool, std::string) const override {
    return resolved(app).dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const json root = json::parse(input, nullptr, false);
    if (root.is_discarded() || !root.is_object()) {
      throw CLI::ConversionError("configuration file is not a JSON object");
    }
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    walk(root, parents, items);
    return items;
  }

  static json resolved(const CLI::App* app) {
    json out = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_group() == kExecution || opt == app->get_help_ptr() ||
          opt == app->get_config_ptr() || opt->get_lnames().empty()) {
        continue;
      }
      const auto& name = opt->get_lnames().front();
      if (opt->get_expected_min() == 0) {
        out[name] = opt->count() > 0 && opt->as<bool>();
        continue;
      }
      std::vector<std::string> values;
      if (opt->count() > 0) {
        values = opt->results();
      } else if (!opt->get_default_str().empty()) {
        values = {opt->get_default_str()};
      }
      if (opt->get_items_expected_max() > 1) {
        json arr = json::array();
        for (const auto& v : values) arr.push_back(typed(v));
        out[name] = std::move(arr);
      } else {
        out[name] = values.empty() ? json() : typed(values.front());
      }
    }
    for (const CLI::App* sub : app->get_subcommands()) out[sub->get_name()] = resolved(sub);
    return out;
  }

 private:
  static void walk(const json& node, std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : node.items()) {
      if (value.is_object()) {
        parents.push_back(key);
        walk(value, parents, items);
        parents.pop_back();
        continue;
      }
      if (value.is_null()) continue;
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar_text(v));
      } else {
        item.inputs.push_back(scalar_text(value));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::size_t threads = 0;
  std::string out_dir = ".";
};

struct DatasetInput {
  std::string path;
  bool long_format = false;
  std::string group;
  bool remove_monthly = false;

  void add_to(CLI::App* sub) {
    sub->add_option("-i,--input", path, "Dataset CSV")->required()->check(CLI::ExistingFile);
    sub->add_flag("--long", long_format, "Input is long CSV (site,x,y,time,value)");
    sub->add_option("--group", group, "Keep only sites with this class label");
    sub->add_flag("--remove-monthly-mean", remove_monthly, "Subtract per-site calendar-month means");
  }

  [[nodiscard]] SpaceTimeDataset load() const {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    SpaceTimeDataset data = long_format ? read_long_csv(in, path) : read_dataset_csv(in, path);
    if (!group.empty()) data = select_class(data, group);
    if (remove_monthly) remove_monthly_mean(data);
    validate(data);
    return data;
  }
};

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir);
  return fs::path(dir);
}

void require_seed(const Globals& g, const std::string& command) {
  if (g.seed_opt->count() == 0) {
    throw InputError("--seed is required for " + command + " (no default entropy)");
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::pair<std::size_t, std::size_t> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  std::size_t a = 0, b = 0;
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    a = std::stoul(text.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(text);
    b = std::stoul(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) throw std::invalid_argument(text);
  } catch (const std::exception&) {
    throw InputError("--sites must look like 4x4, got '" + text + "'");
  }
  if (a == 0 || b == 0 || a * b < 2) throw InputError("--sites needs at least 2 sites, got " + text);
  return {a, b};
}

std::string echo(const CLI::App& app) { return app.config_to_str(true, false); }

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string family = "GneitingSep";
  double beta = 0.5;
  double k = 1.0;
  double lambda = 0.0;
  std::string spec_path;
  std::string sites = "4x4";
  std::size_t p = 2000;
  std::size_t block = 100;
  bool exact = false;
  std::string output = "simulated";
};

CovarianceSpec simulate_spec(const SimulateArgs& a) {
  if (!a.spec_path.empty()) {
    std::ifstream in(a.spec_path);
    if (!in) throw InputError("cannot open --spec " + a.spec_path);
    std::stringstream text;
    text << in.rdbuf();
    return spec_from_json(text.str());
  }
  switch (family_from_name(a.family)) {
    case Family::GneitingSep: return CovarianceSpec::gneiting_sep(a.beta);
    case Family::CressieHuangSep: return CovarianceSpec::cressie_huang_sep();
    case Family::CressieHuangNonsep: return CovarianceSpec::cressie_huang_nonsep();
    case Family::Cesare: return CovarianceSpec::cesare(a.k);
    case Family::GneitingAsym: return CovarianceSpec::gneiting_asym(a.lambda);
    default: throw InputError("--family " + a.family + " needs a full model file via --spec");
  }
}

void cmd_simulate(const CLI::App& root, const Globals& g, const SimulateArgs& a) {
  require_seed(g, "simulate");
  const auto dir = prepare_out_dir(g.out_dir);
  const auto spec = simulate_spec(a);
  const auto [nx, ny] = parse_grid(a.sites);
  auto sites = unit_grid(nx, ny);
  const auto data = a.exact ? simulate_exact(spec, std::move(sites), a.p, g.seed)
                            : simulate_block_sequential(spec, std::move(sites), a.p, a.block, g.seed);
  std::ostringstream csv;
  write_dataset_csv(data, csv);
  write_file(dir / (a.output + ".csv"), csv.str());
  write_file(dir / (a.output + ".json"), dataset_sidecar_json(data, echo(root)) + "\n");
}

// ---------------------------------------------------------------------------

struct TestfnsArgs {
  DatasetInput input;
  std::string kind = "separability";
  int max_lag = 10;
  std::string autocov = "pair";
  std::string output = "testfns";
};

AutocovMode autocov_mode(const std::string& name) {
  if (name == "pair") return AutocovMode::PairAverage;
  if (name == "global") return AutocovMode::GlobalAverage;
  throw InputError("--autocov must be pair or global, got '" + name + "'");
}

void cmd_testfns(const CLI::App& root, const Globals& g, const TestfnsArgs& a) {
  const auto dir = prepare_out_dir(g.out_dir);
  const auto kind = kind_from_name(a.kind);
  const auto data = a.input.load();
  const auto set = all_pairs_test_fns(data, kind, a.max_lag, {autocov_mode(a.autocov), true});
  std::ostringstream csv;
  write_curveset_csv(set, csv);
  write_file(dir / (a.output + ".csv"), csv.str());
  write_file(dir / (a.output + ".json"), curveset_to_json(set, echo(root)) + "\n");
}

// ---------------------------------------------------------------------------

struct FbplotArgs {
  std::string input;
  double factor = 1.5;
  std::string title;
  bool no_zero_line = false;
  std::string output = "fbplot";
};

CurveSet load_curveset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  if (fs::path(path).extension() == ".json") {
    std::stringstream text;
    text << in.rdbuf();
    return curveset_from_json(text.str());
  }
  return read_curveset_csv(in, path);
}

void cmd_fbplot(const CLI::App& root, const Globals& g, const FbplotArgs& a) {
  const auto dir = prepare_out_dir(g.out_dir);
  const auto set = load_curveset(a.input);
  const auto summary = functional_boxplot(set, a.factor);
  SvgOptions opts;
  opts.title = a.title;
  opts.zero_line = !a.no_zero_line;
  opts.y_label = set.kind == TestKind::Separability ? "f(u)" : "g(u)";
  write_file(dir / (a.output + ".svg"), render_svg(summary, set.curves, set.lags, opts));
  write_file(dir / (a.output + ".json"), boxplot_to_json(summary, set.lags, echo(root)) + "\n");
}

// ---------------------------------------------------------------------------

struct RanktestArgs {
  DatasetInput input;
  std::string kind = "separability";
  int max_lag = 10;
  std::size_t m = 1;
  std::size_t r = 1;
  std::size_t b = 100;
  double alpha = 0.05;
  std::size_t block = 100;
  bool frozen = false;
  std::string autocov = "pair";
  bool quiet = false;
  std::string output = "ranktest";
};

void cmd_ranktest(const CLI::App& root, const Globals& g, const RanktestArgs& a) {
  require_seed(g, "ranktest");
  const auto dir = prepare_out_dir(g.out_dir);
  const auto data = a.input.load();
  RankTestConfig cfg;
  cfg.kind = kind_from_name(a.kind);
  cfg.max_lag = a.max_lag;
  cfg.m = a.m;
  cfg.r = a.r;
  cfg.b = a.b;
  cfg.seed = g.seed;
  cfg.alpha = a.alpha;
  cfg.block_len = a.block;
  cfg.frozen_reference = a.frozen;
  cfg.autocov = autocov_mode(a.autocov);
  cfg.threads = resolve_threads(g.threads);
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
  std::size_t last_pct = 0;
  if (!a.quiet) {
    cfg.progress = [&last_pct](std::size_t done, std::size_t total) {
      const std::size_t pct = done * 100 / total;
      if (pct != last_pct || done == total) {
        last_pct = pct;
        std::cerr << "\rreplicates " << done << "/" << total << " (" << pct << "%)" << std::flush;
        if (done == total) std::cerr << '\n';
      }
    };
  }
  const auto report = rank_test(data, cfg);
  write_file(dir / (a.output + ".json"), rank_report_to_json(report, echo(root)) + "\n");
  std::cout << rank_report_summary(report) << '\n';
}

// ---------------------------------------------------------------------------

struct ReproduceArgs {
  std::string table;
  std::string scale = "full";
  std::vector<std::string> columns;
  std::size_t runs = 0;
  std::size_t p = 0;
  std::size_t b = 100;
  std::size_t m = 1;
  std::size_t r = 1;
  std::size_t side = 4;
  std::size_t block = 100;
  int max_lag = 10;
  bool fresh = false;
  bool quiet = false;
  CLI::Option* runs_opt = nullptr;
  CLI::Option* p_opt = nullptr;
};

void cmd_reproduce(const CLI::App& root, const Globals& g, const ReproduceArgs& a) {
  require_seed(g, "reproduce");
  ReproduceOptions o;
  o.table = a.table;
  apply_scale(o, a.scale);
  if (a.runs_opt->count() > 0) o.runs = a.runs;
  if (a.p_opt->count() > 0) o.p = a.p;
  o.columns = a.columns;
  o.b = a.b;
  o.m = a.m;
  o.r = a.r;
  o.side = a.side;
  o.block_len = a.block;
  o.max_lag = a.max_lag;
  o.seed = g.seed;
  o.threads = resolve_threads(g.threads);
  o.out_dir = prepare_out_dir(g.out_dir);
  o.resume = !a.fresh;
  o.config_json = echo(root);
  (void)table_columns(o.table);  // reject unknown tables before any work
  if (!a.quiet) {
    o.on_run = [](const RunRecord& r, std::size_t done, std::size_t total) {
      std::cerr << "run " << done << "/" << total << ": " << r.column << " #" << r.run
                << " p = " << format_double(r.p_value) << '\n';
    };
  }
  const auto result = reproduce_table(o);
  const auto csv = table_csv(result);
  write_file(o.out_dir / (o.table + ".csv"), csv);
  write_file(o.out_dir / (o.table + ".json"), table_json(result, o) + "\n");
  std::cout << csv;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Space-time covariance separability and symmetry diagnostics", "stcov"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Master seed (required by stochastic commands)");
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")
      ->envname("STCOV_THREADS")
      ->capture_default_str()
      ->group(kExecution);
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str()->group(kExecution);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a Gaussian space-time field");
  simulate->add_option("--family", sim.family, "GneitingSep, CressieHuangSep, CressieHuangNonsep, Cesare, GneitingAsym")
      ->capture_default_str();
  simulate->add_option("--beta", sim.beta, "GneitingSep separability parameter in [0, 1]")->capture_default_str();
  simulate->add_option("--k", sim.k, "Cesare parameter")->capture_default_str();
  simulate->add_option("--lambda", sim.lambda, "GneitingAsym asymmetry in [0, 1]")->capture_default_str();
  simulate->add_option("--spec", sim.spec_path, "Model JSON file, overrides --family")->check(CLI::ExistingFile);
  simulate->add_option("--sites", sim.sites, "Unit-square grid, e.g. 4x4")->capture_default_str();
  simulate->add_option("--p", sim.p, "Number of time points")->capture_default_str();
  simulate->add_option("--block", sim.block, "Block length of the sequential sampler")->capture_default_str();
  simulate->add_flag("--exact", sim.exact, "Factor the full covariance instead of sampling by blocks");
  simulate->add_option("-o,--output", sim.output, "Output file stem")->capture_default_str();

  TestfnsArgs tf;
  auto* testfns = app.add_subcommand("testfns", "Estimate test-function curves for all site pairs");
  tf.input.add_to(testfns);
  testfns->add_option("--kind", tf.kind, "separability or symmetry")->capture_default_str();
  testfns->add_option("-U,--max-lag", tf.max_lag, "Largest temporal lag")->capture_default_str();
  testfns->add_option("--autocov", tf.autocov, "pair or global autocovariance for C(0,u)")->capture_default_str();
  testfns->add_option("-o,--output", tf.output, "Output file stem")->capture_default_str();

  FbplotArgs fb;
  auto* fbplot = app.add_subcommand("fbplot", "Functional boxplot of a curve set");
  fbplot->add_option("-i,--input", fb.input, "Curve set (.csv or .json)")->required()->check(CLI::ExistingFile);
  fbplot->add_option("--factor", fb.factor, "Fence inflation factor")->capture_default_str();
  fbplot->add_option("--title", fb.title, "Plot title");
  fbplot->add_flag("--no-zero-line", fb.no_zero_line, "Omit the dashed zero reference");
  fbplot->add_option("-o,--output", fb.output, "Output file stem")->capture_default_str();

  RanktestArgs rt;
  auto* ranktest = app.add_subcommand("ranktest", "Depth-based rank test of separability or symmetry");
  rt.input.add_to(ranktest);
  ranktest->add_option("--kind", rt.kind, "separability or symmetry")->capture_default_str();
  ranktest->add_option("-U,--max-lag", rt.max_lag, "Largest temporal lag")->capture_default_str();
  ranktest->add_option("-m,--null-sets", rt.m, "Simulated datasets in the null set")->capture_default_str();
  ranktest->add_option("-r,--reference-sets", rt.r, "Simulated datasets in the reference set")->capture_default_str();
  ranktest->add_option("-b,--replicates", rt.b, "Bootstrap replicates")->capture_default_str();
  ranktest->add_option("--alpha", rt.alpha, "Nominal level for the verdict")->capture_default_str();
  ranktest->add_option("--block", rt.block, "Block length of the symmetric null sampler")->capture_default_str();
  ranktest->add_flag("--frozen-reference", rt.frozen, "Reuse one reference set in every replicate");
  ranktest->add_option("--autocov", rt.autocov, "pair or global autocovariance for C(0,u)")->capture_default_str();
  ranktest->add_flag("-q,--quiet", rt.quiet, "No progress on standard error")->group(kExecution);
  ranktest->add_option("-o,--output", rt.output, "Output file stem")->capture_default_str();

  ReproduceArgs rp;
  auto* reproduce = app.add_subcommand("reproduce", "Rejection-rate tables from repeated simulation");
  reproduce->add_option("--table", rp.table, "table2, table3 or table4")->required();
  reproduce->add_option("--scale", rp.scale, "full (p=2000, 100 runs) or desk (p=500, 50 runs)")->capture_default_str();
  reproduce->add_option("--columns", rp.columns, "Subset of columns, e.g. beta=0,beta=1")->delimiter(',');
  rp.runs_opt = reproduce->add_option("--runs", rp.runs, "Runs per column (overrides --scale)");
  rp.p_opt = reproduce->add_option("--p", rp.p, "Series length (overrides --scale)");
  reproduce->add_option("-b,--replicates", rp.b, "Bootstrap replicates per test")->capture_default_str();
  reproduce->add_option("-m,--null-sets", rp.m, "Simulated datasets in the null set")->capture_default_str();
  reproduce->add_option("-r,--reference-sets", rp.r, "Simulated datasets in the reference set")->capture_default_str();
  reproduce->add_option("--side", rp.side, "Grid side length")->capture_default_str();
  reproduce->add_option("--block", rp.block, "Block length of the samplers")->capture_default_str();
  reproduce->add_option("-U,--max-lag", rp.max_lag, "Largest temporal lag")->capture_default_str();
  reproduce->add_flag("--fresh", rp.fresh, "Discard earlier runs in --out-dir")->group(kExecution);
  reproduce->add_flag("-q,--quiet", rp.quiet, "No progress on standard error")->group(kExecution);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) cmd_simulate(app, g, sim);
    if (testfns->parsed()) cmd_testfns(app, g, tf);
    if (fbplot->parsed()) cmd_fbplot(app, g, fb);
    if (ranktest->parsed()) cmd_ranktest(app, g, rt);
    if (reproduce->parsed()) cmd_reproduce(app, g, rp);
  } catch (const InputError& e) {
    std::cerr << "stcov: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "stcov: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "stcov: error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace stcov::tools
