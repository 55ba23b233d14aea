// clubkit command-line front end.
//
//   clubkit test-pair   --panel gdp.csv --i AUT --j BEL [--method bootstrap]
//   clubkit find-clubs  --panel gdp.csv [--compare other.json] [--sizes-csv sizes.csv]
//   clubkit simulate    --single --N 10 --m 3 --T 50 --rho 0.2 --reps 200 --out table1.csv
//   clubkit limit-table --dims 1-9 --variant level
//
// Exit status: 0 ok, 1 usage, 2 statistical error, 3 I/O.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clubkit/analytics.hpp"
#include "clubkit/clubs.hpp"
#include "clubkit/errors.hpp"
#include "clubkit/io.hpp"
#include "clubkit/montecarlo.hpp"

using namespace clubkit;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitStat = 2;
constexpr int kExitIo = 3;

int exit_code(Errc c) {
  switch (c) {
    case Errc::IoError:
    case Errc::ParseError:
    case Errc::RaggedRows:
    case Errc::NonPositiveForLog:
      return kExitIo;
    case Errc::InvalidConfig:
      return kExitUsage;
    default:
      return kExitStat;
  }
}

struct TestOptions {
  std::string method = "asymptotic";
  std::string kind = "relative";
  int R = 200;
  int L = kDefaultBandwidth;
  int p_max = 4;
  std::uint64_t seed = 0;
  bool log_transform = false;
  std::string cache_dir;
};

void add_test_options(CLI::App* cmd, TestOptions& o) {
  cmd->add_option("--method", o.method, "asymptotic (HF) or bootstrap (CW)")
      ->check(CLI::IsMember({"asymptotic", "bootstrap", "HF", "CW"}));
  cmd->add_option("--kind", o.kind, "relative (level) or perfect (zero mean)")
      ->check(CLI::IsMember({"relative", "perfect"}));
  cmd->add_option("--R", o.R, "bootstrap replications")->check(CLI::Range(99, 1000000));
  cmd->add_option("--L", o.L, "Bartlett bandwidth")->check(CLI::NonNegativeNumber);
  cmd->add_option("--pmax", o.p_max, "largest AR order for the ARMA(p,1) fit")->check(CLI::Range(0, 32));
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_flag("--log-transform", o.log_transform, "take natural logs of the panel on load");
  cmd->add_option("--cache-dir", o.cache_dir, "limit-table cache (default $CLUBKIT_CACHE_DIR or .clubkit-cache)");
}

SearchConfig search_config(const TestOptions& o, double p_min) {
  SearchConfig cfg;
  cfg.p_min = p_min;
  cfg.kind = o.kind == "perfect" ? Convergence::Perfect : Convergence::Relative;
  cfg.method = method_from_string(o.method);
  cfg.bandwidth = o.L;
  cfg.bootstrap.R = o.R;
  cfg.bootstrap.p_max = o.p_max;
  cfg.bootstrap.seed = o.seed;
  return cfg;
}

std::filesystem::path resolve_cache(const std::string& flag) {
  return flag.empty() ? cache_dir_from_env(".clubkit-cache") : std::filesystem::path(flag);
}

json config_json(const TestOptions& o) {
  return {{"method", o.method}, {"kind", o.kind}, {"R", o.R}, {"L", o.L},
          {"pmax", o.p_max},   {"seed", o.seed}, {"log_transform", o.log_transform}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out || !(out << text)) throw Error(Errc::IoError, "cannot write " + path);
}

int cmd_test_pair(const std::string& panel_path, const std::string& a, const std::string& b, const TestOptions& o) {
  const Panel panel = load_panel(panel_path, o.log_transform);
  const Index i = panel.index_of(a), j = panel.index_of(b);
  if (i == j) throw Error(Errc::SamePair, "cannot test " + a + " against itself");
  DiskLimitTables tables(resolve_cache(o.cache_dir));
  CandidateEvaluator eval(panel, search_config(o, 0.01), &tables);
  const StatResult r = eval.evaluate({i}, {j});
  json out = r;
  out["i"] = a;
  out["j"] = b;
  std::cout << out.dump() << '\n';
  return 0;
}

int cmd_find_clubs(const std::string& panel_path, double p_min, const TestOptions& o, const std::string& compare,
                   const std::string& out_path, const std::string& sizes_csv, bool skip_failed) {
  const Panel panel = load_panel(panel_path, o.log_transform);
  SearchConfig cfg = search_config(o, p_min);
  cfg.skip_failed_candidates = skip_failed;
  DiskLimitTables tables(resolve_cache(o.cache_dir));
  const ClubReport report = find_clubs(panel, cfg, &tables);

  json out = report;
  out["partition"] = partition_json(report.partition, panel);
  json listed = json::array();
  for (const auto& club : report.partition.by_size()) {
    json ids = json::array();
    for (Index r : club) ids.push_back(panel.ids()[r]);
    listed.push_back(ids);
  }
  out["clubs_by_size"] = listed;
  const IncomeStats income = income_stats(report.partition, panel);
  out["income"] = {{"sigma_ybar", income.sd}, {"ybar_min", income.min}, {"ybar_max", income.max}};
  out["config"] = config_json(o);
  out["config"]["p_min"] = p_min;
  out["regions"] = panel.ids();
  if (!compare.empty()) out["zeta"] = cluster_correlation(report.partition, read_partition(compare, panel));
  write_text(out_path, out.dump(2) + "\n");

  if (!sizes_csv.empty()) {
    std::ostringstream os;
    write_size_table(os, {{std::filesystem::path(panel_path).stem().string(), size_distribution(report.partition), income}});
    write_text(sizes_csv, os.str());
  }
  return 0;
}

struct SimOptions {
  bool single = false, multi = false;
  std::vector<int> N{10}, T{50}, m{3};
  std::vector<double> rho{0.2};
  int k = 2;
  std::vector<int> sizes;
  int reps = 200;
  std::vector<double> alphas{0.01, 0.05, 0.10};
  std::vector<std::string> methods{"CW", "HF"};
  std::string out;
};

int cmd_simulate(const SimOptions& s, const TestOptions& o, const std::string& command_line) {
  RunManifest manifest;
  manifest.started = utc_timestamp();
  ExperimentSpec spec;
  spec.methods.clear();
  for (const auto& m : s.methods) spec.methods.push_back(method_from_string(m));
  spec.alphas = s.alphas;
  spec.reps = s.reps;
  spec.kind = o.kind == "perfect" ? Convergence::Perfect : Convergence::Relative;
  spec.bandwidth = o.L;
  spec.bootstrap.R = o.R;
  spec.bootstrap.p_max = o.p_max;
  spec.seed = o.seed;

  int infeasible = 0;
  for (int n : s.N)
    for (int t : s.T)
      for (double rho : s.rho) {
        std::vector<DgpConfig> cells;
        if (s.single) {
          for (int m : s.m) cells.push_back(DgpConfig{n, t, rho, SingleClub{m}, o.seed});
        } else {
          cells.push_back(DgpConfig{n, t, rho, MultiClub{s.k, s.sizes}, o.seed});
        }
        for (auto& c : cells) {
          try {
            validate(c);
            spec.cells.push_back(c);
          } catch (const Error& e) {
            std::cerr << "skipping cell N=" << n << " T=" << t << " rho=" << rho << " " << describe_clubs(c) << ": "
                      << e.what() << '\n';
            ++infeasible;
          }
        }
      }

  std::vector<ResultRow> rows;
  if (!spec.cells.empty()) {
    DiskLimitTables tables(resolve_cache(o.cache_dir));
    rows = run_experiment(spec, &tables);
  }
  std::ostringstream csv;
  write_results_csv(csv, rows);
  write_text(s.out, csv.str());

  manifest.command = command_line;
  manifest.seed = o.seed;
  manifest.version = CLUBKIT_VERSION;
  manifest.config = config_json(o);
  manifest.config["design"] = s.single ? "single" : "multi";
  manifest.config["N"] = s.N;
  manifest.config["T"] = s.T;
  manifest.config["rho"] = s.rho;
  manifest.config["m"] = s.m;
  manifest.config["k"] = s.k;
  manifest.config["sizes"] = s.sizes;
  manifest.config["reps"] = s.reps;
  manifest.config["alphas"] = s.alphas;
  manifest.config["methods"] = s.methods;
  manifest.finished = utc_timestamp();
  if (!s.out.empty() && s.out != "-") write_text(s.out + ".manifest.json", json(manifest).dump(2) + "\n");
  return infeasible ? kExitStat : 0;
}

std::vector<int> parse_dims(const std::string& spec) {
  std::vector<int> dims;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    auto dash = part.find('-');
    try {
      if (dash == std::string::npos) {
        dims.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dash)), hi = std::stoi(part.substr(dash + 1));
        for (int d = lo; d <= hi; ++d) dims.push_back(d);
      }
    } catch (const std::exception&) {
      throw Error(Errc::InvalidConfig, "bad --dims entry '" + part + "'");
    }
  }
  for (int d : dims)
    if (d < 1) throw Error(Errc::InvalidConfig, "dims must be >= 1");
  if (dims.empty()) throw Error(Errc::InvalidConfig, "no dims given");
  return dims;
}

int cmd_limit_table(const std::string& dims_spec, const std::string& variant, int reps, int grid_T,
                    std::uint64_t seed, const std::string& cache_dir) {
  std::vector<Variant> variants;
  if (variant == "level" || variant == "both") variants.push_back(Variant::Level);
  if (variant == "zero-mean" || variant == "both") variants.push_back(Variant::ZeroMean);
  DiskLimitTables tables(resolve_cache(cache_dir), grid_T, reps, seed);
  for (int d : parse_dims(dims_spec))
    for (Variant v : variants) {
      const auto status = tables.ensure(v, d);
      const char* what = status == DiskLimitTables::Status::Reused      ? "reused"
                         : status == DiskLimitTables::Status::Written   ? "written"
                                                                        : "regenerated";
      std::cout << tables.path_for(v, d).string() << ' ' << what << '\n';
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence clubs from pairwise KPSS tests"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CLUBKIT_VERSION);

  TestOptions topt;
  std::string panel_path, id_i, id_j;
  auto* test_pair = app.add_subcommand("test-pair", "KPSS test of one region pair, printed as JSON");
  test_pair->add_option("--panel", panel_path, "wide CSV panel")->required();
  test_pair->add_option("--i", id_i, "first region id")->required();
  test_pair->add_option("--j", id_j, "second region id")->required();
  add_test_options(test_pair, topt);

  double p_min = 0.01;
  std::string compare, report_out, sizes_csv;
  bool skip_failed = false;
  auto* find = app.add_subcommand("find-clubs", "sequential club search");
  find->add_option("--panel", panel_path, "wide CSV panel")->required();
  find->add_option("--p-min", p_min, "merge threshold")->check(CLI::Range(0.0, 1.0));
  find->add_option("--compare", compare, "partition or report JSON to compare against");
  find->add_option("--out", report_out, "report JSON (default stdout)");
  find->add_option("--sizes-csv", sizes_csv, "club size frequency table");
  find->add_flag("--skip-failed", skip_failed, "skip candidates whose test fails instead of aborting");
  add_test_options(find, topt);

  SimOptions sopt;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo detection experiment");
  auto* single = sim->add_flag("--single", sopt.single, "one club of m members");
  auto* multi = sim->add_flag("--multi", sopt.multi, "k clubs");
  single->excludes(multi);
  sim->add_option("--N", sopt.N, "countries")->delimiter(',')->check(CLI::PositiveNumber);
  sim->add_option("--T", sopt.T, "periods")->delimiter(',')->check(CLI::Range(2, 1000000));
  sim->add_option("--m", sopt.m, "club size (single)")->delimiter(',')->check(CLI::Range(2, 1000000));
  sim->add_option("--k", sopt.k, "number of clubs (multi)")->check(CLI::PositiveNumber);
  sim->add_option("--sizes", sopt.sizes, "fixed club sizes (multi); Poisson(N/k) draws if omitted")
      ->delimiter(',')
      ->check(CLI::Range(2, 1000000));
  sim->add_option("--rho", sopt.rho, "common factor AR parameter")->delimiter(',')->check(CLI::Range(-0.999999, 0.999999));
  sim->add_option("--reps", sopt.reps, "replications")->check(CLI::PositiveNumber);
  sim->add_option("--alphas", sopt.alphas, "significance levels")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  sim->add_option("--methods", sopt.methods, "CW, HF")->delimiter(',')->check(CLI::IsMember({"CW", "HF", "bootstrap", "asymptotic"}));
  sim->add_option("--out", sopt.out, "results CSV (default stdout); manifest goes next to it");
  add_test_options(sim, topt);
  sim->callback([&] {
    if (!sopt.single && !sopt.multi) throw CLI::ValidationError("simulate", "one of --single or --multi is required");
  });

  std::string dims = "1-9", variant = "level", cache_dir;
  int lt_reps = 50000, grid_T = 2000;
  std::uint64_t lt_seed = 20240101;
  auto* lt = app.add_subcommand("limit-table", "precompute asymptotic null tables");
  lt->add_option("--dims", dims, "dimensions, e.g. 1-6 or 1,3,5");
  lt->add_option("--variant", variant)->check(CLI::IsMember({"level", "zero-mean", "both"}));
  lt->add_option("--reps", lt_reps)->check(CLI::Range(kMinLimitReps, 100000000));
  lt->add_option("--grid-T", grid_T)->check(CLI::Range(kMinGridT, 1000000));
  lt->add_option("--seed", lt_seed);
  lt->add_option("--cache-dir", cache_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::string command_line;
  for (int a = 0; a < argc; ++a) command_line += (a ? " " : "") + std::string(argv[a]);

  try {
    if (*test_pair) return cmd_test_pair(panel_path, id_i, id_j, topt);
    if (*find) return cmd_find_clubs(panel_path, p_min, topt, compare, report_out, sizes_csv, skip_failed);
    if (*sim) return cmd_simulate(sopt, topt, command_line);
    if (*lt) return cmd_limit_table(dims, variant, lt_reps, grid_T, lt_seed, cache_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
