// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clubkit/analytics.hpp"
#include "clubkit/bootstrap.hpp"
#include "clubkit/clubs.hpp"
#include "clubkit/errors.hpp"
#include "clubkit/io.hpp"
#include "clubkit/kpss.hpp"
#include "clubkit/montecarlo.hpp"
#include "support.hpp"

using namespace clubkit;
using namespace clubkit::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool rel_close(double got, double want, double tol = 1e-10) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

Outcome hand_oracles() {
  std::vector<std::string> bad;
  Eigen::MatrixXd e(1, 4);
  e << 1, -1, 1, -1;
  if (!rel_close(newey_west(e, 0).sigma2(0, 0), 1.0)) bad.push_back("newey_west L=0");
  if (!rel_close(newey_west(e, 1).sigma2(0, 0), 0.25)) bad.push_back("newey_west L=1");
  if (!rel_close(kpss_stat(e, Variant::Level, 0), 0.125)) bad.push_back("kpss_stat");

  const Partition pa({{0, 1}, {2}}, 3), pb({{0, 1, 2}}, 3);
  if (!rel_close(cluster_correlation(pa, pb), std::sqrt(2.0 / (std::sqrt(2.0) * std::sqrt(6.0)))))
    bad.push_back("cluster_correlation");
  if (!rel_close(cluster_correlation(Partition({{0, 1}, {2, 3}}, 4), Partition({{0, 2}, {1, 3}}, 4)), 0.0))
    bad.push_back("cluster_correlation disjoint");

  const auto ks = kuipers_score(Confusion{2, 1, 1, 6});
  if (!rel_close(ks.KS, 2.0 / 3.0 - 1.0 / 7.0)) bad.push_back("kuipers_score");
  const auto perfect = kuipers_score(Confusion{3, 0, 0, 7});
  if (!rel_close(perfect.KS, 1.0)) bad.push_back("kuipers perfect");
  const auto all = kuipers_score(Confusion{3, 0, 7, 0});
  if (!rel_close(all.H, 1.0) || !rel_close(all.F, 1.0) || !rel_close(all.KS, 0.0)) bad.push_back("kuipers all");

  if (bad.empty()) return {true, "7 hand-evaluated values within 1e-10"};
  std::string d = "mismatch:";
  for (auto& b : bad) d += " " + b;
  return {false, d};
}

Outcome limit_calibration() {
  const LimitTable& t = shared_tables().table(Variant::Level, 1);
  const double q = t.quantile(0.95);
  const bool ok = t.meta.grid_T == 2000 && t.meta.reps == 50000 && std::abs(q - 0.463) <= 0.02;
  return {ok, "dim-1 level q95 = " + fmt(q) + " (target 0.463 +/- 0.02, grid_T=" + std::to_string(t.meta.grid_T) +
                  ", reps=" + std::to_string(t.meta.reps) + ")"};
}

Outcome size_correction() {
  constexpr int seeds = 500, T = 50;
  int rej_asy = 0, rej_boot = 0, failed = 0;
  const LimitTable& table = shared_tables().table(Variant::Level, 1);
  for (int s = 0; s < seeds; ++s) {
    Engine rng = make_engine(derive_seed(7, "criterion-size", {static_cast<std::uint64_t>(s)}));
    const Panel panel = make_panel(null_pair(T, 0.6, 0.2, rng));
    const auto diffs = all_pair_diffs({0, 1}, panel);
    const double stat = kpss_stat(diffs, Variant::Level, 2);
    if (asymptotic_pvalue(stat, table) < 0.05) ++rej_asy;
    BootstrapConfig cfg;
    cfg.R = 199;
    cfg.seed = derive_seed(11, "criterion-size-boot", {static_cast<std::uint64_t>(s)});
    try {
      if (bootstrap_pvalue(diffs, cfg).p_value < 0.05) ++rej_boot;
    } catch (const Error&) {
      ++failed;
    }
  }
  const double ra = static_cast<double>(rej_asy) / seeds;
  const double rb = static_cast<double>(rej_boot) / (seeds - failed);
  const bool ok = ra > rb && rb >= 0.02 && rb <= 0.09;
  return {ok, "rejection at 5%: asymptotic " + fmt(ra, 3) + ", bootstrap " + fmt(rb, 3) + " (" +
                  std::to_string(failed) + " fits failed)"};
}

Outcome table1() {
  ExperimentSpec spec;
  spec.cells = {DgpConfig{10, 50, 0.2, SingleClub{3}, 0}};
  spec.alphas = {0.05};
  spec.reps = 200;
  spec.seed = 2024;
  const auto rows = run_experiment(spec, &shared_tables());
  double cw = 0, hf = 0;
  int excl = 0;
  for (const auto& r : rows) {
    (r.method == Method::Bootstrap ? cw : hf) = r.mean_ks;
    excl += r.excluded;
  }
  const bool ok = std::abs(cw - 0.87) <= 0.10 && std::abs(hf - 0.63) <= 0.10 && cw > hf;
  return {ok, "mean KS CW " + fmt(cw, 3) + " (0.87 +/- 0.10), HF " + fmt(hf, 3) + " (0.63 +/- 0.10), excluded " +
                  std::to_string(excl)};
}

Outcome table2() {
  ExperimentSpec spec;
  spec.cells = {DgpConfig{10, 100, 0.2, MultiClub{3, {}}, 0}};
  spec.alphas = {0.05};
  spec.reps = 200;
  spec.seed = 2025;
  const auto rows = run_experiment(spec, &shared_tables());
  double cw = 0, hf = 0;
  for (const auto& r : rows) (r.method == Method::Bootstrap ? cw : hf) = r.success_rate;
  return {cw - hf >= 0.05, "perfect-score rate CW " + fmt(cw, 3) + ", HF " + fmt(hf, 3) + " (need CW - HF >= 0.05)"};
}

Outcome club_counts() {
  constexpr int panels = 20, N = 8, T = 50;
  int fewer_or_equal = 0;
  std::string counts;
  for (int p = 0; p < panels; ++p) {
    Engine rng = make_engine(derive_seed(13, "criterion-counts", {static_cast<std::uint64_t>(p)}));
    const Eigen::VectorXd trend = random_walk(T, rng);
    Eigen::MatrixXd y(N, T);
    for (int i = 0; i < N; ++i) y.row(i) = (static_cast<double>(i) + trend.array() + ar1(T, 0.8, rng).array()).matrix().transpose();
    const Panel panel = make_panel(y);
    SearchConfig cfg;
    cfg.method = Method::Asymptotic;
    const auto asy = find_clubs(panel, cfg, &shared_tables()).partition.club_count();
    cfg.method = Method::Bootstrap;
    cfg.bootstrap.seed = derive_seed(17, "criterion-counts-boot", {static_cast<std::uint64_t>(p)});
    const auto boot = find_clubs(panel, cfg, &shared_tables()).partition.club_count();
    if (boot <= asy) ++fewer_or_equal;
    counts += (p ? " " : "") + std::to_string(boot) + "/" + std::to_string(asy);
  }
  const double share = static_cast<double>(fewer_or_equal) / panels;
  return {share >= 0.70, "bootstrap <= asymptotic club count in " + fmt(share, 2) + " of panels (boot/asy: " + counts + ")"};
}

// Random panel mixing common-trend groups and independent walks.
Panel random_panel(Engine& rng, Index N, int T) {
  std::uniform_int_distribution<int> groups(1, static_cast<int>(N));
  const int G = groups(rng);
  std::vector<Eigen::VectorXd> trends;
  for (int g = 0; g < G; ++g) trends.push_back(random_walk(T, rng));
  std::uniform_int_distribution<int> pick(0, G - 1);
  Eigen::MatrixXd y(N, T);
  for (Index i = 0; i < N; ++i)
    y.row(static_cast<Eigen::Index>(i)) = (trends[pick(rng)] + white_noise(T, rng, 0.5)).transpose();
  return make_panel(y);
}

bool valid_partition(const Partition& p, Index N) {
  std::vector<int> seen(N, 0);
  for (const auto& c : p.clubs()) {
    if (c.empty() || !std::is_sorted(c.begin(), c.end())) return false;
    for (Index i : c) {
      if (i >= N) return false;
      ++seen[i];
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

Partition random_partition(Engine& rng, Index N) {
  std::uniform_int_distribution<Index> label(0, N - 1);
  std::vector<Members> blocks(N);
  for (Index i = 0; i < N; ++i) blocks[label(rng)].push_back(i);
  std::vector<Members> clubs;
  for (auto& b : blocks)
    if (!b.empty()) clubs.push_back(b);
  return Partition(std::move(clubs), N);
}

Outcome properties() {
  constexpr int cases = 1000;
  int part_ok = 0, replay_ok = 0, mono_ok = 0, zeta_ok = 0, det_ok = 0;
  std::uniform_int_distribution<int> size(2, 6);
  std::uniform_real_distribution<double> unit(0.001, 0.5);
  for (int c = 0; c < cases; ++c) {
    Engine rng = make_engine(derive_seed(19, "criterion-properties", {static_cast<std::uint64_t>(c)}));
    const auto N = static_cast<Index>(size(rng));
    const Panel panel = random_panel(rng, N, 40);
    SearchConfig cfg;
    CandidateEvaluator eval(panel, cfg, &shared_tables());
    double lo = unit(rng), hi = unit(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto a = find_clubs(eval, lo);
    const auto b = find_clubs(eval, hi);
    if (valid_partition(a.partition, N) && valid_partition(b.partition, N)) ++part_ok;
    if (replay(a.trace, N) == a.partition && replay(b.trace, N) == b.partition) ++replay_ok;
    if (b.trace.size() <= a.trace.size() && std::equal(b.trace.begin(), b.trace.end(), a.trace.begin())) ++mono_ok;

    const Index M = static_cast<Index>(size(rng)) + 1;
    const Partition p = random_partition(rng, M), q = random_partition(rng, M);
    const double z1 = cluster_correlation(p, q), z2 = cluster_correlation(q, p);
    const bool nontrivial = p.club_count() < M;
    if (z1 == z2 && z1 >= 0.0 && z1 <= 1.0 + 1e-12 && (!nontrivial || std::abs(cluster_correlation(p, p) - 1.0) < 1e-12))
      ++zeta_ok;

    const Panel small = random_panel(rng, 3, 30);
    SearchConfig bc;
    bc.method = Method::Bootstrap;
    bc.bootstrap.R = 99;
    bc.bootstrap.seed = static_cast<std::uint64_t>(c);
    const auto r1 = find_clubs(small, bc, nullptr);
    const auto r2 = find_clubs(small, bc, nullptr);
    if (r1 == r2) ++det_ok;
  }
  const bool ok = part_ok == cases && replay_ok == cases && mono_ok == cases && zeta_ok == cases && det_ok == cases;
  std::ostringstream os;
  os << "of " << cases << ": partition " << part_ok << ", replay " << replay_ok << ", monotone " << mono_ok << ", zeta "
     << zeta_ok << ", deterministic " << det_ok;
  return {ok, os.str()};
}

Outcome schemas() {
  std::vector<std::string> bad;
  Engine rng = make_engine(23);
  const auto trend = random_walk(60, rng);
  Eigen::MatrixXd y(7, 60);
  for (int i = 0; i < 7; ++i) {
    const Eigen::VectorXd base = i < 3 ? trend : (i < 5 ? Eigen::VectorXd(trend * 2.0) : random_walk(60, rng));
    y.row(i) = (base + white_noise(60, rng, 0.3)).transpose();
  }
  const Panel panel = make_panel(y);
  const auto report = find_clubs(panel, SearchConfig{}, &shared_tables());
  const auto dist = size_distribution(report.partition);
  const auto inc = income_stats(report.partition, panel);
  std::ostringstream csv;
  write_size_table(csv, {{"user", dist, inc}});
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  std::string want = "label";
  for (Index s = 1; s <= dist.max_size(); ++s) want += "," + std::to_string(s);
  want += ",total,sigma_ybar,ybar_min,ybar_max";
  if (header != want) bad.push_back("size header '" + header + "'");
  if (std::count(row.begin(), row.end(), ',') != std::count(header.begin(), header.end(), ',')) bad.push_back("row width");
  Index n = 0;
  for (auto [s, k] : dist.counts) n += s * k;
  if (n != panel.regions()) bad.push_back("size counts do not cover the panel");
  if (dist.total != report.partition.club_count()) bad.push_back("total");
  const auto listed = report.partition.by_size();
  for (std::size_t k = 1; k < listed.size(); ++k)
    if (listed[k].size() > listed[k - 1].size()) bad.push_back("listing not largest first");
  nlohmann::json j = report;
  j["partition"] = partition_json(report.partition, panel);
  if (!(j.get<ClubReport>() == report)) bad.push_back("report JSON round trip");
  if (!(partition_from_json(j, panel) == report.partition)) bad.push_back("partition closure");
  if (bad.empty())
    return {true, "size table '" + header + "', " + std::to_string(listed.size()) + " clubs largest first, JSON closure"};
  std::string d;
  for (auto& b : bad) d += (d.empty() ? "" : "; ") + b;
  return {false, d};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"hand-oracle equivalence", hand_oracles},
      {"limit-table calibration", limit_calibration},
      {"bootstrap size correction", size_correction},
      {"single-club KS, m=3 N=10 T=50", table1},
      {"multi-club perfect score, N=10 k=3 T=100", table2},
      {"bootstrap finds no more clubs", club_counts},
      {"property suites", properties},
      {"output schemas", schemas},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s (%.1fs) %s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
