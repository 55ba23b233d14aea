#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clubkit/clubs.hpp"
#include "clubkit/panel.hpp"
#include "clubkit/rng.hpp"

namespace clubkit {

struct SingleClub {
  int m = 3;
};

struct MultiClub {
  int k = 2;
  std::vector<int> sizes;  // empty: drawn per replication from Poisson(N/k)
};

/// y_it = alpha_i + d_i r_t + eps_it with a common random-walk factor r_t
/// (AR(1) increments, parameter rho_v) and AR(1) idiosyncratic errors.
struct DgpConfig {
  int N = 10;
  int T = 50;
  double rho_v = 0.2;
  std::variant<SingleClub, MultiClub> clubs = SingleClub{};
  std::uint64_t seed = 0;
  int burn_in = 50;
};

void validate(const DgpConfig& cfg);

/// Degrees of freedom of the chi-square draws for alpha_i and non-member d_i:
/// the (first) club size.
int chi2_df(const DgpConfig& cfg);

/// Country parameters shared by every replication of an experiment.
struct CountryParams {
  std::vector<double> alpha;
  std::vector<double> rho;
  std::vector<double> sigma2_v;
};

CountryParams draw_country_params(int N, int df, std::uint64_t seed);

struct DgpTruth {
  Panel panel;
  Partition membership;        // true clubs plus non-member singletons
  std::vector<Members> clubs;  // true clubs only
  std::vector<double> alpha, d, rho, sigma2_v;
};

/// Club sizes for a multi-club replication: Poisson(N/k) draws, each >= 2,
/// the last redrawn until at least two non-members remain.
std::vector<int> draw_club_sizes(int N, int k, Engine& rng);

DgpTruth generate(const DgpConfig& cfg);
DgpTruth generate(const DgpConfig& cfg, const CountryParams& params, std::uint64_t replication_seed);

/// Membership confusion counts of a detected club against the true club.
/// In the II/IO/OI/OO notation with the actual state first: II = hits,
/// IO = misses, OI = false alarms, OO = correct rejections.
struct Confusion {
  int hits = 0;
  int misses = 0;
  int false_alarms = 0;
  int correct_rejections = 0;
  int total() const { return hits + misses + false_alarms + correct_rejections; }
};

/// The detected cluster (size >= 2) overlapping the true club most, ties to
/// the larger cluster then the smaller first member. Empty if none overlaps.
Members matched_club(const Partition& detected, const Members& truth);

Confusion confusion(const Partition& detected, const DgpTruth& truth);

struct KuipersScore {
  double H = 0.0;   // hits / (hits + misses)
  double F = 0.0;   // false alarms / (false alarms + correct rejections)
  double KS = 0.0;  // H - F
};

KuipersScore kuipers_score(const Confusion& c);
KuipersScore kuipers_score(const Partition& detected, const DgpTruth& truth);

/// Pesaran-Timmermann statistic of detected against actual membership.
double pt_statistic(const Confusion& c);
double pt_statistic(const Partition& detected, const DgpTruth& truth);

/// Every true club detected exactly and every non-member left a singleton.
bool perfect_score(const Partition& detected, const DgpTruth& truth);

struct ExperimentSpec {
  std::vector<DgpConfig> cells;
  std::vector<Method> methods{Method::Asymptotic, Method::Bootstrap};
  std::vector<double> alphas{0.01, 0.05, 0.10};
  int reps = 200;
  Convergence kind = Convergence::Relative;
  int bandwidth = kDefaultBandwidth;
  BootstrapConfig bootstrap;  // R and p_max; seeds are derived per replication
  std::uint64_t seed = 0;
};

struct ResultRow {
  int cell = 0;
  DgpConfig dgp;
  Method method = Method::Asymptotic;
  double alpha = 0.05;
  int reps = 0;
  int excluded = 0;  // replications whose search failed
  // single club
  int n_ks = 0;
  double mean_H = 0.0, mean_F = 0.0, mean_ks = 0.0, se_ks = 0.0;
  int n_pt = 0;
  double mean_pt = 0.0, se_pt = 0.0;
  // multiple clubs
  int n_success = 0;
  double success_rate = 0.0, se_success = 0.0;
};

/// Runs every cell x method x alpha. Replication data are shared across
/// methods and alphas; replications run in parallel and are reduced in order,
/// so results are identical for any thread count.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, LimitTableSource* tables);

namespace serial {
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, LimitTableSource* tables);
}

std::string method_name(Method m);
std::string describe_clubs(const DgpConfig& cfg);

}  // namespace clubkit
