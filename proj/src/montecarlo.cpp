#include "clubkit/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "clubkit/errors.hpp"

namespace clubkit {

namespace {

constexpr double kClubGap = 0.1;
constexpr int kMaxRedraws = 10000;

std::vector<int> given_sizes(const DgpConfig& cfg) {
  if (const auto* s = std::get_if<SingleClub>(&cfg.clubs)) return {s->m};
  return std::get<MultiClub>(cfg.clubs).sizes;
}

bool multi(const DgpConfig& cfg) { return std::holds_alternative<MultiClub>(cfg.clubs); }

double ratio(int num, int den, const char* what) {
  if (den == 0) throw Error(Errc::UndefinedRatio, std::string(what) + " has a zero denominator");
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void validate(const DgpConfig& cfg) {
  if (cfg.T < 2) throw Error(Errc::InvalidConfig, "T must be >= 2");
  if (!(cfg.rho_v > -1.0 && cfg.rho_v < 1.0)) throw Error(Errc::InvalidConfig, "rho_v must lie in (-1,1)");
  if (cfg.burn_in < 0) throw Error(Errc::InvalidConfig, "burn_in must be >= 0");
  if (const auto* s = std::get_if<SingleClub>(&cfg.clubs)) {
    if (s->m < 2) throw Error(Errc::InvalidConfig, "a club needs at least two members");
    if (s->m > cfg.N - 2)
      throw Error(Errc::InfeasibleConfig, "m = " + std::to_string(s->m) + " leaves fewer than two non-members of N = " +
                                              std::to_string(cfg.N));
    return;
  }
  const auto& mc = std::get<MultiClub>(cfg.clubs);
  if (mc.k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
  if (mc.sizes.empty()) {
    if (2 * mc.k > cfg.N - 2)
      throw Error(Errc::InfeasibleConfig, std::to_string(mc.k) + " clubs of two or more cannot leave two non-members of N = " +
                                              std::to_string(cfg.N));
    return;
  }
  if (static_cast<int>(mc.sizes.size()) != mc.k) throw Error(Errc::InvalidConfig, "sizes must list k clubs");
  for (int s : mc.sizes)
    if (s < 2) throw Error(Errc::InvalidConfig, "a club needs at least two members");
  if (std::accumulate(mc.sizes.begin(), mc.sizes.end(), 0) > cfg.N - 2)
    throw Error(Errc::InfeasibleConfig, "club sizes leave fewer than two non-members");
}

int chi2_df(const DgpConfig& cfg) {
  if (const auto* s = std::get_if<SingleClub>(&cfg.clubs)) return s->m;
  const auto& mc = std::get<MultiClub>(cfg.clubs);
  if (!mc.sizes.empty()) return mc.sizes.front();
  return std::max(1, static_cast<int>(std::lround(static_cast<double>(cfg.N) / mc.k)));
}

CountryParams draw_country_params(int N, int df, std::uint64_t seed) {
  Engine rng = make_engine(derive_seed(seed, "country-params", {static_cast<std::uint64_t>(N)}));
  std::chi_squared_distribution<double> chi2(df);
  std::uniform_real_distribution<double> rho(0.2, 0.6), s2(0.5, 1.5);
  CountryParams p;
  for (int i = 0; i < N; ++i) {
    p.alpha.push_back(chi2(rng));
    p.rho.push_back(rho(rng));
    p.sigma2_v.push_back(s2(rng));
  }
  return p;
}

std::vector<int> draw_club_sizes(int N, int k, Engine& rng) {
  if (2 * k > N - 2) throw Error(Errc::InfeasibleConfig, "cannot fit the clubs and two non-members");
  std::poisson_distribution<int> pois(static_cast<double>(N) / k);
  auto draw_min2 = [&] {
    for (int a = 0; a < kMaxRedraws; ++a)
      if (int s = pois(rng); s >= 2) return s;
    throw Error(Errc::InfeasibleConfig, "Poisson club size below two on every draw");
  };
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    std::vector<int> sizes;
    int used = 0;
    for (int c = 0; c + 1 < k; ++c) {
      sizes.push_back(draw_min2());
      used += sizes.back();
    }
    const int room = N - 2 - used;
    if (room < 2) continue;  // no space left for the last club: start over
    for (int a = 0; a < kMaxRedraws; ++a) {
      const int s = draw_min2();
      if (s <= room) {
        sizes.push_back(s);
        return sizes;
      }
    }
  }
  throw Error(Errc::InfeasibleConfig, "could not draw club sizes leaving two non-members");
}

DgpTruth generate(const DgpConfig& cfg) {
  validate(cfg);
  const auto params = draw_country_params(cfg.N, chi2_df(cfg), cfg.seed);
  return generate(cfg, params, derive_seed(cfg.seed, "replication"));
}

DgpTruth generate(const DgpConfig& cfg, const CountryParams& params, std::uint64_t replication_seed) {
  validate(cfg);
  const int N = cfg.N, T = cfg.T;
  if (static_cast<int>(params.alpha.size()) != N || static_cast<int>(params.rho.size()) != N ||
      static_cast<int>(params.sigma2_v.size()) != N)
    throw Error(Errc::DimensionMismatch, "country parameters do not match N");
  Engine rng = make_engine(derive_seed(replication_seed, "dgp"));
  std::normal_distribution<double> gauss;

  std::vector<int> sizes = given_sizes(cfg);
  if (multi(cfg) && sizes.empty()) sizes = draw_club_sizes(N, std::get<MultiClub>(cfg.clubs).k, rng);
  const int df = sizes.front();

  std::vector<Members> clubs;
  std::vector<double> d(static_cast<std::size_t>(N), 0.0);
  std::vector<double> club_values;
  Index next = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double value = static_cast<double>(c + 1);
    club_values.push_back(value);
    Members m;
    for (int s = 0; s < sizes[c]; ++s, ++next) {
      m.push_back(next);
      d[next] = value;
    }
    clubs.push_back(std::move(m));
  }
  std::chi_squared_distribution<double> chi2(df);
  for (Index i = next; i < static_cast<Index>(N); ++i) {
    for (int a = 0;; ++a) {
      if (a == kMaxRedraws) throw Error(Errc::InfeasibleConfig, "could not draw a distinct non-member loading");
      const double v = chi2(rng);
      const bool close = std::any_of(club_values.begin(), club_values.end(),
                                     [&](double cv) { return std::abs(v - cv) < kClubGap; });
      if (!close) {
        d[i] = v;
        break;
      }
    }
  }

  // common factor: r_t = r_{t-1} + v_t, v_t = rho_v v_{t-1} + e_t, r_0 = v_0 = 0
  const double e_sd = std::sqrt(1.0 - cfg.rho_v * cfg.rho_v);
  Eigen::VectorXd r(T);
  double v = 0.0, level = 0.0;
  for (int t = 0; t < T; ++t) {
    v = cfg.rho_v * v + e_sd * gauss(rng);
    level += v;
    r[t] = level;
  }

  Eigen::MatrixXd y(N, T);
  for (int i = 0; i < N; ++i) {
    const double rho = params.rho[i];
    const double sd = std::sqrt(params.sigma2_v[i] * (1.0 - rho * rho));
    double eps = 0.0;
    for (int t = 0; t < cfg.burn_in; ++t) eps = rho * eps + sd * gauss(rng);
    for (int t = 0; t < T; ++t) {
      eps = rho * eps + sd * gauss(rng);
      y(i, t) = params.alpha[i] + d[i] * r[t] + eps;
    }
  }

  std::vector<std::string> ids;
  for (int i = 0; i < N; ++i) ids.push_back("c" + std::to_string(i + 1));
  std::vector<Members> blocks = clubs;
  for (Index i = next; i < static_cast<Index>(N); ++i) blocks.push_back({i});
  return DgpTruth{Panel(std::move(ids), std::move(y)), Partition(std::move(blocks), static_cast<Index>(N)),
                  std::move(clubs), params.alpha, std::move(d), params.rho, params.sigma2_v};
}

Members matched_club(const Partition& detected, const Members& truth) {
  const Members* best = nullptr;
  std::size_t best_overlap = 0;
  for (const auto& c : detected.clubs()) {
    if (c.size() < 2) continue;
    Members inter;
    std::set_intersection(c.begin(), c.end(), truth.begin(), truth.end(), std::back_inserter(inter));
    const std::size_t ov = inter.size();
    if (ov == 0) continue;
    // clubs come ordered by smallest member, so strict comparisons keep that tie-break
    if (!best || ov > best_overlap || (ov == best_overlap && c.size() > best->size())) {
      best = &c;
      best_overlap = ov;
    }
  }
  return best ? *best : Members{};
}

namespace {

const Members& single_truth(const DgpTruth& truth) {
  if (truth.clubs.size() != 1) throw Error(Errc::InvalidConfig, "membership scores need a single-club truth");
  return truth.clubs.front();
}

}  // namespace

Confusion confusion(const Partition& detected, const DgpTruth& truth) {
  const Members& actual = single_truth(truth);
  if (detected.universe() != truth.membership.universe())
    throw Error(Errc::DimensionMismatch, "detected partition and truth cover different regions");
  const Members found = matched_club(detected, actual);
  Confusion c;
  for (Index i = 0; i < detected.universe(); ++i) {
    const bool is_member = std::binary_search(actual.begin(), actual.end(), i);
    const bool flagged = std::binary_search(found.begin(), found.end(), i);
    if (is_member && flagged) ++c.hits;
    else if (is_member) ++c.misses;
    else if (flagged) ++c.false_alarms;
    else ++c.correct_rejections;
  }
  return c;
}

KuipersScore kuipers_score(const Confusion& c) {
  KuipersScore s;
  s.H = ratio(c.hits, c.hits + c.misses, "hit rate");
  s.F = ratio(c.false_alarms, c.false_alarms + c.correct_rejections, "false alarm rate");
  s.KS = s.H - s.F;
  return s;
}

KuipersScore kuipers_score(const Partition& detected, const DgpTruth& truth) {
  return kuipers_score(confusion(detected, truth));
}

double pt_statistic(const Confusion& c) {
  const double n = c.total();
  if (n == 0) throw Error(Errc::DegenerateMargins, "no observations");
  const double py = (c.hits + c.misses) / n;
  const double px = (c.hits + c.false_alarms) / n;
  if (py <= 0.0 || py >= 1.0 || px <= 0.0 || px >= 1.0)
    throw Error(Errc::DegenerateMargins, "actual or predicted member share is 0 or 1");
  const double p_hat = (c.hits + c.correct_rejections) / n;
  const double p_star = px * py + (1.0 - px) * (1.0 - py);
  const double v_hat = p_star * (1.0 - p_star) / n;
  const double v_star = ((2 * py - 1) * (2 * py - 1) * px * (1 - px) + (2 * px - 1) * (2 * px - 1) * py * (1 - py) +
                         4 * px * py * (1 - px) * (1 - py) / n) /
                        n;
  const double denom = v_hat - v_star;
  if (!(denom > 0.0)) throw Error(Errc::DegenerateMargins, "non-positive PT variance");
  return (p_hat - p_star) / std::sqrt(denom);
}

double pt_statistic(const Partition& detected, const DgpTruth& truth) {
  return pt_statistic(confusion(detected, truth));
}

bool perfect_score(const Partition& detected, const DgpTruth& truth) {
  if (detected.universe() != truth.membership.universe()) return false;
  const auto& found = detected.clubs();
  for (const auto& club : truth.clubs)
    if (std::find(found.begin(), found.end(), club) == found.end()) return false;
  std::vector<bool> member(detected.universe(), false);
  for (const auto& club : truth.clubs)
    for (Index i : club) member[i] = true;
  for (const auto& c : found)
    if (c.size() >= 2)
      for (Index i : c)
        if (!member[i]) return false;
  return true;
}

std::string method_name(Method m) { return m == Method::Bootstrap ? "CW" : "HF"; }

std::string describe_clubs(const DgpConfig& cfg) {
  if (const auto* s = std::get_if<SingleClub>(&cfg.clubs)) return "m=" + std::to_string(s->m);
  const auto& mc = std::get<MultiClub>(cfg.clubs);
  std::string out = "k=" + std::to_string(mc.k);
  if (mc.sizes.empty()) return out + " sizes=poisson";
  out += " sizes=";
  for (std::size_t c = 0; c < mc.sizes.size(); ++c) out += (c ? "-" : "") + std::to_string(mc.sizes[c]);
  return out;
}

namespace {

// Outcome of one replication for one method at one alpha.
struct Outcome {
  bool failed = false;
  bool ks_ok = false;
  KuipersScore ks;
  bool pt_ok = false;
  double pt = 0.0;
  bool success = false;
};

using RepOutcomes = std::vector<Outcome>;  // methods x alphas, row-major

RepOutcomes run_replication(const ExperimentSpec& spec, int cell, const CountryParams& params, int rep,
                            LimitTableSource* tables) {
  const DgpConfig& dgp = spec.cells[cell];
  const std::size_t A = spec.alphas.size();
  RepOutcomes out(spec.methods.size() * A);
  const auto rep_seed =
      derive_seed(spec.seed, "replication", {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(rep)});
  std::optional<DgpTruth> truth;
  try {
    truth.emplace(generate(dgp, params, rep_seed));
  } catch (const Error&) {
    for (auto& o : out) o.failed = true;
    return out;
  }
  const bool single = !multi(dgp);
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    SearchConfig sc;
    sc.p_min = spec.alphas.front();
    sc.kind = spec.kind;
    sc.method = spec.methods[mi];
    sc.bandwidth = spec.bandwidth;
    sc.bootstrap = spec.bootstrap;
    sc.bootstrap.seed = derive_seed(rep_seed, "bootstrap");
    try {
      CandidateEvaluator eval(truth->panel, sc, tables);
      for (std::size_t ai = 0; ai < A; ++ai) {
        Outcome& o = out[mi * A + ai];
        const auto report = find_clubs(eval, spec.alphas[ai]);
        if (single) {
          const auto c = confusion(report.partition, *truth);
          try {
            o.ks = kuipers_score(c);
            o.ks_ok = true;
          } catch (const Error&) {
          }
          try {
            o.pt = pt_statistic(c);
            o.pt_ok = true;
          } catch (const Error&) {
          }
        } else {
          o.success = perfect_score(report.partition, *truth);
        }
      }
    } catch (const Error&) {
      for (std::size_t ai = 0; ai < A; ++ai) out[mi * A + ai].failed = true;
    }
  }
  return out;
}

struct Moments {
  int n = 0;
  double sum = 0.0, sum2 = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sum2 += x * x;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sum2 - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

std::vector<ResultRow> reduce(const ExperimentSpec& spec, int cell, const std::vector<RepOutcomes>& reps) {
  const std::size_t A = spec.alphas.size();
  std::vector<ResultRow> rows;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi)
    for (std::size_t ai = 0; ai < A; ++ai) {
      ResultRow row;
      row.cell = cell;
      row.dgp = spec.cells[cell];
      row.method = spec.methods[mi];
      row.alpha = spec.alphas[ai];
      row.reps = spec.reps;
      Moments H, F, ks, pt, succ;
      for (const auto& rep : reps) {
        const Outcome& o = rep[mi * A + ai];
        if (o.failed) {
          ++row.excluded;
          continue;
        }
        if (multi(row.dgp)) {
          succ.add(o.success ? 1.0 : 0.0);
          continue;
        }
        if (o.ks_ok) {
          H.add(o.ks.H);
          F.add(o.ks.F);
          ks.add(o.ks.KS);
        }
        if (o.pt_ok) pt.add(o.pt);
      }
      row.n_ks = ks.n;
      row.mean_H = H.mean();
      row.mean_F = F.mean();
      row.mean_ks = ks.mean();
      row.se_ks = ks.se();
      row.n_pt = pt.n;
      row.mean_pt = pt.mean();
      row.se_pt = pt.se();
      row.n_success = succ.n;
      row.success_rate = succ.mean();
      row.se_success = succ.n ? std::sqrt(succ.mean() * (1.0 - succ.mean()) / succ.n) : 0.0;
      rows.push_back(row);
    }
  return rows;
}

void check(const ExperimentSpec& spec, LimitTableSource* tables) {
  if (spec.reps < 1) throw Error(Errc::InvalidConfig, "reps must be >= 1");
  if (spec.alphas.empty() || spec.methods.empty()) throw Error(Errc::InvalidConfig, "need alphas and methods");
  for (double a : spec.alphas)
    if (!(a > 0.0 && a < 1.0)) throw Error(Errc::InvalidConfig, "alphas must lie in (0,1)");
  for (Method m : spec.methods)
    if (m == Method::Asymptotic && !tables) throw Error(Errc::InvalidConfig, "asymptotic method needs limit tables");
}

template <bool Parallel>
std::vector<ResultRow> run(const ExperimentSpec& spec, LimitTableSource* tables) {
  check(spec, tables);
  std::vector<ResultRow> rows;
  for (int cell = 0; cell < static_cast<int>(spec.cells.size()); ++cell) {
    const DgpConfig& dgp = spec.cells[cell];
    validate(dgp);
    const auto params = draw_country_params(dgp.N, chi2_df(dgp), spec.seed);
    std::vector<RepOutcomes> reps(static_cast<std::size_t>(spec.reps));
    if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int rep = 0; rep < spec.reps; ++rep) reps[rep] = run_replication(spec, cell, params, rep, tables);
    } else {
      for (int rep = 0; rep < spec.reps; ++rep) reps[rep] = run_replication(spec, cell, params, rep, tables);
    }
    auto cell_rows = reduce(spec, cell, reps);
    rows.insert(rows.end(), cell_rows.begin(), cell_rows.end());
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, LimitTableSource* tables) {
  return run<true>(spec, tables);
}

std::vector<ResultRow> serial::run_experiment(const ExperimentSpec& spec, LimitTableSource* tables) {
  return run<false>(spec, tables);
}

}  // namespace clubkit
