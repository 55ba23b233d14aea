#include "clubkit/clubs.hpp"

#include <algorithm>
#include <exception>

#include "clubkit/errors.hpp"
#include "clubkit/rng.hpp"

namespace clubkit {

namespace {

std::string describe(const Members& m) {
  std::string s = "{";
  for (std::size_t k = 0; k < m.size(); ++k) s += (k ? "," : "") + std::to_string(m[k]);
  return s + "}";
}

BootstrapConfig bootstrap_config(const SearchConfig& cfg) {
  BootstrapConfig b = cfg.bootstrap;
  b.variant = variant_of(cfg.kind);
  b.bandwidth = cfg.bandwidth;
  return b;
}

}  // namespace

void validate(const SearchConfig& cfg) {
  if (!(cfg.p_min > 0.0 && cfg.p_min < 1.0)) throw Error(Errc::InvalidConfig, "p_min must lie in (0,1)");
  if (cfg.bandwidth < 0) throw Error(Errc::InvalidConfig, "bandwidth must be >= 0");
  if (cfg.method == Method::Bootstrap) validate(bootstrap_config(cfg));
}

std::uint64_t members_key(const Members& members) {
  std::uint64_t h = 0x2545f4914f6cdd1dULL ^ members.size();
  for (Index m : members) h = detail::splitmix64(h ^ (static_cast<std::uint64_t>(m) + 0x9e3779b97f4a7c15ULL));
  return h;
}

CandidateEvaluator::CandidateEvaluator(const Panel& panel, const SearchConfig& cfg, LimitTableSource* tables)
    : panel_(panel), cfg_(cfg), tables_(tables) {
  validate(cfg_);
  if (cfg_.method == Method::Asymptotic && tables_ == nullptr)
    throw Error(Errc::InvalidConfig, "asymptotic p-values need a limit table source");
}

std::map<Members, StatResult> CandidateEvaluator::cache() const {
  std::lock_guard lock(mutex_);
  return pvalues_;
}

bool CandidateEvaluator::cached(const Members& members) const {
  std::lock_guard lock(mutex_);
  return pvalues_.count(members) != 0;
}

StatResult CandidateEvaluator::evaluate(const Members& members) {
  {
    std::lock_guard lock(mutex_);
    auto it = pvalues_.find(members);
    if (it != pvalues_.end()) return it->second;
  }
  StatResult r = compute(members);
  std::lock_guard lock(mutex_);
  pvalues_.emplace(members, r);
  return r;
}

ArmaFit CandidateEvaluator::fit_for(Index a, Index b, const Eigen::VectorXd& series) {
  const auto key = std::make_pair(a, b);
  {
    std::lock_guard lock(mutex_);
    auto it = fits_.find(key);
    if (it != fits_.end()) return it->second;
  }
  ArmaFit fit = fit_difference_model(std::span<const double>(series.data(), series.size()), cfg_.bootstrap.p_max);
  std::lock_guard lock(mutex_);
  return fits_.emplace(key, std::move(fit)).first->second;
}

StatResult CandidateEvaluator::compute(const Members& members) {
  const Variant variant = variant_of(cfg_.kind);
  const int n = static_cast<int>(members.size());
  StatResult out;
  out.method = cfg_.method;
  out.variant = variant;
  out.series = n * (n - 1) / 2;

  std::vector<PairDiff> basis;
  for (auto& d : consecutive_pair_diffs(members, panel_))
    if (!is_degenerate(d.series, variant)) basis.push_back(std::move(d));
  out.dim = static_cast<int>(basis.size());
  if (basis.empty()) {
    out.singular = true;
    return out;
  }
  const Eigen::MatrixXd series = stack(basis);
  try {
    if (cfg_.method == Method::Asymptotic) {
      out.statistic = kpss_stat(series, variant, cfg_.bandwidth);
      out.p_value = asymptotic_pvalue(out.statistic, tables_->table(variant, out.dim), out.dim);
    } else {
      std::vector<ArmaFit> fits;
      fits.reserve(basis.size());
      for (const auto& d : basis) fits.push_back(fit_for(d.i, d.j, d.series));
      const auto r = bootstrap_pvalue(series, fits, bootstrap_config(cfg_), members_key(members));
      out.statistic = r.statistic;
      out.p_value = r.p_value;
    }
  } catch (const Error& e) {
    if (e.code() != Errc::SingularLrv) throw;
    out.statistic = 0.0;
    out.p_value = 1.0;
    out.singular = true;
  }
  return out;
}

StatResult candidate_pvalue(const Members& a, const Members& b, const Panel& panel, const SearchConfig& cfg,
                            LimitTableSource* tables) {
  if (a.empty() || b.empty()) throw Error(Errc::TooFewMembers, "candidate clusters must be nonempty");
  const Members u = merge(a, b);
  if (std::adjacent_find(u.begin(), u.end()) != u.end())
    throw Error(Errc::InvalidPartition, "candidate clusters overlap");
  CandidateEvaluator eval(panel, cfg, tables);
  return eval.evaluate(u);
}

ClubReport find_clubs(const Panel& panel, const SearchConfig& cfg, LimitTableSource* tables) {
  CandidateEvaluator eval(panel, cfg, tables);
  return find_clubs(eval, cfg.p_min);
}

ClubReport find_clubs(CandidateEvaluator& eval, double p_min) {
  if (!(p_min > 0.0 && p_min < 1.0)) throw Error(Errc::InvalidConfig, "p_min must lie in (0,1)");
  const Index N = eval.panel().regions();
  if (N < 2) throw Error(Errc::TooFewMembers, "club search needs at least two regions");

  ClubReport report;
  std::vector<Members> clusters = Partition::singletons(N).clubs();

  for (int iteration = 1; clusters.size() > 1; ++iteration) {
    struct Candidate {
      std::size_t a, b;
      Members members;
      StatResult result;
      std::exception_ptr error;
    };
    std::vector<Candidate> cands;
    cands.reserve(clusters.size() * (clusters.size() - 1) / 2);
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b)
        cands.push_back({a, b, merge(clusters[a], clusters[b]), {}, nullptr});

    const auto count = static_cast<long>(cands.size());
#pragma omp parallel for schedule(dynamic)
    for (long k = 0; k < count; ++k) {
      try {
        cands[k].result = eval.evaluate(cands[k].members);
      } catch (...) {
        cands[k].error = std::current_exception();
      }
    }

    const Candidate* best = nullptr;
    std::size_t failed = 0;
    for (const auto& c : cands) {
      if (c.error) {
        std::string what = "unknown error";
        try {
          std::rethrow_exception(c.error);
        } catch (const std::exception& e) {
          what = e.what();
        }
        const std::string msg = "candidate " + describe(clusters[c.a]) + " + " + describe(clusters[c.b]) + ": " + what;
        if (!eval.config().skip_failed_candidates) {
          try {
            std::rethrow_exception(c.error);
          } catch (const Error& e) {
            throw Error(e.code(), msg);
          }
        }
        report.failures.push_back(msg);
        ++failed;
        continue;
      }
      // candidates are in lexicographic order, so strict > keeps the smallest pair on ties
      if (!best || c.result.p_value > best->result.p_value) best = &c;
    }
    if (failed == cands.size()) {
      report.stopped_on_errors = true;
      break;
    }
    if (!(best->result.p_value > p_min)) break;

    report.trace.push_back({iteration, clusters[best->a], clusters[best->b], best->result.p_value});
    clusters[best->a] = best->members;
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best->b));
  }

  report.partition = Partition(std::move(clusters), N);
  report.pvalue_cache = eval.cache();
  return report;
}

Partition replay(const std::vector<MergeStep>& trace, Index universe) {
  std::vector<Members> clusters = Partition::singletons(universe).clubs();
  for (const auto& step : trace) {
    auto a = std::find(clusters.begin(), clusters.end(), step.first);
    auto b = std::find(clusters.begin(), clusters.end(), step.second);
    if (a == clusters.end() || b == clusters.end() || a == b)
      throw Error(Errc::InvalidPartition, "merge step " + std::to_string(step.iteration) + " does not match clusters");
    *a = merge(*a, *b);
    clusters.erase(b);
  }
  return Partition(std::move(clusters), universe);
}

}  // namespace clubkit
