#pragma once

#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "clubkit/bootstrap.hpp"
#include "clubkit/kpss.hpp"
#include "clubkit/panel.hpp"

namespace clubkit {

/// Perfect convergence tests zero-mean stationarity of raw differences;
/// relative convergence tests level stationarity of demeaned differences.
enum class Convergence { Perfect, Relative };

constexpr Variant variant_of(Convergence kind) {
  return kind == Convergence::Perfect ? Variant::ZeroMean : Variant::Level;
}

struct SearchConfig {
  double p_min = 0.01;
  Convergence kind = Convergence::Relative;
  Method method = Method::Asymptotic;
  int bandwidth = kDefaultBandwidth;
  BootstrapConfig bootstrap;  // R, p_max and seed; variant and bandwidth follow the fields above
  bool skip_failed_candidates = false;
};

void validate(const SearchConfig& cfg);

struct MergeStep {
  int iteration = 0;
  Members first;
  Members second;
  double p_value = 0.0;

  bool operator==(const MergeStep&) const = default;
};

struct ClubReport {
  Partition partition;
  std::vector<MergeStep> trace;
  std::map<Members, StatResult> pvalue_cache;  // keyed by the union tested
  std::vector<std::string> failures;           // candidates skipped on error
  bool stopped_on_errors = false;

  bool operator==(const ClubReport&) const = default;
};

/// Tests candidate merges on one panel and caches everything that does not
/// depend on p_min: p-values per candidate union and ARMA fits per region pair.
/// Safe to call from several threads.
class CandidateEvaluator {
 public:
  CandidateEvaluator(const Panel& panel, const SearchConfig& cfg, LimitTableSource* tables);

  StatResult evaluate(const Members& members);
  StatResult evaluate(const Members& a, const Members& b) { return evaluate(merge(a, b)); }

  const Panel& panel() const { return panel_; }
  const SearchConfig& config() const { return cfg_; }
  std::map<Members, StatResult> cache() const;
  bool cached(const Members& members) const;

 private:
  StatResult compute(const Members& members);
  ArmaFit fit_for(Index a, Index b, const Eigen::VectorXd& series);

  const Panel& panel_;
  SearchConfig cfg_;
  LimitTableSource* tables_;
  mutable std::mutex mutex_;
  std::map<Members, StatResult> pvalues_;
  std::map<std::pair<Index, Index>, ArmaFit> fits_;
};

/// p-value for merging clusters a and b (uncached).
StatResult candidate_pvalue(const Members& a, const Members& b, const Panel& panel, const SearchConfig& cfg,
                            LimitTableSource* tables);

/// Bottom-up sequential clustering: merge the candidate pair with the largest
/// p-value while it exceeds p_min. Ties go to the lexicographically smallest
/// (min member of first, min member of second) pair.
ClubReport find_clubs(const Panel& panel, const SearchConfig& cfg, LimitTableSource* tables);
/// Same search reusing an evaluator's caches; uses `p_min` instead of the
/// evaluator's configured threshold.
ClubReport find_clubs(CandidateEvaluator& evaluator, double p_min);

/// Applies a merge trace to singletons over `universe` regions.
Partition replay(const std::vector<MergeStep>& trace, Index universe);

/// Stream identity of a member set for bootstrap substreams.
std::uint64_t members_key(const Members& members);

}  // namespace clubkit
