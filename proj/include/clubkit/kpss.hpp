#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clubkit/panel.hpp"

namespace clubkit {

inline constexpr int kDefaultBandwidth = 2;

struct LrvEstimate {
  Eigen::MatrixXd sigma2;
  int bandwidth = 0;
};

/// Bartlett-kernel Newey-West long-run covariance of an m x T residual panel
/// (rows are series). Residuals are used as given; no demeaning.
LrvEstimate newey_west(const Eigen::MatrixXd& residuals, int bandwidth);

/// Multivariate KPSS statistic T^-2 sum_t S_t' Sigma^-1 S_t on the rows of
/// `series`. Level demeans each row first; ZeroMean uses the raw rows.
/// Throws SingularLrv when Sigma is not positive definite (rcond < 1e-12).
double kpss_stat(const Eigen::MatrixXd& series, Variant variant, int bandwidth);
double kpss_stat(std::span<const PairDiff> diffs, Variant variant, int bandwidth);

struct RankRevealingKpss {
  double statistic = 0.0;
  int rank = 0;
};

/// Same quadratic form with the Moore-Penrose inverse of Sigma, for panels
/// whose rows are linearly dependent (e.g. all pairwise differences of a set).
/// Eigenvalues below `rel_tol` times the largest are treated as zero.
RankRevealingKpss kpss_stat_pinv(const Eigen::MatrixXd& series, Variant variant, int bandwidth,
                                 double rel_tol = 1e-9);

/// True when the series is zero (ZeroMean) or constant up to rounding (Level),
/// i.e. it would make the long-run covariance singular on its own.
bool is_degenerate(const Eigen::VectorXd& series, Variant variant);

/// Centre each row when `variant` is Level.
Eigen::MatrixXd apply_variant(const Eigen::MatrixXd& series, Variant variant);

struct LimitTableMeta {
  Variant variant = Variant::Level;
  int dim = 1;
  int grid_T = 2000;
  int reps = 50000;
  std::uint64_t seed = 0;

  bool operator==(const LimitTableMeta&) const = default;
};

/// Sorted simulated draws from the limiting null distribution of the
/// m-dimensional statistic.
struct LimitTable {
  LimitTableMeta meta;
  std::vector<double> draws;

  double quantile(double prob) const;
  bool operator==(const LimitTable&) const = default;
};

inline constexpr int kMinGridT = 1000;
inline constexpr int kMinLimitReps = 10000;

/// One draw uses m independent N(0,1) series of length grid_T (partial sums
/// are discretised Wiener processes; Level demeaning gives Brownian bridges)
/// and the statistic with L = 0. Draw r uses substream (seed, variant, dim, r).
LimitTable simulate_limit_table(const LimitTableMeta& meta);

/// Right-tail proportion of table draws >= stat.
double asymptotic_pvalue(double stat, const LimitTable& table);
/// Same, checking the table was built for `dim`.
double asymptotic_pvalue(double stat, const LimitTable& table, int dim);

/// Text format: one header line then one shortest-round-trip decimal per line.
void write_limit_table(std::ostream& out, const LimitTable& table);
LimitTable read_limit_table(std::istream& in);
std::string limit_table_header(const LimitTableMeta& meta);
/// Parses a header line; returns false if it is not a valid header.
bool parse_limit_table_header(const std::string& line, LimitTableMeta& meta);

/// Provider of limit tables keyed by (variant, dim); implementations must be
/// safe to call from several threads.
class LimitTableSource {
 public:
  virtual ~LimitTableSource() = default;
  virtual const LimitTable& table(Variant variant, int dim) = 0;
};

/// Simulates on first use and keeps tables in memory.
class InMemoryLimitTables : public LimitTableSource {
 public:
  InMemoryLimitTables(int grid_T = 2000, int reps = 50000, std::uint64_t seed = 20240101);
  const LimitTable& table(Variant variant, int dim) override;

 protected:
  virtual LimitTable produce(const LimitTableMeta& meta);
  LimitTableMeta meta_for(Variant variant, int dim) const;

 private:
  int grid_T_;
  int reps_;
  std::uint64_t seed_;
  std::mutex mutex_;
  std::map<std::pair<int, int>, LimitTable> tables_;
};

namespace serial {
LimitTable simulate_limit_table(const LimitTableMeta& meta);
}

}  // namespace clubkit
