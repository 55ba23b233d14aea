#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace clubkit {

using Index = std::size_t;
using Members = std::vector<Index>;  // sorted, unique region indices

/// N regions observed over T periods, one row per region.
class Panel {
 public:
  Panel(std::vector<std::string> ids, Eigen::MatrixXd values);

  Index regions() const noexcept { return static_cast<Index>(values_.rows()); }
  Index periods() const noexcept { return static_cast<Index>(values_.cols()); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  auto row(Index i) const { return values_.row(static_cast<Eigen::Index>(i)); }

  /// Position of `id`, throws UnknownId.
  Index index_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd values_;
};

struct PairDiff {
  Index i = 0;
  Index j = 0;
  Eigen::VectorXd series;  // y_i,t - y_j,t
};

PairDiff pair_diff(const Panel& panel, Index i, Index j);

/// All unordered pairs (a,b), a < b, of `members` in lexicographic order.
std::vector<PairDiff> all_pair_diffs(const Members& members, const Panel& panel);

/// Differences of successive sorted members (m0-m1, m1-m2, ...). They span the
/// same space as all_pair_diffs and form a basis of it.
std::vector<PairDiff> consecutive_pair_diffs(const Members& members, const Panel& panel);

/// Stack difference series as rows of an m x T matrix.
Eigen::MatrixXd stack(std::span<const PairDiff> diffs);

/// Disjoint cover of {0..N-1}. Clubs are kept sorted internally and ordered by
/// their smallest member, so two partitions with the same blocks compare equal.
class Partition {
 public:
  Partition() = default;
  Partition(std::vector<Members> clubs, Index universe);

  static Partition singletons(Index universe);

  const std::vector<Members>& clubs() const noexcept { return clubs_; }
  Index universe() const noexcept { return universe_; }
  Index club_count() const noexcept { return clubs_.size(); }

  /// club id of each region
  std::vector<Index> labels() const;

  /// Clubs ordered largest first, ties by smallest member.
  std::vector<Members> by_size() const;

  bool operator==(const Partition&) const = default;

 private:
  std::vector<Members> clubs_;
  Index universe_ = 0;
};

Members merge(const Members& a, const Members& b);

enum class Variant { ZeroMean, Level };
enum class Method { Asymptotic, Bootstrap };

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::Asymptotic;
  Variant variant = Variant::Level;
  int dim = 1;        // dimension of the reference distribution
  int series = 1;     // number of pair-difference series underlying the test
  bool singular = false;  // LRV not invertible; p mapped to 1

  bool operator==(const StatResult&) const = default;
};

}  // namespace clubkit
