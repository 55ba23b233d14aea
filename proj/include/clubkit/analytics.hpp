#pragma once

#include <map>

#include "clubkit/panel.hpp"

namespace clubkit {

/// Club counts by cardinality; singletons count as clubs of size one.
struct SizeDistribution {
  std::map<Index, Index> counts;
  Index total = 0;
  Index max_size() const { return counts.empty() ? 0 : counts.rbegin()->first; }
};

SizeDistribution size_distribution(const Partition& partition);

/// Co-membership similarity of two partitions,
///   zeta = ( sum m^A_ij m^B_ij / sqrt(sum m^A_ij) sqrt(sum m^B_ij) )^(1/2)
/// over ordered pairs i != j. Zero when either partition is all singletons.
double cluster_correlation(const Partition& a, const Partition& b);

/// Spread of club mean levels: each club's mean over members and periods,
/// then the sample standard deviation, minimum and maximum across clubs.
struct IncomeStats {
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

IncomeStats income_stats(const Partition& partition, const Panel& panel);

}  // namespace clubkit
