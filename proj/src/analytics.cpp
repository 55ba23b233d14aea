#include "clubkit/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "clubkit/errors.hpp"

namespace clubkit {

SizeDistribution size_distribution(const Partition& partition) {
  SizeDistribution out;
  for (const auto& club : partition.clubs()) ++out.counts[club.size()];
  out.total = partition.club_count();
  return out;
}

double cluster_correlation(const Partition& a, const Partition& b) {
  if (a.universe() != b.universe())
    throw Error(Errc::DimensionMismatch, "partitions over " + std::to_string(a.universe()) + " and " +
                                             std::to_string(b.universe()) + " regions");
  // Counting over ordered pairs: sum_{i != j} m_ij = sum_c |c|(|c|-1).
  auto co_pairs = [](const Partition& p) {
    double s = 0.0;
    for (const auto& c : p.clubs()) s += static_cast<double>(c.size()) * static_cast<double>(c.size() - 1);
    return s;
  };
  const double sa = co_pairs(a), sb = co_pairs(b);
  if (sa == 0.0 || sb == 0.0) return 0.0;
  const auto la = a.labels(), lb = b.labels();
  double both = 0.0;
  for (const auto& c : a.clubs())
    for (std::size_t x = 0; x < c.size(); ++x)
      for (std::size_t y = x + 1; y < c.size(); ++y)
        if (lb[c[x]] == lb[c[y]]) both += 2.0;
  return std::sqrt(both / (std::sqrt(sa) * std::sqrt(sb)));
}

IncomeStats income_stats(const Partition& partition, const Panel& panel) {
  if (partition.universe() != panel.regions())
    throw Error(Errc::DimensionMismatch, "partition and panel sizes differ");
  std::vector<double> means;
  means.reserve(partition.club_count());
  for (const auto& club : partition.clubs()) {
    double s = 0.0;
    for (Index r : club) s += panel.row(r).mean();
    means.push_back(s / static_cast<double>(club.size()));
  }
  IncomeStats out;
  out.min = *std::min_element(means.begin(), means.end());
  out.max = *std::max_element(means.begin(), means.end());
  if (means.size() > 1) {
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(means.size());
    double ss = 0.0;
    for (double m : means) ss += (m - mu) * (m - mu);
    out.sd = std::sqrt(ss / static_cast<double>(means.size() - 1));
  }
  return out;
}

}  // namespace clubkit
