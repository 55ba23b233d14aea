#include <gtest/gtest.h>

#include <cmath>

#include "clubkit/analytics.hpp"
#include "clubkit/errors.hpp"
#include "support.hpp"

using namespace clubkit;
using namespace clubkit::testing;

namespace {

// Co-membership matrices built entry by entry.
double naive_zeta(const Partition& a, const Partition& b) {
  const auto la = a.labels(), lb = b.labels();
  double num = 0, da = 0, db = 0;
  for (Index i = 0; i < la.size(); ++i)
    for (Index j = 0; j < la.size(); ++j) {
      if (i == j) continue;
      const double ma = la[i] == la[j], mb = lb[i] == lb[j];
      num += ma * mb;
      da += ma;
      db += mb;
    }
  if (da == 0 || db == 0) return 0.0;
  return std::sqrt(num / (std::sqrt(da) * std::sqrt(db)));
}

Partition random_partition(Index n, Engine& rng) {
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::vector<Members> clubs(n);
  for (Index i = 0; i < n; ++i) clubs[pick(rng)].push_back(i);
  std::erase_if(clubs, [](const Members& m) { return m.empty(); });
  return Partition(clubs, n);
}

}  // namespace

TEST(SizeDistribution, CountsAndTotals) {
  const auto d = size_distribution(Partition({{0, 1}, {2}}, 3));
  EXPECT_EQ(d.counts, (std::map<Index, Index>{{1, 1}, {2, 1}}));
  EXPECT_EQ(d.total, 2u);
  EXPECT_EQ(d.max_size(), 2u);
}

TEST(SizeDistribution, WeightedSumIsUniverse) {
  Engine rng = make_engine(1);
  for (int k = 0; k < 200; ++k) {
    const Partition p = random_partition(12, rng);
    const auto d = size_distribution(p);
    Index sum = 0, clubs = 0;
    for (auto [s, c] : d.counts) sum += s * c, clubs += c;
    EXPECT_EQ(sum, 12u);
    EXPECT_EQ(clubs, d.total);
  }
}

TEST(ClusterCorrelation, HandValues) {
  EXPECT_NEAR(cluster_correlation(Partition({{0, 1}, {2}}, 3), Partition({{0, 1, 2}}, 3)), 0.7598356856515925,
              1e-12);
  EXPECT_EQ(cluster_correlation(Partition({{0, 1}, {2, 3}}, 4), Partition({{0, 2}, {1, 3}}, 4)), 0.0);
  const Partition p({{0, 3}, {1, 2, 4}}, 5);
  EXPECT_DOUBLE_EQ(cluster_correlation(p, p), 1.0);
  EXPECT_EQ(cluster_correlation(Partition::singletons(4), Partition({{0, 1, 2, 3}}, 4)), 0.0);
  EXPECT_THROW(cluster_correlation(Partition::singletons(3), Partition::singletons(4)), Error);
}

TEST(ClusterCorrelation, MatchesMatrixOracleSymmetricAndBounded) {
  Engine rng = make_engine(2);
  for (int k = 0; k < 1000; ++k) {
    const Partition a = random_partition(9, rng), b = random_partition(9, rng);
    const double z = cluster_correlation(a, b);
    EXPECT_NEAR(z, naive_zeta(a, b), 1e-12);
    EXPECT_EQ(z, cluster_correlation(b, a));
    EXPECT_GE(z, 0.0);
    EXPECT_LE(z, 1.0 + 1e-15);
  }
}

TEST(IncomeStats, ConstantSingleClub) {
  const Panel p = make_panel(Eigen::MatrixXd::Constant(3, 5, 2.5));
  const auto s = income_stats(Partition({{0, 1, 2}}, 3), p);
  EXPECT_EQ(s.sd, 0.0);
  EXPECT_EQ(s.min, 2.5);
  EXPECT_EQ(s.max, 2.5);
}

TEST(IncomeStats, TwoSingletons) {
  Eigen::MatrixXd v(2, 4);
  v.row(0).setConstant(1.0);
  v.row(1).setConstant(3.0);
  const auto s = income_stats(Partition::singletons(2), make_panel(v));
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(2.0));
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 3.0);
}

TEST(IncomeStats, ClubMeanOverMembersAndPeriods) {
  Eigen::MatrixXd v(3, 2);
  v << 1, 3, 5, 7, 10, 10;
  const auto s = income_stats(Partition({{0, 1}, {2}}, 3), make_panel(v));
  EXPECT_DOUBLE_EQ(s.min, 4.0);
  EXPECT_DOUBLE_EQ(s.max, 10.0);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(18.0));
}
