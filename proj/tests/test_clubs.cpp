#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "clubkit/clubs.hpp"
#include "clubkit/errors.hpp"
#include "support.hpp"

using namespace clubkit;
using namespace clubkit::testing;

namespace {

SearchConfig asymptotic(double p_min = 0.01) {
  SearchConfig cfg;
  cfg.p_min = p_min;
  return cfg;
}

Eigen::MatrixXd independent_walks(int N, int T, Engine& rng) {
  Eigen::MatrixXd y(N, T);
  for (int i = 0; i < N; ++i) y.row(i) = random_walk(T, rng).transpose();
  return y;
}

// Regions 0..2 are copies of one stationary series, region 3 is an
// independent random walk.
Eigen::MatrixXd walkthrough_panel(int T, Engine& rng) {
  const Eigen::VectorXd base = ar1(T, 0.5, rng);
  Eigen::MatrixXd y(4, T);
  for (int i = 0; i < 3; ++i) y.row(i) = base.transpose();
  y.row(3) = random_walk(T, rng).transpose();
  return y;
}

}  // namespace

TEST(CandidatePvalue, IdenticalRowsMapToOne) {
  Engine rng = make_engine(1);
  Eigen::MatrixXd y(2, 40);
  y.row(0) = random_walk(40, rng).transpose();
  y.row(1) = y.row(0);
  const auto r = candidate_pvalue({0}, {1}, make_panel(y), asymptotic(), &shared_tables());
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_TRUE(r.singular);
}

TEST(CandidatePvalue, IndependentWalksRejected) {
  int small = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Engine rng = make_engine(derive_seed(51, "cand-rw", {s}));
    const Panel p = make_panel(independent_walks(2, 100, rng));
    if (candidate_pvalue({0}, {1}, p, asymptotic(), &shared_tables()).p_value < 0.05) ++small;
  }
  EXPECT_GE(small, 160);
}

TEST(CandidatePvalue, SeriesCountIsBinomialAndDimIsBasis) {
  Engine rng = make_engine(2);
  const Panel p = make_panel(independent_walks(6, 60, rng));
  const auto r = candidate_pvalue({0, 2}, {3, 4, 5}, p, asymptotic(), &shared_tables());
  EXPECT_EQ(r.series, 10);
  EXPECT_EQ(r.dim, 4);
  EXPECT_GE(r.statistic, 0.0);
}

TEST(CandidatePvalue, BasisMatchesAllPairsPseudoInverse) {
  Engine rng = make_engine(3);
  const Panel p = make_panel(independent_walks(5, 60, rng));
  const Members m{0, 1, 2, 3, 4};
  const auto r = candidate_pvalue({0, 1}, {2, 3, 4}, p, asymptotic(), &shared_tables());
  const auto pinv = kpss_stat_pinv(stack(all_pair_diffs(m, p)), Variant::Level, 2);
  EXPECT_EQ(pinv.rank, r.dim);
  EXPECT_NEAR(pinv.statistic, r.statistic, 1e-8 * r.statistic);
}

TEST(CandidatePvalue, RejectsOverlapAndEmpty) {
  Engine rng = make_engine(4);
  const Panel p = make_panel(independent_walks(3, 30, rng));
  EXPECT_THROW(candidate_pvalue({0, 1}, {1, 2}, p, asymptotic(), &shared_tables()), Error);
  EXPECT_THROW(candidate_pvalue({}, {1}, p, asymptotic(), &shared_tables()), Error);
}

TEST(CandidatePvalue, PerfectAndRelativeDifferOnlyInVariant) {
  Engine rng = make_engine(5);
  const Panel p = make_panel(independent_walks(3, 50, rng));
  SearchConfig perfect = asymptotic();
  perfect.kind = Convergence::Perfect;
  const auto a = candidate_pvalue({0}, {1, 2}, p, perfect, &shared_tables());
  const auto b = candidate_pvalue({0}, {1, 2}, p, asymptotic(), &shared_tables());
  EXPECT_EQ(a.variant, Variant::ZeroMean);
  EXPECT_EQ(b.variant, Variant::Level);
  const Eigen::MatrixXd s = stack(consecutive_pair_diffs({0, 1, 2}, p));
  EXPECT_DOUBLE_EQ(a.statistic, kpss_stat(s, Variant::ZeroMean, 2));
  EXPECT_DOUBLE_EQ(b.statistic, kpss_stat(s, Variant::Level, 2));
}

TEST(FindClubs, TwoIdenticalRowsFormOneClub) {
  Eigen::MatrixXd y(2, 20);
  y.row(0) = Eigen::RowVectorXd::LinSpaced(20, 0.0, 3.0);
  y.row(1) = y.row(0);
  const auto r = find_clubs(make_panel(y), asymptotic(), &shared_tables());
  EXPECT_EQ(r.partition, Partition({{0, 1}}, 2));
  ASSERT_EQ(r.trace.size(), 1u);
  EXPECT_EQ(r.trace[0].p_value, 1.0);
}

TEST(FindClubs, RecoversWalkthroughStructure) {
  int hit = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Engine rng = make_engine(derive_seed(52, "walkthrough", {s}));
    const auto r = find_clubs(make_panel(walkthrough_panel(200, rng)), asymptotic(), &shared_tables());
    if (r.partition == Partition({{0, 1, 2}, {3}}, 4)) ++hit;
  }
  EXPECT_GE(hit, 45);
}

TEST(FindClubs, IndependentWalksMostlySingletons) {
  std::map<Index, int> counts;
  for (std::uint64_t s = 0; s < 40; ++s) {
    Engine rng = make_engine(derive_seed(53, "rw-singletons", {s}));
    ++counts[find_clubs(make_panel(independent_walks(5, 100, rng)), asymptotic(), &shared_tables())
                 .partition.club_count()];
  }
  const auto mode = std::max_element(counts.begin(), counts.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(mode->first, 5u);
}

TEST(FindClubs, TiesGoToSmallestPair) {
  Eigen::MatrixXd y(4, 20);
  y.row(0) = Eigen::RowVectorXd::LinSpaced(20, 0.0, 1.0);
  y.row(1) = y.row(0);
  y.row(2) = Eigen::RowVectorXd::LinSpaced(20, 5.0, -3.0);
  y.row(3) = y.row(2);
  const auto r = find_clubs(make_panel(y), asymptotic(0.5), &shared_tables());
  ASSERT_FALSE(r.trace.empty());
  EXPECT_EQ(r.trace[0].first, (Members{0}));
  EXPECT_EQ(r.trace[0].second, (Members{1}));
}

TEST(FindClubs, TraceReplaysAndExceedsThreshold) {
  Engine rng = make_engine(6);
  const auto r = find_clubs(make_panel(independent_walks(6, 40, rng)), asymptotic(0.05), &shared_tables());
  EXPECT_EQ(replay(r.trace, 6), r.partition);
  for (const auto& s : r.trace) EXPECT_GT(s.p_value, 0.05);
  for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_EQ(r.trace[k].iteration, static_cast<int>(k) + 1);
}

TEST(FindClubs, SharedEvaluatorMatchesFreshSearch) {
  Engine rng = make_engine(7);
  const Panel p = make_panel(independent_walks(6, 40, rng));
  CandidateEvaluator eval(p, asymptotic(), &shared_tables());
  for (double pm : {0.2, 0.05, 0.01}) {
    const auto shared = find_clubs(eval, pm);
    const auto fresh = find_clubs(p, asymptotic(pm), &shared_tables());
    EXPECT_EQ(shared.partition, fresh.partition);
    EXPECT_EQ(shared.trace, fresh.trace);
  }
}

TEST(FindClubs, BootstrapIsDeterministic) {
  Engine rng = make_engine(8);
  const Panel p = make_panel(walkthrough_panel(50, rng));
  SearchConfig cfg = asymptotic(0.05);
  cfg.method = Method::Bootstrap;
  cfg.bootstrap.R = 99;
  cfg.bootstrap.seed = 3;
  const auto a = find_clubs(p, cfg, nullptr), b = find_clubs(p, cfg, nullptr);
  EXPECT_EQ(a, b);
  for (const auto& [m, r] : a.pvalue_cache) {
    EXPECT_EQ(r.method, Method::Bootstrap);
    if (!r.singular) EXPECT_GE(r.p_value, 0.01);
  }
}

TEST(FindClubs, PermutationEquivariant) {
  Engine rng = make_engine(9);
  const Eigen::MatrixXd y = walkthrough_panel(120, rng);
  const std::vector<Index> perm{3, 1, 0, 2};
  Eigen::MatrixXd yp(4, y.cols());
  for (Index k = 0; k < 4; ++k) yp.row(static_cast<Eigen::Index>(k)) = y.row(static_cast<Eigen::Index>(perm[k]));
  const auto a = find_clubs(make_panel(y), asymptotic(), &shared_tables()).partition;
  const auto b = find_clubs(make_panel(yp), asymptotic(), &shared_tables()).partition;
  std::vector<Members> mapped;
  for (const auto& c : b.clubs()) {
    Members m;
    for (Index k : c) m.push_back(perm[k]);
    mapped.push_back(m);
  }
  EXPECT_EQ(Partition(mapped, 4), a);
}

TEST(FindClubs, ConfigErrors) {
  Engine rng = make_engine(10);
  const Panel p = make_panel(independent_walks(3, 30, rng));
  EXPECT_THROW(find_clubs(p, asymptotic(0.0), &shared_tables()), Error);
  EXPECT_THROW(find_clubs(p, asymptotic(1.0), &shared_tables()), Error);
  EXPECT_THROW(find_clubs(p, asymptotic(), nullptr), Error);
  SearchConfig b = asymptotic();
  b.method = Method::Bootstrap;
  b.bootstrap.R = 10;
  EXPECT_THROW(find_clubs(p, b, nullptr), Error);
  const Panel one = make_panel(Eigen::MatrixXd::Random(1, 30));
  EXPECT_THROW(find_clubs(one, asymptotic(), &shared_tables()), Error);
}

TEST(FindClubs, FailedCandidatesNamedOrSkipped) {
  // Too short for the AR order search, so every bootstrap fit fails.
  Engine rng = make_engine(11);
  const Panel p = make_panel(independent_walks(3, 12, rng));
  SearchConfig cfg = asymptotic();
  cfg.method = Method::Bootstrap;
  cfg.bootstrap.R = 99;
  try {
    find_clubs(p, cfg, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SeriesTooShort);
    EXPECT_NE(std::string(e.what()).find("candidate {0} + {1}"), std::string::npos);
  }
  cfg.skip_failed_candidates = true;
  const auto r = find_clubs(p, cfg, nullptr);
  EXPECT_TRUE(r.stopped_on_errors);
  EXPECT_EQ(r.failures.size(), 3u);
  EXPECT_EQ(r.partition, Partition::singletons(3));
}

TEST(FindClubs, BootstrapNoMoreClubsOnPersistentDifferences) {
  int fewer = 0;
  constexpr int panels = 200;
  for (std::uint64_t s = 0; s < panels; ++s) {
    Engine rng = make_engine(derive_seed(54, "persistent", {s}));
    const Eigen::VectorXd trend = random_walk(50, rng);
    Eigen::MatrixXd y(8, 50);
    for (int i = 0; i < 8; ++i) y.row(i) = (trend + ar1(50, 0.8, rng)).transpose();
    const Panel p = make_panel(y);
    SearchConfig cfg = asymptotic();
    const auto asy = find_clubs(p, cfg, &shared_tables()).partition.club_count();
    cfg.method = Method::Bootstrap;
    cfg.bootstrap.seed = s;
    if (find_clubs(p, cfg, nullptr).partition.club_count() <= asy) ++fewer;
  }
  EXPECT_GE(fewer, 0.7 * panels);
}
