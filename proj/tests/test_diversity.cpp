#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "divdrive/diversity.hpp"
#include "oracles.hpp"

using namespace divdrive;

namespace {

Trajectory offset_line(double dy, std::size_t n = 5) {
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({static_cast<double>(i), dy});
  return Trajectory(std::move(pts));
}

Trajectory random_trajectory(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 5.0);
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({g(rng), g(rng)});
  return Trajectory(std::move(pts));
}

// Policies succeed or fail per scenario; trajectories are horizontal lines at
// the given lateral offsets.
EvaluationTable offsets_table(const std::vector<std::vector<double>>& offsets,
                              const std::vector<std::vector<bool>>& success) {
  std::vector<std::string> scenarios, policies;
  for (std::size_t s = 0; s < offsets.size(); ++s) scenarios.push_back("s" + std::to_string(s));
  for (std::size_t p = 0; p < offsets.front().size(); ++p) policies.push_back("p" + std::to_string(p));
  EvaluationTable t(scenarios, policies);
  for (std::size_t s = 0; s < offsets.size(); ++s)
    for (std::size_t p = 0; p < offsets[s].size(); ++p)
      t.set(s, p, success[s][p] ? Outcome::kGoal : Outcome::kCollision, offset_line(offsets[s][p]));
  return t;
}

}  // namespace

TEST(PairwiseDiversity, MeanOverSharedSuccesses) {
  // Distances 2 and 4 in the two shared scenarios; the third is not shared.
  const auto t = offsets_table({{0, 2}, {0, 4}, {0, 100}}, {{true, true}, {true, true}, {true, false}});
  EXPECT_DOUBLE_EQ(pairwise_diversity(t, "p0", "p1"), 3.0);
  EXPECT_EQ(pairwise_diversity_detail(t, 0, 1).shared, 2u);
}

TEST(PairwiseDiversity, IdenticalTrajectoriesGiveZero) {
  const auto t = offsets_table({{1, 1}, {3, 3}}, {{true, true}, {true, true}});
  EXPECT_EQ(pairwise_diversity(t, "p0", "p1"), 0.0);
}

TEST(PairwiseDiversity, NoSharedScenarioIsAnError) {
  const auto t = offsets_table({{0, 2}, {0, 4}}, {{true, false}, {false, true}});
  try {
    (void)pairwise_diversity(t, "p0", "p1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoSharedScenario);
  }
  EXPECT_THROW((void)pairwise_diversity(t, "p0", "p0"), Error);
}

TEST(PairwiseDiversity, MatchesRecomputationOnRandomTrajectories) {
  std::mt19937_64 rng(5);
  EvaluationTable t({"a", "b", "c"}, {"x", "y"});
  std::vector<std::vector<Vec2>> raw[2];
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t p = 0; p < 2; ++p) {
      const Trajectory tr = random_trajectory(rng, 10 + 3 * s + p);
      raw[p].emplace_back(tr.points().begin(), tr.points().end());
      t.set(s, p, Outcome::kGoal, tr);
    }
  double expected = 0.0;
  for (std::size_t s = 0; s < 3; ++s) expected += oracle::trajectory_distance(raw[0][s], raw[1][s]);
  EXPECT_NEAR(pairwise_diversity(t, "x", "y"), expected / 3.0, 1e-12);
}

TEST(InterPolicyDiversity, TwoPoliciesEqualPairwise) {
  const auto t = offsets_table({{0, 2}, {0, 5}}, {{true, true}, {true, true}});
  const std::vector<std::string> set{"p0", "p1"};
  EXPECT_DOUBLE_EQ(inter_policy_diversity(t, set), pairwise_diversity(t, "p0", "p1"));
}

TEST(InterPolicyDiversity, MeanOfUnorderedPairs) {
  // Offsets 0, 1, 3: pairwise distances 1, 3, 2.
  const auto t = offsets_table({{0, 1, 3}}, {{true, true, true}});
  const std::vector<std::string> set{"p0", "p1", "p2"};
  EXPECT_DOUBLE_EQ(inter_policy_diversity(t, set), 2.0);
}

TEST(InterPolicyDiversity, BruteForceDoubleSumAndPermutationInvariance) {
  std::mt19937_64 rng(8);
  const std::size_t S = 6, P = 4;
  std::vector<std::string> sids, pids;
  for (std::size_t s = 0; s < S; ++s) sids.push_back("s" + std::to_string(s));
  for (std::size_t p = 0; p < P; ++p) pids.push_back("p" + std::to_string(p));
  EvaluationTable t(sids, pids);
  std::vector<std::vector<std::vector<Vec2>>> raw(S);
  std::vector<std::vector<bool>> ok(S, std::vector<bool>(P));
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t p = 0; p < P; ++p) {
      const Trajectory tr = random_trajectory(rng, 8);
      raw[s].emplace_back(tr.points().begin(), tr.points().end());
      ok[s][p] = s == 0 || rng() % 4 != 0;
      t.set(s, p, ok[s][p] ? Outcome::kGoal : Outcome::kTimeout, tr);
    }
  double total = 0.0;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < P; ++q) {
      if (p == q) continue;
      double sum = 0.0;
      int n = 0;
      for (std::size_t s = 0; s < S; ++s)
        if (ok[s][p] && ok[s][q]) {
          sum += oracle::trajectory_distance(raw[s][p], raw[s][q]);
          ++n;
        }
      total += sum / n;
    }
  const double expected = total / (P * (P - 1));
  EXPECT_NEAR(inter_policy_diversity(t, pids), expected, 1e-12);
  std::vector<std::string> shuffled{"p2", "p0", "p3", "p1"};
  EXPECT_NEAR(inter_policy_diversity(t, shuffled), expected, 1e-12);
}

// A selection's order must not change the metric bits: PolicySelect and
// RandomSelect are compared with >=, and equal sets must tie exactly.
TEST(InterPolicyDiversity, MemberOrderGivesIdenticalBits) {
  std::mt19937_64 rng(13);
  std::vector<std::string> pids;
  for (int p = 0; p < 7; ++p) pids.push_back("p" + std::to_string(p));
  EvaluationTable t({"s0", "s1", "s2"}, pids);
  ReferenceSets refs;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t p = 0; p < pids.size(); ++p) t.set(s, p, Outcome::kGoal, random_trajectory(rng, 9));
    refs[t.scenarios()[s]] = {random_trajectory(rng, 9), random_trajectory(rng, 9)};
  }
  const DistanceMatrix m = build_distance_matrix(t, pids);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6};
  std::vector<std::string> ids = pids;
  const double ip = inter_policy_diversity(m, idx), ip_table = inter_policy_diversity(t, ids);
  const double od = overall_diversity(t, ids, refs);
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::shuffle(ids.begin(), ids.end(), rng);
    EXPECT_EQ(inter_policy_diversity(m, idx), ip);
    EXPECT_EQ(inter_policy_diversity(t, ids), ip_table);
    EXPECT_EQ(overall_diversity(t, ids, refs), od);
  }
}

TEST(InterPolicyDiversity, ScalesWithCoordinates) {
  std::mt19937_64 rng(21);
  EvaluationTable a({"s"}, {"x", "y", "z"}), b({"s"}, {"x", "y", "z"});
  for (std::size_t p = 0; p < 3; ++p) {
    const Trajectory tr = random_trajectory(rng, 6);
    std::vector<Vec2> scaled;
    for (const Vec2& v : tr.points()) scaled.push_back(2.5 * v);
    a.set(0, p, Outcome::kGoal, tr);
    b.set(0, p, Outcome::kGoal, Trajectory(scaled));
  }
  const std::vector<std::string> ids{"x", "y", "z"};
  EXPECT_NEAR(inter_policy_diversity(b, ids), 2.5 * inter_policy_diversity(a, ids), 1e-9);
}

TEST(DistanceMatrix, SymmetricWithSharedCounts) {
  const auto t = offsets_table({{0, 2, 5}, {0, 4, 1}}, {{true, true, false}, {true, true, true}});
  const std::vector<std::string> ids{"p0", "p1", "p2"};
  const DistanceMatrix m = build_distance_matrix(t, ids);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m(i, i), 0.0);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m(j, i));
  }
  EXPECT_EQ(m.shared(0, 1), 2u);
  EXPECT_EQ(m.shared(0, 2), 1u);
  EXPECT_DOUBLE_EQ(m(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(m(1, 2), 3.0);
}

TEST(Wasserstein, IdentityAndSingletons) {
  std::mt19937_64 rng(2);
  std::vector<Trajectory> a;
  for (int i = 0; i < 4; ++i) a.push_back(random_trajectory(rng, 7));
  EXPECT_NEAR(wasserstein1(a, a), 0.0, 1e-12);
  const std::vector<Trajectory> x{a[0]}, y{a[1]};
  EXPECT_DOUBLE_EQ(wasserstein1(x, y), trajectory_distance(a[0], a[1]));
  EXPECT_THROW((void)wasserstein1(x, std::vector<Trajectory>{}), Error);
}

TEST(Wasserstein, TwoByThreeAgainstLp) {
  // Lines at lateral offsets give costs |di - dj|.
  const std::vector<Trajectory> a{offset_line(0), offset_line(3)};
  const std::vector<Trajectory> b{offset_line(1), offset_line(2), offset_line(7)};
  std::vector<std::vector<double>> cost(2, std::vector<double>(3));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) cost[i][j] = trajectory_distance(a[i], b[j]);
  const double lp = oracle::uniform_transport_lp(cost);
  EXPECT_NEAR(wasserstein1(a, b), lp, 1e-9 * lp);
  // 1D closed form: integral of |F_a - F_b|.
  EXPECT_NEAR(lp, 0.5 + 1.0 / 6 + 1.0 / 6 + 4.0 / 3, 1e-9);
}

TEST(Wasserstein, MetricAxiomsOnRandomSets) {
  std::mt19937_64 rng(99);
  auto draw = [&] {
    std::vector<Trajectory> s;
    const std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) s.push_back(random_trajectory(rng, 5));
    return s;
  };
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = draw(), b = draw(), c = draw();
    const double ab = wasserstein1(a, b), ba = wasserstein1(b, a);
    EXPECT_NEAR(ab, ba, 1e-9 * std::max(1.0, ab));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, wasserstein1(a, c) + wasserstein1(c, b) + 1e-9);
  }
}

TEST(OverallDiversity, AveragesOverScenarios) {
  // Three scenarios; each policy set is one line, references one line at a
  // known offset, so the per-scenario values are 1, 2, 3.
  EvaluationTable t({"a", "b", "c"}, {"p"});
  ReferenceSets refs;
  const double off[3] = {1.0, 2.0, 3.0};
  const char* ids[3] = {"a", "b", "c"};
  for (int s = 0; s < 3; ++s) {
    t.set(s, 0, Outcome::kGoal, offset_line(0));
    refs[ids[s]] = {offset_line(off[s])};
  }
  std::vector<double> per;
  const std::vector<std::string> set{"p"};
  EXPECT_DOUBLE_EQ(overall_diversity(t, set, refs, &per), 2.0);
  EXPECT_EQ(per, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(OverallDiversity, OwnTrajectoriesAsReferencesGiveZero) {
  std::mt19937_64 rng(4);
  EvaluationTable t({"a", "b"}, {"p", "q"});
  ReferenceSets refs;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t p = 0; p < 2; ++p) {
      const Trajectory tr = random_trajectory(rng, 9);
      t.set(s, p, Outcome::kGoal, tr);
      refs[t.scenarios()[s]].push_back(tr);
    }
  const std::vector<std::string> set{"p", "q"};
  EXPECT_NEAR(overall_diversity(t, set, refs), 0.0, 1e-12);
}

TEST(OverallDiversity, SingleScenarioEqualsWasserstein) {
  std::mt19937_64 rng(6);
  EvaluationTable t({"a"}, {"p", "q"});
  std::vector<Trajectory> mine, refs;
  for (std::size_t p = 0; p < 2; ++p) {
    mine.push_back(random_trajectory(rng, 6));
    t.set(0, p, Outcome::kGoal, mine.back());
  }
  for (int i = 0; i < 3; ++i) refs.push_back(random_trajectory(rng, 6));
  const std::vector<std::string> set{"p", "q"};
  EXPECT_DOUBLE_EQ(overall_diversity(t, set, {{"a", refs}}), wasserstein1(mine, refs));
}

TEST(OverallDiversity, ScenarioWithoutSuccessIsAnError) {
  EvaluationTable t({"a", "b"}, {"p"});
  t.set(0, 0, Outcome::kGoal, offset_line(0));
  t.set(1, 0, Outcome::kCollision, offset_line(0));
  const std::vector<std::string> set{"p"};
  try {
    (void)overall_diversity(t, set, {{"a", {offset_line(1)}}, {"b", {offset_line(1)}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySuccessSet);
  }
}
