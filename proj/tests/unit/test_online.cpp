#include "ddtune/ddtune.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace ddtune;

namespace {

std::function<std::vector<double>(std::size_t)> table_rounds(const std::vector<std::vector<double>>& t) {
  return [&t](std::size_t r) { return t[r]; };
}

std::vector<std::vector<double>> random_table(std::uint64_t seed, std::size_t T, std::size_t G) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> t(T, std::vector<double>(G));
  for (auto& row : t)
    for (double& v : row) v = u(rng);
  return t;
}

/// Largest number of distinct rounds in any closed window of width eps,
/// trying every window that starts at a location.
std::size_t naive_window_count(const std::vector<std::vector<double>>& locs, double eps) {
  std::size_t best = 0;
  for (const auto& row : locs)
    for (double a : row) {
      std::size_t c = 0;
      for (const auto& r : locs)
        if (std::any_of(r.begin(), r.end(), [&](double x) { return x >= a && x - a <= eps; })) ++c;
      best = std::max(best, c);
    }
  return best;
}

}  // namespace

TEST(Hedge, FirstRoundIsUniform) {
  const auto t = random_table(1, 5, 7);
  const auto run = hedge_play(5, 7, table_rounds(t), true, 1.0, 2.0, 3);
  double m = 0.0;
  for (double v : t[0]) m += v / 7;
  EXPECT_NEAR(run.expected_score[0], m, 1e-15);
}

TEST(Hedge, ZeroRateStaysUniform) {
  const auto t = random_table(2, 30, 5);
  const auto run = hedge_play(30, 5, table_rounds(t), true, 1.0, 0.0, 3);
  for (std::size_t r = 0; r < 30; ++r) {
    double m = 0.0;
    for (double v : t[r]) m += v / 5;
    EXPECT_NEAR(run.expected_score[r], m, 1e-14);
  }
}

TEST(Hedge, ConstantScoresHaveZeroRegret) {
  std::vector<std::vector<double>> t(50, std::vector<double>(4, 0.3));
  const auto run = hedge_play(50, 4, table_rounds(t), true, 1.0, std::nullopt, 5);
  EXPECT_NEAR(run.regret(), 0.0, 1e-12);
  EXPECT_NEAR(run.expected_regret(), 0.0, 1e-12);
  EXPECT_NEAR(run.expected_score[49], 0.3, 1e-15);
}

TEST(Hedge, SingleActionGrid) {
  const auto t = random_table(3, 10, 1);
  const auto run = hedge_play(10, 1, table_rounds(t), true, 1.0, std::nullopt, 1);
  EXPECT_EQ(run.eta, 0.0);
  EXPECT_EQ(run.regret(), 0.0);
}

TEST(Hedge, ExpectedRegretWithinBound) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t T = 200, G = 2 + s;
    const auto t = random_table(100 + s, T, G);
    for (bool maximize : {true, false}) {
      const auto run = hedge_play(T, G, table_rounds(t), maximize, 1.0, std::nullopt, s);
      EXPECT_LE(run.expected_regret(), std::sqrt(T * std::log(static_cast<double>(G)) / 2.0) + 1e-9);
    }
  }
}

TEST(Hedge, AdversarialSwitchingBound) {
  // Best action alternates in blocks, the classic hard case for follow-the-leader.
  const std::size_t T = 400, G = 2;
  std::vector<std::vector<double>> t(T, std::vector<double>(G));
  for (std::size_t r = 0; r < T; ++r) t[r] = r == 0 ? std::vector<double>{0.5, 0.0}
                                          : r % 2 ? std::vector<double>{0.0, 1.0}
                                                  : std::vector<double>{1.0, 0.0};
  const auto run = hedge_play(T, G, table_rounds(t), true, 1.0, std::nullopt, 1);
  EXPECT_LE(run.expected_regret(), std::sqrt(T * std::log(2.0) / 2.0) + 1e-9);
}

TEST(Hedge, PrefersDominantAction) {
  std::vector<std::vector<double>> t(300, std::vector<double>{0.2, 0.9, 0.4});
  const auto run = hedge_play(300, 3, table_rounds(t), true, 1.0, std::nullopt, 2);
  EXPECT_EQ(run.best_index, 1u);
  EXPECT_EQ(run.choices.back(), 1u);
  EXPECT_GT(run.expected_score.back(), 0.89);
}

TEST(Hedge, ClipsAndRejects) {
  std::vector<std::vector<double>> t{{1.5, -0.5}, {0.5, 0.5}};
  const auto run = hedge_play(2, 2, table_rounds(t), true, 1.0, std::nullopt, 1);
  EXPECT_EQ(run.clip_events, 2u);
  EXPECT_EQ(run.scores[0], (std::vector<double>{1.0, 0.0}));
  std::vector<std::vector<double>> bad{{std::nan(""), 0.0}};
  EXPECT_THROW(hedge_play(1, 2, table_rounds(bad), true, 1.0, std::nullopt, 1), NumericalError);
  EXPECT_THROW(hedge_play(0, 2, table_rounds(t), true, 1.0, std::nullopt, 1), InvalidArgument);
  EXPECT_THROW(hedge_play(2, 2, table_rounds(t), true, 1.0, -1.0, 1), InvalidArgument);
  EXPECT_THROW(hedge_play(2, 2, [](std::size_t) { return std::vector<double>{0.1}; }, true, 1.0,
                          std::nullopt, 1),
               InvalidArgument);
}

TEST(Hedge, DeterministicGivenSeed) {
  const auto t = random_table(7, 40, 6);
  const auto a = hedge_play(40, 6, table_rounds(t), true, 1.0, std::nullopt, 9);
  const auto b = hedge_play(40, 6, table_rounds(t), true, 1.0, std::nullopt, 9);
  EXPECT_EQ(a.choices, b.choices);
  EXPECT_EQ(a.regret_trace, b.regret_trace);
}

TEST(Hedge, ClusteringStream) {
  TuneConfig cfg;
  cfg.task = Task::ClusteringM1;
  cfg.alpha = AxisGrid{0.5, 6.0, 8, true, false, false};
  cfg.threads = 1;
  const auto grid = make_grid(cfg, 1);
  auto stream = [](std::size_t t) -> AnyInstance {
    return gen_clustering(instance_seed(4, 1, t), 6, 1, 2, 1.0, ClusteringGenerator::UniformSmooth);
  };
  const auto run = hedge_run(stream, 60, cfg, grid, std::nullopt, 4);
  EXPECT_EQ(run.T, 60u);
  EXPECT_EQ(run.clip_events, 0u);
  EXPECT_LE(run.expected_regret(), std::sqrt(60 * std::log(8.0) / 2.0) + 1e-9);
  EXPECT_GE(run.cum_best.back(), run.cum_score.back() - run.regret() - 1e-12);
}

TEST(OnlineLogReg, Steps) {
  const auto [eps, r] = online_logreg_steps(16);
  EXPECT_EQ(eps, 0.5);
  EXPECT_EQ(r, 0.125);
  const auto g = lambda_grid(0.1, 1.1, 0.3);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_EQ(g.back(), 1.1);
  EXPECT_NEAR(g[3], 1.0, 1e-15);
  EXPECT_EQ(lambda_grid(0.1, 1.1, 0.5).size(), 3u);
  EXPECT_THROW(lambda_grid(0.1, 1.1, 0.0), InvalidArgument);
}

TEST(OnlineLogReg, RegretDecomposition) {
  // Replacing each round's losses by the surrogate moves cumulative losses by
  // at most the summed per-round gap, on both sides of the regret.
  auto stream = [](std::size_t t) { return gen_logreg(instance_seed(3, 1, t), 30, 3, 30, 2.0); };
  OnlineLogRegOptions opt;
  opt.threads = 1;
  const auto run = online_logreg_run(stream, 16, 3, opt);
  ASSERT_EQ(run.audit_rounds.size(), 16u);
  double gap_sum = 0.0;
  for (double g : run.audit_gap) gap_sum += g;
  EXPECT_LE(std::abs(run.audit_true_regret - run.audit_surrogate_regret), 2 * gap_sum + 1e-12);
  EXPECT_NEAR(run.audit_surrogate_regret, run.surrogate.regret(), 1e-12);
  for (const auto& row : run.audit_true)
    for (double v : row) EXPECT_GT(v, 0.0);
  EXPECT_THROW(online_logreg_run(stream, 8, 3, opt), InvalidArgument);
}

TEST(OnlineLogReg, AuditStride) {
  auto stream = [](std::size_t t) { return gen_logreg(t, 20, 2, 20, 2.0); };
  OnlineLogRegOptions opt;
  opt.audit_stride = 5;
  opt.threads = 1;
  const auto run = online_logreg_run(stream, 16, 1, opt);
  EXPECT_EQ(run.audit_rounds, (std::vector<std::size_t>{0, 5, 10, 15}));
  opt.audit_stride = 0;
  EXPECT_TRUE(online_logreg_run(stream, 16, 1, opt).audit_rounds.empty());
}

TEST(Discontinuities, ConstantHasNone) {
  EXPECT_TRUE(locate_discontinuities([](double) { return 0.7; }, 0.0, 1.0, 100).empty());
}

TEST(Discontinuities, SingleStep) {
  const auto j = locate_discontinuities([](double x) { return x < 0.5 ? 0.0 : 1.0; }, 0.0, 1.0, 100);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_NEAR(j[0], 0.5, 1e-8);
}

TEST(Discontinuities, RandomPlantings) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 1 + static_cast<int>(rng() % 6);
    std::vector<double> at, height;
    while (static_cast<int>(at.size()) < count) {
      const double x = 0.01 + 0.98 * u(rng);
      if (std::all_of(at.begin(), at.end(), [&](double y) { return std::abs(x - y) > 0.02; })) {
        at.push_back(x);
        height.push_back((u(rng) < 0.5 ? -1 : 1) * (0.01 + u(rng)));
      }
    }
    // A Lipschitz slope on top of the steps.
    auto f = [&](double x) {
      double v = 0.3 * x;
      for (std::size_t i = 0; i < at.size(); ++i)
        if (x >= at[i]) v += height[i];
      return v;
    };
    const auto found = locate_discontinuities(f, 0.0, 1.0, 200, 0.3);
    std::sort(at.begin(), at.end());
    ASSERT_EQ(found.size(), at.size()) << trial;
    for (std::size_t i = 0; i < at.size(); ++i) EXPECT_NEAR(found[i], at[i], 1e-8) << trial;
  }
}

TEST(Discontinuities, CraftedClusteringUtilityJumpsAtOne) {
  // Merge order of pairs (0,1) and (2,3) on {1,4,2,3,10,11} flips at alpha = 1.
  ClusteringInstance inst;
  Matrix d = Matrix::Zero(4, 4);
  const double vals[6] = {1, 4, 2, 3, 10, 11};
  int idx = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) d(i, j) = d(j, i) = vals[idx++];
  inst.distances = {d};
  inst.R = 11.0;
  const auto roots = enumerate_boundaries_m1(d, 0.1, 10);
  EXPECT_TRUE(std::any_of(roots.begin(), roots.end(), [](double r) { return std::abs(r - 1.0) < 1e-9; }));
  // Every located utility jump is one of the enumerated boundaries.
  for (const auto& target : std::vector<Partition>{{{0, 1}, {2, 3}}, {{0, 2}, {1, 3}}, {{0, 3}, {1, 2}}}) {
    inst.target = target;
    auto u = [&](double a) { return clustering_utility(inst, M1{a}, std::vector<double>{1.0}); };
    for (double x : locate_discontinuities(u, 0.1, 10.0, 400))
      EXPECT_TRUE(std::any_of(roots.begin(), roots.end(), [&](double r) { return std::abs(r - x) < 1e-7; }))
          << x;
  }
}

TEST(Dispersion, NoJumpsGivesZero) {
  const std::vector<std::vector<double>> none(10);
  const auto rep = estimate_dispersion(none, {0.1, 0.5});
  EXPECT_EQ(rep.max_count, (std::vector<std::size_t>{0, 0}));
  EXPECT_EQ(rep.ratio[0], 0.0);
}

TEST(Dispersion, FixedJumpCountsEveryRound) {
  const std::vector<std::vector<double>> fixed(25, std::vector<double>{0.4});
  const auto rep = estimate_dispersion(fixed, {1e-6, 0.1});
  EXPECT_EQ(rep.max_count, (std::vector<std::size_t>{25, 25}));
  EXPECT_NEAR(rep.ratio[1], 25 / (0.1 * 25), 1e-12);
}

TEST(Dispersion, MatchesNaiveCountAndIsMonotone) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> locs(1 + rng() % 20);
    for (auto& row : locs) {
      const int c = static_cast<int>(rng() % 4);
      for (int i = 0; i < c; ++i) row.push_back(u(rng));
    }
    std::size_t prev = 0;
    for (double eps : {0.001, 0.01, 0.05, 0.2, 1.0}) {
      const std::size_t c = max_window_count(locs, eps);
      EXPECT_EQ(c, naive_window_count(locs, eps)) << trial;
      EXPECT_GE(c, prev);
      prev = c;
    }
  }
  EXPECT_THROW(estimate_dispersion({}, {}), InvalidArgument);
  EXPECT_THROW(estimate_dispersion({}, {0.0}), InvalidArgument);
}

TEST(Dispersion, SmoothStreamIsDispersed) {
  auto stream = [](std::size_t t) {
    return gen_clustering(instance_seed(8, 1, t), 6, 1, 2, 1.0, ClusteringGenerator::UniformSmooth);
  };
  const auto locs = clustering_jump_stream(stream, 40, 0.5, 4.0, 200, 1);
  const auto rep = estimate_dispersion(locs, {0.01, 0.1, 1.0});
  EXPECT_LT(rep.max_count[0], 40u);
  EXPECT_LE(rep.max_count[0], rep.max_count[1]);
  EXPECT_LE(rep.max_count[1], rep.max_count[2]);
}
