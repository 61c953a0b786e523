#include "neuradp/replay.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "neuradp/verify.hpp"

namespace neuradp {
namespace {

TEST(SumTree, TotalsAndSearch) {
  SumTree t(5);
  const double w[5] = {1.0, 0.0, 2.0, 0.5, 1.5};
  for (std::size_t i = 0; i < 5; ++i) t.set(i, w[i]);
  EXPECT_DOUBLE_EQ(t.total(), 5.0);
  EXPECT_EQ(t.find(0.0), 0u);
  EXPECT_EQ(t.find(0.999), 0u);
  EXPECT_EQ(t.find(1.0), 2u);
  EXPECT_EQ(t.find(3.2), 3u);
  EXPECT_EQ(t.find(4.9), 4u);
}

TEST(Replay, PushIntoEmpty) {
  ReplayMemory<int> m;
  m.push(5);
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.at(0), 5);
}

TEST(Replay, RingEvictsOldest) {
  ReplayConfig cfg;
  cfg.capacity = 3;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 4; ++k) m.push(k);
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at(0), 3);
  EXPECT_EQ(m.pushes() - m.evictions(), m.size());
  for (int k = 4; k < 20; ++k) m.push(k);
  EXPECT_EQ(m.pushes() - m.evictions(), m.size());
}

TEST(Replay, NewEntryGetsMaxPriority) {
  ReplayConfig cfg;
  cfg.capacity = 8;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 3; ++k) m.push(k);
  m.update_priorities({m.index_of(1)}, {4.0});
  const double top = m.max_priority();
  EXPECT_DOUBLE_EQ(top, 4.0 + cfg.epsilon);
  m.push(3);
  EXPECT_EQ(m.priority(3), top);
}

TEST(Replay, EqualPrioritiesAreUniformWithUnitWeights) {
  ReplayConfig cfg;
  cfg.capacity = 4;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 4; ++k) m.push(k);
  for (std::size_t s = 0; s < 4; ++s) EXPECT_DOUBLE_EQ(m.probability(s), 0.25);
  const auto smp = m.sample(4, 3);
  for (double w : smp.weights) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(Replay, BetaZeroGivesUnitWeights) {
  ReplayConfig cfg;
  cfg.capacity = 4;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 4; ++k) m.push(k);
  m.update_priorities({m.index_of(0), m.index_of(2)}, {5.0, 0.1});
  Rng rng(1);
  const auto smp = m.sample(4, rng, 0.0);
  for (double w : smp.weights) EXPECT_EQ(w, 1.0);
}

TEST(Replay, ImportanceWeightsFollowDefinition) {
  ReplayConfig cfg;
  cfg.capacity = 3;
  cfg.alpha = 1.0;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 3; ++k) m.push(k);
  m.update_priorities({m.index_of(0), m.index_of(1), m.index_of(2)}, {1.0, 2.0, 3.0});
  Rng rng(2);
  const double beta = 0.5;
  const auto smp = m.sample(3, rng, beta);
  // The largest weight belongs to the least likely entry drawn.
  double wmax = 0.0;
  for (const auto& ix : smp.indices) wmax = std::max(wmax, std::pow(3.0 * m.probability(ix.slot), -beta));
  for (std::size_t k = 0; k < smp.indices.size(); ++k) {
    EXPECT_NEAR(smp.weights[k], std::pow(3.0 * m.probability(smp.indices[k].slot), -beta) / wmax, 1e-12);
  }
}

TEST(Replay, TooFewEntriesIsAnError) {
  ReplayMemory<int> m;
  m.push(1);
  EXPECT_THROW(m.sample(2, 1), ContractError);
  EXPECT_THROW(m.sample(0, 1), ContractError);
}

TEST(Replay, ZeroTdGivesEpsilonPriority) {
  ReplayMemory<int> m;
  m.push(1);
  m.update_priorities({m.index_of(0)}, {0.0});
  EXPECT_EQ(m.priority(0), m.config().epsilon);
}

TEST(Replay, ProbabilityRisesIffPriorityRises) {
  ReplayConfig cfg;
  cfg.capacity = 4;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 4; ++k) m.push(k);
  m.update_priorities({m.index_of(0), m.index_of(1), m.index_of(2), m.index_of(3)}, {1.0, 1.0, 1.0, 1.0});
  const double before = m.probability(2);
  m.update_priorities({m.index_of(2)}, {2.0});
  EXPECT_GT(m.probability(2), before);
  const double mid = m.probability(2);
  m.update_priorities({m.index_of(2)}, {0.5});
  EXPECT_LT(m.probability(2), mid);
  double sum = 0.0;
  for (std::size_t s = 0; s < 4; ++s) sum += m.probability(s);
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Replay, StaleIndicesAreSkippedAndCounted) {
  ReplayConfig cfg;
  cfg.capacity = 2;
  ReplayMemory<int> m(cfg);
  m.push(0);
  m.push(1);
  const auto old = m.index_of(0);
  m.push(2);  // evicts slot 0
  const double p = m.priority(0);
  m.update_priorities({old}, {9.0});
  EXPECT_EQ(m.stale_updates(), 1u);
  EXPECT_EQ(m.priority(0), p);
}

TEST(Replay, RatioOneToThree) {
  const auto r = verify::replay_suite(100000, 15);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Replay, ChiSquareAgainstPriorityPowers) {
  ReplayConfig cfg;
  cfg.capacity = 5;
  cfg.alpha = 0.6;
  cfg.epsilon = 1e-12;
  ReplayMemory<int> m(cfg);
  std::vector<ReplayIndex> ix;
  for (int k = 0; k < 5; ++k) {
    m.push(k);
    ix.push_back(m.index_of(static_cast<std::size_t>(k)));
  }
  m.update_priorities(ix, {1.0, 2.0, 3.0, 4.0, 5.0});
  std::vector<double> expected(5);
  double z = 0.0;
  for (int k = 0; k < 5; ++k) z += expected[k] = std::pow(k + 1.0, 0.6);
  const int draws = 100000;
  std::vector<int> counts(5, 0);
  Rng rng(44);
  for (int d = 0; d < draws / 5; ++d) {
    const auto s = m.sample(5, rng);
    for (const int* p : s.items) ++counts[*p];
  }
  double chi2 = 0.0;
  for (int k = 0; k < 5; ++k) {
    const double e = draws * expected[k] / z;
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  // Upper 0.1% point of chi-square with 4 degrees of freedom.
  EXPECT_LT(chi2, 18.467);
}

TEST(Replay, SamplingIsDeterministicGivenSeed) {
  ReplayConfig cfg;
  cfg.capacity = 16;
  ReplayMemory<int> m(cfg);
  for (int k = 0; k < 16; ++k) m.push(k);
  const auto a = m.sample(8, 9);
  const auto b = m.sample(8, 9);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(a.indices[k].slot, b.indices[k].slot);
}

}  // namespace
}  // namespace neuradp
