#include "neuradp/valuefn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "neuradp/oracles.hpp"
#include "neuradp/verify.hpp"

namespace neuradp {
namespace {

struct Fixture {
  RoadNetwork net = build_network({0, 1, 2}, {{0, 1, 120}, {1, 0, 120}, {1, 2, 60}, {2, 1, 60}});
  LocationEmbedding emb = train_embeddings(net, 4, 50, 1).embedding;
  FeatureScales scales;
  ValueNetShape shape{4, 6, 5, 3};

  Fixture() { scales.delay_scale = 1.0; }

  VehicleState vehicle() const {
    VehicleState v;
    v.capacity = 4;
    v.node = v.heading = 0;
    return v;
  }
};

TEST(Features, IdleVehicleHasNoStops) {
  Fixture fx;
  const ScoringContext ctx{3, 7, 2};
  const auto f = featurize(fx.vehicle(), ctx, fx.emb, fx.net, fx.scales);
  EXPECT_EQ(f.num_stops, 0u);
  EXPECT_TRUE(f.stop_inputs.empty());
  EXPECT_EQ(f.batch_count, 7);
  EXPECT_EQ(f.nearby_count, 2);
}

TEST(Features, RemainingDelayIsDeadlineMinusArrival) {
  Fixture fx;
  VehicleState v = fx.vehicle();
  v.trajectory = {{1, StopKind::kPickup, 1, 300.0}};
  const auto f = featurize(v, {}, fx.emb, fx.net, fx.scales);
  ASSERT_EQ(f.num_stops, 1u);
  EXPECT_EQ(f.stop_inputs[fx.emb.dim], 180.0);
  EXPECT_EQ(f, featurize(v, {}, fx.emb, fx.net, fx.scales));
}

TEST(Features, MissingLocationThrows) {
  Fixture fx;
  VehicleState v = fx.vehicle();
  v.trajectory = {{1, StopKind::kPickup, 1, 300.0}};
  LocationEmbedding small = fx.emb;
  small.table.resize(static_cast<std::size_t>(small.dim));  // location 0 only
  EXPECT_THROW(featurize(v, {}, small, fx.net, fx.scales), std::out_of_range);
}

TEST(Features, NearbyCountsUseRadius) {
  Fixture fx;
  std::vector<VehicleState> vs(3, fx.vehicle());
  vs[1].node = vs[1].heading = 1;
  vs[2].node = vs[2].heading = 2;
  EXPECT_EQ(nearby_counts(vs, fx.net, 120.0), (std::vector<int>{1, 2, 1}));
}

TEST(Value, ZeroNetworkIsZero) {
  Rng rng(1);
  const ValueNetParams zero(ValueNetShape{4, 6, 5, 3});
  for (int k = 0; k < 20; ++k) EXPECT_EQ(value(zero, oracle::random_features(rng, 4, 5)), 0.0);
}

TEST(Value, ReproducibleAndOrderSensitive) {
  Rng rng(2);
  const auto params = oracle::random_toy_net(rng, ValueNetShape{4, 8, 6, 4});
  auto f = oracle::random_features(rng, 4, 0);
  f.num_stops = 3;
  f.stop_inputs.resize(3 * 5);
  for (std::size_t k = 0; k < f.stop_inputs.size(); ++k) f.stop_inputs[k] = std::sin(1.0 + k);
  const double a = value(params, f);
  EXPECT_EQ(a, value(params, f));
  auto g = f;
  std::swap_ranges(g.stop_inputs.begin(), g.stop_inputs.begin() + 5, g.stop_inputs.begin() + 10);
  EXPECT_NE(a, value(params, g));
}

TEST(Value, SameSeedSameWeights) {
  EXPECT_EQ(init_value_net(ValueNetShape{}, 5), init_value_net(ValueNetShape{}, 5));
  EXPECT_NE(init_value_net(ValueNetShape{}, 5).hash(), init_value_net(ValueNetShape{}, 6).hash());
}

TEST(Value, ShapeMismatchIsAContractError) {
  Rng rng(3);
  const ValueNetParams p(ValueNetShape{4, 6, 5, 3});
  EXPECT_THROW(value(p, oracle::random_features(rng, 3, 2)), ContractError);
}

TEST(Value, NonFiniteIsANumericError) {
  Rng rng(3);
  auto p = oracle::random_toy_net(rng, ValueNetShape{2, 3, 3, 2});
  p.theta[p.layout().c3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(value(p, oracle::random_features(rng, 2, 2)), NumericError);
}

TEST(Scoring, ZeroNetworkScoresAreImmediateRewards) {
  Fixture fx;
  const ValueNetParams zero(fx.shape);
  const VehicleState v = fx.vehicle();
  const Request r = make_request(1, 1, 2, 0, 60.0, fx.net, {300.0, 600.0});
  const auto fs = generate_feasible_set(v, std::vector<Request>{r}, fx.net);
  const auto s = score_actions(zero, v, fs, {}, fx.emb, fx.net, fx.scales);
  ASSERT_EQ(s.total().size(), fs.actions.size());
  for (std::size_t k = 0; k < fs.actions.size(); ++k)
    EXPECT_EQ(s.total()[k], static_cast<double>(fs.actions[k].request_ids.size()));
}

TEST(Scoring, MatchesIndependentValueCalls) {
  Fixture fx;
  Rng rng(4);
  const auto params = oracle::random_toy_net(rng, fx.shape);
  VehicleState v = fx.vehicle();
  const std::vector<Request> reqs{make_request(1, 1, 2, 0, 60.0, fx.net, {300.0, 600.0}),
                                  make_request(2, 2, 0, 0, 60.0, fx.net, {300.0, 600.0})};
  const auto fs = generate_feasible_set(v, reqs, fx.net);
  ASSERT_GE(fs.actions.size(), 3u);
  const ScoringContext ctx{2, 2, 0};
  const auto s = score_actions(params, v, fs, ctx, fx.emb, fx.net, fx.scales);
  for (std::size_t k = 0; k < fs.actions.size(); ++k) {
    const VehicleState post = apply_action(v, fs.actions[k], fx.net);
    EXPECT_EQ(s.future[k], value(params, featurize(post, ctx, fx.emb, fx.net, fx.scales)));
  }
  // Null action is valued on the unchanged trajectory.
  EXPECT_EQ(s.future[0], value(params, featurize(v, ctx, fx.emb, fx.net, fx.scales)));
}

TEST(Noise, ZeroSigmaLeavesScores) {
  ActionScores s{{1.0, 2.0}, {0.5, -0.5}};
  const auto out = explore_noise(s, 0.0, 9);
  EXPECT_EQ(out.future, s.future);
}

TEST(Noise, OnlyValueComponentAndReproducible) {
  ActionScores s{{1.0, 2.0}, {0.0, 0.0}};
  const auto a = explore_noise(s, 1.0, 9), b = explore_noise(s, 1.0, 9);
  EXPECT_EQ(a.future, b.future);
  EXPECT_EQ(a.immediate, s.immediate);
  EXPECT_NE(a.future, s.future);
}

TEST(Noise, HalfNormalMean) {
  const int n = 100000;
  ActionScores s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  const auto out = explore_noise(s, 1.0, 17);
  double sum = 0.0;
  for (double x : out.future) sum += std::abs(x);
  EXPECT_NEAR(sum / n, std::sqrt(2.0 / M_PI), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Noise, ScheduleDecaysLinearly) {
  TrainerConfig cfg;
  cfg.noise_start = 1.0;
  cfg.noise_end = 0.0;
  cfg.noise_decay_epochs = 10;
  TrainerState t(ValueNetParams(ValueNetShape{2, 2, 2, 2}), cfg);
  EXPECT_EQ(t.noise_sigma(), 1.0);
  t.collection_epochs = 5;
  EXPECT_DOUBLE_EQ(t.noise_sigma(), 0.5);
  t.collection_epochs = 50;
  EXPECT_EQ(t.noise_sigma(), 0.0);
}

TEST(Gradient, FiniteDifferenceSuite) {
  const auto r = verify::gradient_suite(10, 13, 1e-4);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Gradient, CoversEmptySequences) {
  Rng rng(8);
  const auto params = oracle::random_toy_net(rng, ValueNetShape{2, 3, 3, 2});
  std::vector<TrainingSample> batch(2);
  for (auto& s : batch) {
    s.input = oracle::random_features(rng, 2, 0);
    s.target = 1.0;
  }
  const auto check = oracle::check_loss_gradient(params, batch);
  EXPECT_LT(check.max_rel_error, 1e-4);
}

std::vector<TrainingSample> toy_batch(Rng& rng, int dim, int n) {
  std::vector<TrainingSample> batch(static_cast<std::size_t>(n));
  for (auto& s : batch) {
    s.input = oracle::random_features(rng, dim, 4);
    s.target = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  }
  return batch;
}

TEST(Train, MatchedTargetsLeaveParametersUnchanged) {
  Rng rng(5);
  const auto params = oracle::random_toy_net(rng, ValueNetShape{3, 4, 4, 3});
  auto batch = toy_batch(rng, 3, 6);
  for (auto& s : batch) s.target = value(params, s.input);
  TrainerState t(params, {});
  const auto res = train_step(t, batch);
  EXPECT_EQ(res.loss, 0.0);
  EXPECT_EQ(t.online.theta, params.theta);
}

TEST(Train, OverfitsOneBatchMonotonically) {
  Rng rng(6);
  auto params = oracle::random_toy_net(rng, ValueNetShape{3, 6, 6, 4});
  const auto batch = toy_batch(rng, 3, 8);
  TrainerConfig cfg;
  cfg.adam.lr = 1e-3;
  TrainerState t(params, cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (int step = 0; step < 25; ++step) {
    const double loss = train_step(t, batch).loss;
    EXPECT_LT(loss, prev) << "step " << step;
    prev = loss;
  }
}

TEST(Train, TargetNetworkRefreshesOnSchedule) {
  Rng rng(7);
  const auto params = oracle::random_toy_net(rng, ValueNetShape{3, 4, 4, 3});
  const auto batch = toy_batch(rng, 3, 4);
  TrainerConfig cfg;
  cfg.target_update_every = 3;
  TrainerState t(params, cfg);
  train_step(t, batch);
  train_step(t, batch);
  EXPECT_EQ(t.target, params);
  train_step(t, batch);
  EXPECT_EQ(t.target, t.online);
  EXPECT_NE(t.target, params);
}

TEST(Train, NonFiniteGradientIsSkipped) {
  Rng rng(7);
  const auto params = oracle::random_toy_net(rng, ValueNetShape{3, 4, 4, 3});
  auto batch = toy_batch(rng, 3, 2);
  batch[0].target = std::numeric_limits<double>::infinity();
  TrainerState t(params, {});
  const auto res = train_step(t, batch);
  EXPECT_TRUE(res.skipped);
  EXPECT_EQ(t.skipped_steps, 1);
  EXPECT_EQ(t.online, params);
  EXPECT_THROW(train_step(t, {}), ContractError);
}

Experience single_request_experience(const Fixture& fx) {
  Experience e;
  e.epoch = 0;
  e.batch_count = 1;
  e.vehicles = {fx.vehicle()};
  const Request r = make_request(1, 1, 2, 0, 60.0, fx.net, {300.0, 600.0});
  e.feasible = {generate_feasible_set(e.vehicles[0], std::vector<Request>{r}, fx.net)};
  e.nearby = {0};
  return e;
}

TEST(Bellman, ZeroTargetNetworkGivesImmediateReward) {
  Fixture fx;
  const auto e = single_request_experience(fx);
  ASSERT_EQ(e.feasible[0].actions.size(), 2u);
  TrainerState t(ValueNetParams(fx.shape), {});
  const auto res = bellman_targets(t, e, fx.emb, fx.net, fx.scales);
  ASSERT_EQ(res.samples.size(), 1u);
  EXPECT_EQ(res.chosen, (std::vector<std::size_t>{1}));
  EXPECT_EQ(res.samples[0].target, 1.0);
}

TEST(Bellman, GammaZeroIsMyopicAndTargetsAreDeterministic) {
  Fixture fx;
  const auto e = single_request_experience(fx);
  Rng rng(9);
  TrainerConfig cfg;
  cfg.gamma = 0.0;
  TrainerState t(oracle::random_toy_net(rng, fx.shape), cfg);
  const auto a = bellman_targets(t, e, fx.emb, fx.net, fx.scales);
  const auto b = bellman_targets(t, e, fx.emb, fx.net, fx.scales);
  EXPECT_EQ(a.samples[0].target, e.feasible[0].actions[a.chosen[0]].immediate_reward);
  EXPECT_EQ(a.samples[0].target, b.samples[0].target);
  EXPECT_EQ(a.chosen, b.chosen);
}

TEST(Bellman, UsesTargetNetworkForEvaluation) {
  Fixture fx;
  const auto e = single_request_experience(fx);
  Rng rng(10);
  TrainerConfig cfg;
  cfg.gamma = 0.5;
  TrainerState t(oracle::random_toy_net(rng, fx.shape), cfg);
  t.target = oracle::random_toy_net(rng, fx.shape);
  const auto res = bellman_targets(t, e, fx.emb, fx.net, fx.scales);
  const auto& f = e.feasible[0].actions[res.chosen[0]];
  const VehicleState post = apply_action(e.vehicles[0], f, fx.net);
  const double expect = f.immediate_reward + 0.5 * value(t.target, featurize(post, e.context(0), fx.emb, fx.net, fx.scales));
  EXPECT_EQ(res.samples[0].target, expect);
  // Objective decomposes into per-vehicle online scores.
  const auto s = score_actions(t.online, e.vehicles[0], e.feasible[0], e.context(0), fx.emb, fx.net, fx.scales);
  EXPECT_EQ(res.objective, s.total()[res.chosen[0]]);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Fixture fx;
  Rng rng(11);
  Checkpoint ck;
  ck.embedding = fx.emb;
  ck.trainer = TrainerState(oracle::random_toy_net(rng, fx.shape), {});
  const auto batch = toy_batch(rng, 4, 4);
  train_step(ck.trainer, batch);
  ck.scales.fleet_size = 20;
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const Checkpoint back = read_checkpoint(ss);
  EXPECT_EQ(back.embedding.table, ck.embedding.table);
  EXPECT_EQ(back.embedding.w1, ck.embedding.w1);
  EXPECT_EQ(back.trainer.online, ck.trainer.online);
  EXPECT_EQ(back.trainer.target, ck.trainer.target);
  EXPECT_EQ(back.trainer.adam.m, ck.trainer.adam.m);
  EXPECT_EQ(back.trainer.adam.t, ck.trainer.adam.t);
  EXPECT_EQ(back.trainer.steps, 1);
  EXPECT_EQ(back.scales.fleet_size, 20.0);
  std::stringstream again;
  write_checkpoint(again, back);
  std::stringstream first;
  write_checkpoint(first, ck);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Checkpoint, CorruptInputIsAConfigError) {
  std::stringstream junk("not a checkpoint at all");
  EXPECT_THROW(read_checkpoint(junk), ConfigError);
  Fixture fx;
  Checkpoint ck;
  ck.embedding = fx.emb;
  ck.trainer = TrainerState(ValueNetParams(fx.shape), {});
  std::stringstream ss;
  write_checkpoint(ss, ck);
  std::stringstream cut(ss.str().substr(0, ss.str().size() / 2));
  EXPECT_THROW(read_checkpoint(cut), ConfigError);
  EXPECT_THROW(load_checkpoint("/nonexistent/none.ckpt"), ConfigError);
}

}  // namespace
}  // namespace neuradp
