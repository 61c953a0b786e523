#include "neuradp/feasibility.hpp"

#include <gtest/gtest.h>

#include <random>

#include "neuradp/oracles.hpp"
#include "neuradp/verify.hpp"

namespace neuradp {
namespace {

// Bidirectional path 0-1-2-3, 60 s per leg.
RoadNetwork path4() {
  std::vector<Edge> e;
  for (int i = 0; i < 3; ++i) {
    e.push_back({i, i + 1, 60});
    e.push_back({i + 1, i, 60});
  }
  return build_network({0, 1, 2, 3}, e);
}

VehicleState idle_at(VehicleId id, Location loc, int capacity = 4) {
  VehicleState v;
  v.id = id;
  v.capacity = capacity;
  v.node = v.heading = loc;
  return v;
}

const DelayConstraints kLoose{600.0, 1200.0};

TEST(Prune, BoundaryIsInclusive) {
  const auto net = path4();
  const Request r = make_request(1, 3, 0, 0, 60.0, net, {180.0, 360.0});
  const std::vector<VehicleState> fleet{idle_at(0, 0), idle_at(1, 1)};
  const auto c = prune_candidates(std::span(&r, 1), fleet, net, 180.0);
  // Vehicle 0 is exactly 180 s away, vehicle 1 is 120 s away.
  EXPECT_EQ(c.at(1), (std::vector<VehicleId>{1, 0}));
  const auto tight = prune_candidates(std::span(&r, 1), fleet, net, 179.0);
  EXPECT_EQ(tight.at(1), std::vector<VehicleId>{1});
}

TEST(Prune, NoVehicleInRangeGivesEmptyList) {
  const auto net = path4();
  const Request r = make_request(1, 3, 0, 0, 60.0, net, kLoose);
  const std::vector<VehicleState> fleet{idle_at(0, 0)};
  const auto c = prune_candidates(std::span(&r, 1), fleet, net, 60.0);
  EXPECT_TRUE(c.at(1).empty());
}

TEST(Prune, KeepsTheKNearestBySortOracle) {
  const auto net = make_grid_network(8, 8, 30.0);
  Rng rng(21);
  const auto fleet = place_vehicles(net, 40, 4, 5);
  const Request r = make_request(1, 27, 0, 0, 60.0, net, {1e6, 1e6});
  const auto c = prune_candidates(std::span(&r, 1), fleet, net, 1e6, 30);
  std::vector<std::pair<Seconds, VehicleId>> ref;
  for (const auto& v : fleet) ref.emplace_back(net.travel_time(v.node, 27), v.id);
  std::stable_sort(ref.begin(), ref.end(), [](auto& a, auto& b) { return a.first < b.first; });
  const auto& got = c.at(1);
  ASSERT_EQ(got.size(), 30u);
  // Same travel-time multiset as the 30 smallest.
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_EQ(net.travel_time(fleet[got[k]].node, 27), ref[k].first);
  }
}

TEST(TryInsert, EmptyTrajectoryHasOnePlacement) {
  const auto net = path4();
  const Request r = make_request(1, 2, 3, 0, 60.0, net, {120.0, 240.0});
  EvalBudget budget(150);
  auto res = try_insert(idle_at(0, 0), r, net, budget);
  EXPECT_EQ(res.status, InsertStatus::kFeasible);
  EXPECT_EQ(budget.used(), 1);
  ASSERT_EQ(res.route.size(), 2u);
  EXPECT_EQ(res.route[0], pickup_stop(r));
  EXPECT_EQ(res.route[1], dropoff_stop(r));

  // Origin 180 s away with tau 120: infeasible.
  EvalBudget b2(150);
  EXPECT_EQ(try_insert(idle_at(0, 3), make_request(2, 0, 1, 0, 60.0, net, {120.0, 240.0}), net, b2).status,
            InsertStatus::kInfeasible);
}

TEST(TryInsert, TwoStopsGiveAtMostSixPairs) {
  const auto net = path4();
  VehicleState v = idle_at(0, 0);
  const Request a = make_request(1, 1, 2, 0, 60.0, net, kLoose);
  v.trajectory = {pickup_stop(a), dropoff_stop(a)};
  const Request b = make_request(2, 2, 3, 0, 60.0, net, kLoose);
  EvalBudget budget(1000);
  const auto res = try_insert(v, b, net, budget);
  EXPECT_EQ(res.status, InsertStatus::kFeasible);
  // Pickup slot i in 0..2, dropoff slot after it: 3 + 2 + 1.
  int pairs = 0;
  for (int i = 0; i <= 2; ++i)
    for (int j = i; j <= 2; ++j) ++pairs;
  EXPECT_EQ(pairs, 6);
  EXPECT_EQ(budget.used(), 6);
  // Existing stops keep their relative order.
  std::vector<RequestId> order;
  for (const auto& s : res.route)
    if (s.request_id == 1) order.push_back(static_cast<RequestId>(s.kind));
  EXPECT_EQ(order, (std::vector<RequestId>{0, 1}));
}

TEST(TryInsert, CapacityOneMustDropOffFirst) {
  const auto net = path4();
  VehicleState v = idle_at(0, 0, 1);
  v.onboard = {1};
  v.trajectory = {{1, StopKind::kDropoff, 1, 1000.0}};
  const Request r = make_request(2, 2, 3, 0, 60.0, net, kLoose);
  EvalBudget budget(150);
  const auto res = try_insert(v, r, net, budget);
  ASSERT_EQ(res.status, InsertStatus::kFeasible);
  EXPECT_EQ(res.route.front().request_id, 1);
  // Independent check: the best reordering agrees on feasibility.
  const auto tt = oracle::floyd_warshall(net);
  EXPECT_TRUE(oracle::best_completion(tt, v, std::span(&r, 1)).has_value());

  // Origin 120 s away with tau 100: infeasible in any order.
  const Request strict = make_request(3, 2, 3, 0, 60.0, net, {100.0, 200.0});
  EvalBudget b2(150);
  EXPECT_EQ(try_insert(v, strict, net, b2).status, InsertStatus::kInfeasible);
  EXPECT_FALSE(oracle::best_completion(tt, v, std::span(&strict, 1)).has_value());
}

TEST(TryInsert, BudgetExhaustionIsDistinguished) {
  const auto net = path4();
  VehicleState v = idle_at(0, 0);
  // The existing pickup is due on arrival, so the first position pair fails.
  v.trajectory = {{1, StopKind::kPickup, 1, 60.0}, {2, StopKind::kDropoff, 1, 1000.0}};
  const Request b = make_request(2, 3, 0, 0, 60.0, net, {180.0, 720.0});
  EvalBudget budget(1);
  EXPECT_EQ(try_insert(v, b, net, budget).status, InsertStatus::kBudgetExhausted);
}

TEST(FeasibleSet, NoRequestsGivesOnlyNull) {
  const auto net = path4();
  const auto fs = generate_feasible_set(idle_at(0, 0), {}, net);
  ASSERT_EQ(fs.actions.size(), 1u);
  EXPECT_TRUE(fs.actions[0].is_null());
}

TEST(FeasibleSet, TwoCompatibleRequestsOnPathGraph) {
  const auto net = path4();
  const std::vector<Request> reqs{make_request(1, 1, 3, 0, 60.0, net, kLoose),
                                  make_request(2, 2, 3, 0, 60.0, net, kLoose)};
  const VehicleState v = idle_at(0, 0, 2);
  const auto fs = generate_feasible_set(v, reqs, net);
  ASSERT_EQ(fs.actions.size(), 4u);
  std::set<std::vector<RequestId>> groups;
  for (const auto& a : fs.actions) groups.insert(a.request_ids);
  EXPECT_EQ(groups, (std::set<std::vector<RequestId>>{{}, {1}, {2}, {1, 2}}));
  const auto tt = oracle::floyd_warshall(net);
  const auto brute = oracle::brute_force_feasible_set(tt, v, reqs);
  EXPECT_EQ(brute.groups.size() + 1, fs.actions.size());
}

TEST(FeasibleSet, ZeroCapGivesOnlyNull) {
  const auto net = path4();
  const std::vector<Request> reqs{make_request(1, 1, 3, 0, 60.0, net, kLoose)};
  FeasibilityOptions opt;
  opt.eval_cap = 0;
  const auto fs = generate_feasible_set(idle_at(0, 0), reqs, net, opt);
  EXPECT_EQ(fs.actions.size(), 1u);
}

TEST(FeasibleSet, GroupSizeLimitedByCapacity) {
  const auto net = path4();
  std::vector<Request> reqs;
  for (RequestId id = 1; id <= 3; ++id) reqs.push_back(make_request(id, 1, 3, 0, 60.0, net, kLoose));
  const auto fs = generate_feasible_set(idle_at(0, 0, 2), reqs, net);
  for (const auto& a : fs.actions) EXPECT_LE(a.request_ids.size(), 2u);
  EXPECT_EQ(fs.actions.size(), 1u + 3u + 3u);
}

TEST(FeasibleSet, ExhaustiveModeIsMonotone) {
  Rng rng(33);
  for (int k = 0; k < 60; ++k) {
    const RoadNetwork net = oracle::random_micro_network(rng, 8);
    const auto mi = oracle::random_micro_instance(rng, net, 3, 3, {180.0, 240.0});
    FeasibilityOptions opt;
    opt.exhaustive = true;
    const auto fs = generate_feasible_set(mi.vehicle, mi.requests, net, opt);
    std::set<std::vector<RequestId>> present;
    for (const auto& a : fs.actions) present.insert(a.request_ids);
    for (const auto& g : present) {
      // Every subset of a returned group is also returned.
      for (std::size_t drop = 0; drop < g.size(); ++drop) {
        auto sub = g;
        sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
        EXPECT_TRUE(present.count(sub)) << "instance " << k;
      }
    }
  }
}

TEST(FeasibleSet, FleetGenerationMatchesAcrossWorkerCounts) {
  const auto net = make_grid_network(6, 6, 60.0);
  const auto fleet = place_vehicles(net, 12, 3, 8);
  DemandOptions d;
  d.horizon_epochs = 1;
  d.profile = RateProfile::constant(1, 15.0);
  d.seed = 4;
  const auto batch = generate_demand(net, d)[0].requests;
  FeasibilityOptions opt;
  const auto one = generate_fleet_feasible_sets(fleet, batch, net, 300.0, opt, 1);
  const auto four = generate_fleet_feasible_sets(fleet, batch, net, 300.0, opt, 4);
  ASSERT_EQ(one.size(), four.size());
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(one[i].actions, four[i].actions);
}

TEST(FeasibleSet, SoundnessAndCompletenessSuite) {
  const auto r = verify::feasibility_suite(200, 12);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_EQ(r.cases, 200);
}

}  // namespace
}  // namespace neuradp
