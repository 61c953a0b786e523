#include "neuradp/fleet.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace neuradp {
namespace {

// Bidirectional path 0 - 1 - 2 with legs of 40 s and 60 s.
RoadNetwork path3() {
  return build_network({0, 1, 2}, {{0, 1, 40}, {1, 0, 40}, {1, 2, 60}, {2, 1, 60}});
}

VehicleState idle_at(Location loc, int capacity = 4) {
  VehicleState v;
  v.id = 0;
  v.capacity = capacity;
  v.node = v.heading = loc;
  return v;
}

Request request(RequestId id, Location o, Location d, Seconds pickup_deadline, Seconds dropoff_deadline) {
  Request r;
  r.id = id;
  r.origin = o;
  r.destination = d;
  r.pickup_deadline = pickup_deadline;
  r.dropoff_deadline = dropoff_deadline;
  return r;
}

TEST(ApplyAction, NullActionLeavesStateUnchanged) {
  const auto net = path3();
  VehicleState v = idle_at(0);
  v.rebalance_target = 2;
  EXPECT_EQ(apply_action(v, null_action(v), net), v);
}

TEST(ApplyAction, SingleRequestOnEmptyVehicle) {
  const auto net = path3();
  const DelayConstraints delays{300.0, 600.0};
  const Request r = make_request(7, 1, 2, 0, 60.0, net, delays);
  const VehicleState v = idle_at(0);
  FeasibleAction f{0, {7}, {pickup_stop(r), dropoff_stop(r)}, 1.0};
  const VehicleState out = apply_action(v, f, net);
  ASSERT_EQ(out.trajectory.size(), 2u);
  EXPECT_EQ(out.trajectory[0].deadline, 300.0);
  EXPECT_EQ(out.trajectory[1].deadline, 300.0 + 60.0 + 600.0);
  EXPECT_EQ(out.trajectory[0].kind, StopKind::kPickup);
  EXPECT_EQ(out.trajectory[1].kind, StopKind::kDropoff);
  // Pure: same inputs, hash-equal outputs, input untouched.
  EXPECT_EQ(state_hash(apply_action(v, f, net)), state_hash(out));
  EXPECT_TRUE(v.trajectory.empty());
}

TEST(ApplyAction, UnreachableFirstLegIsAContractError) {
  const auto net = path3();
  const Request r = request(1, 2, 0, 50.0, 500.0);  // 100 s away
  const VehicleState v = idle_at(0);
  FeasibleAction f{0, {1}, {pickup_stop(r), dropoff_stop(r)}, 1.0};
  EXPECT_THROW(apply_action(v, f, net), ContractError);
  FeasibleAction other{3, {1}, {}, 1.0};
  EXPECT_THROW(apply_action(v, other, net), ContractError);
}

TEST(AdvanceTime, IdleVehicleHoldsPosition) {
  const auto net = path3();
  const VehicleState v = idle_at(1);
  const auto res = advance_time(v, 60.0, net);
  EXPECT_EQ(res.vehicle.node, 1);
  EXPECT_EQ(res.vehicle.heading, 1);
  EXPECT_EQ(res.vehicle.clock, 60.0);
  EXPECT_TRUE(res.events.empty());
}

TEST(AdvanceTime, LinearProgressAlongLongLeg) {
  const auto net = build_network({0, 1}, {{0, 1, 90}, {1, 0, 90}});
  VehicleState v = idle_at(0);
  v.trajectory = {{1, StopKind::kPickup, 5, 1000.0}, {0, StopKind::kDropoff, 5, 2000.0}};
  const auto res = advance_time(v, 60.0, net);
  EXPECT_EQ(res.vehicle.node, 0);
  EXPECT_EQ(res.vehicle.heading, 1);
  EXPECT_EQ(res.vehicle.edge_remaining, 30.0);
  EXPECT_EQ(res.vehicle.plan_time(), 90.0);
}

TEST(AdvanceTime, PickupConsumedMidWindow) {
  const auto net = path3();
  VehicleState v = idle_at(0);
  const Request r = request(9, 1, 2, 300.0, 900.0);
  v.trajectory = {pickup_stop(r), dropoff_stop(r)};
  const auto res = advance_time(v, 60.0, net);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.events[0].time, 40.0);
  EXPECT_EQ(res.events[0].kind, StopKind::kPickup);
  EXPECT_EQ(res.vehicle.onboard, std::vector<RequestId>{9});
  EXPECT_EQ(res.vehicle.node, 1);
  EXPECT_EQ(res.vehicle.heading, 2);
  // 20 s past the pickup on the 60 s leg.
  EXPECT_EQ(res.vehicle.edge_remaining, 40.0);
  ASSERT_EQ(res.vehicle.trajectory.size(), 1u);

  const auto next = advance_time(res.vehicle, 60.0, net);
  ASSERT_EQ(next.events.size(), 1u);
  EXPECT_EQ(next.events[0].time, 100.0);
  EXPECT_TRUE(next.vehicle.onboard.empty());
  EXPECT_TRUE(next.vehicle.idle());
}

TEST(AdvanceTime, StopReachedExactlyAtWindowEnd) {
  const auto net = build_network({0, 1}, {{0, 1, 60}, {1, 0, 60}});
  VehicleState v = idle_at(0);
  v.trajectory = {{1, StopKind::kPickup, 2, 60.0}, {0, StopKind::kDropoff, 2, 500.0}};
  const auto res = advance_time(v, 60.0, net);
  ASSERT_EQ(res.events.size(), 1u);
  EXPECT_EQ(res.vehicle.node, 1);
  EXPECT_EQ(res.vehicle.edge_remaining, 0.0);
}

TEST(AdvanceTime, LateStopIsAnIntegrityError) {
  const auto net = path3();
  VehicleState v = idle_at(0);
  v.trajectory = {{1, StopKind::kPickup, 1, 10.0}};
  EXPECT_THROW(advance_time(v, 60.0, net), IntegrityError);
}

TEST(AdvanceTime, CapacityOverflowIsAnIntegrityError) {
  const auto net = path3();
  VehicleState v = idle_at(0, 1);
  v.onboard = {4};
  v.trajectory = {{1, StopKind::kPickup, 1, 500.0}};
  EXPECT_THROW(advance_time(v, 60.0, net), IntegrityError);
}

TEST(AdvanceTime, RebalanceTargetIsDrivenToAndCleared) {
  const auto net = path3();
  VehicleState v = idle_at(0);
  v.rebalance_target = 2;
  auto res = advance_time(v, 60.0, net);
  EXPECT_TRUE(res.events.empty());
  EXPECT_EQ(res.vehicle.heading, 2);
  res = advance_time(res.vehicle, 60.0, net);
  EXPECT_EQ(res.vehicle.node, 2);
  EXPECT_EQ(res.vehicle.rebalance_target, kNoLocation);
}

TEST(AdvanceTime, NonPositiveDurationIsAContractError) {
  const auto net = path3();
  EXPECT_THROW(advance_time(idle_at(0), 0.0, net), ContractError);
}

TEST(Routes, EvaluateRouteChecksDeadlinesAndCapacity) {
  const auto net = path3();
  const RouteStart start{0, 0.0, 0, 1};
  const std::vector<Stop> ok = {{1, StopKind::kPickup, 1, 40.0}, {2, StopKind::kDropoff, 1, 100.0}};
  EXPECT_EQ(evaluate_route(net, start, ok), 100.0);
  const std::vector<Stop> late = {{1, StopKind::kPickup, 1, 39.0}};
  EXPECT_FALSE(evaluate_route(net, start, late));
  const std::vector<Stop> two = {{1, StopKind::kPickup, 1, 500.0}, {1, StopKind::kPickup, 2, 500.0}};
  EXPECT_FALSE(evaluate_route(net, start, two));
  EXPECT_EQ(arrival_times(net, start, ok), (std::vector<Seconds>{40.0, 100.0}));
}

TEST(Fleet, PlacementIsDeterministic) {
  const auto net = make_grid_network(5, 5, 60.0);
  const auto a = place_vehicles(net, 10, 4, 99);
  const auto b = place_vehicles(net, 10, 4, 99);
  EXPECT_EQ(state_hash(a), state_hash(b));
  EXPECT_NE(state_hash(a), state_hash(place_vehicles(net, 10, 4, 100)));
  EXPECT_THROW(place_vehicles(net, 2, 0, 1), ContractError);
}

TEST(Fleet, JsonRoundTrip) {
  VehicleState v = idle_at(3, 2);
  v.heading = 4;
  v.edge_remaining = 12.5;
  v.clock = 180.0;
  v.onboard = {1};
  v.trajectory = {{4, StopKind::kDropoff, 1, 700.0}};
  const VehicleState back = nlohmann::json(v).get<VehicleState>();
  EXPECT_EQ(back, v);
  std::ostringstream os;
  const std::vector<VehicleState> vs{v, v};
  write_snapshot(os, vs);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

}  // namespace
}  // namespace neuradp
