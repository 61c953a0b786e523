#pragma once

/// \file
/// Vehicle state, stop bookkeeping and the deterministic transitions: applying
/// a chosen action (post-decision) and moving vehicles forward in time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuradp/common.hpp"
#include "neuradp/demand.hpp"
#include "neuradp/roadnet.hpp"

namespace neuradp {

enum class StopKind : std::uint8_t { kPickup = 0, kDropoff = 1 };

struct Stop {
  Location location = kNoLocation;
  StopKind kind = StopKind::kPickup;
  RequestId request_id = 0;
  /// Latest wall time at which the stop may be visited.
  Seconds deadline = 0.0;

  friend bool operator==(const Stop&, const Stop&) = default;
};

inline Stop pickup_stop(const Request& r) {
  return {r.origin, StopKind::kPickup, r.id, r.pickup_deadline};
}

inline Stop dropoff_stop(const Request& r) {
  return {r.destination, StopKind::kDropoff, r.id, r.dropoff_deadline};
}

/// Slack absorbing floating-point reassociation between planned and simulated times.
inline constexpr Seconds kTimeTolerance = 1e-6;

struct VehicleState {
  VehicleId id = 0;
  int capacity = 1;
  /// Last intersection reached.
  Location node = kNoLocation;
  /// Intersection currently driven to; equals `node` when the vehicle stands still.
  Location heading = kNoLocation;
  Seconds edge_remaining = 0.0;
  Seconds clock = 0.0;
  std::vector<Stop> trajectory;
  std::vector<RequestId> onboard;  // sorted
  Location rebalance_target = kNoLocation;

  /// Where route planning starts: a vehicle mid-edge finishes its edge first.
  [[nodiscard]] Location plan_location() const { return heading; }
  [[nodiscard]] Seconds plan_time() const { return clock + edge_remaining; }
  [[nodiscard]] bool idle() const { return trajectory.empty(); }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

// ---------------------------------------------------------------------------
// Routes

struct RouteStart {
  Location location = kNoLocation;
  Seconds time = 0.0;
  int onboard = 0;
  int capacity = 1;
};

inline RouteStart route_start(const VehicleState& v) {
  return {v.plan_location(), v.plan_time(), static_cast<int>(v.onboard.size()), v.capacity};
}

/// Follows `stops` along shortest paths. Returns the arrival time at the last
/// stop, or nullopt if a deadline or the capacity is violated.
inline std::optional<Seconds> evaluate_route(const RoadNetwork& net, const RouteStart& start,
                                             std::span<const Stop> stops) {
  Location at = start.location;
  Seconds t = start.time;
  int load = start.onboard;
  if (load > start.capacity) return std::nullopt;
  for (const Stop& s : stops) {
    t += net.travel_time(at, s.location);
    if (t > s.deadline) return std::nullopt;
    load += (s.kind == StopKind::kPickup) ? 1 : -1;
    if (load > start.capacity || load < 0) return std::nullopt;
    at = s.location;
  }
  return t;
}

/// Earliest arrival time at every stop (no feasibility checks).
inline std::vector<Seconds> arrival_times(const RoadNetwork& net, const RouteStart& start,
                                          std::span<const Stop> stops) {
  std::vector<Seconds> out;
  out.reserve(stops.size());
  Location at = start.location;
  Seconds t = start.time;
  for (const Stop& s : stops) {
    t += net.travel_time(at, s.location);
    out.push_back(t);
    at = s.location;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Actions

/// A group of newly assigned requests for one vehicle plus the route serving
/// them together with everything the vehicle already committed to.
struct FeasibleAction {
  VehicleId vehicle_id = 0;
  std::vector<RequestId> request_ids;  // sorted; empty for the null action
  std::vector<Stop> route;
  double immediate_reward = 0.0;

  [[nodiscard]] bool is_null() const { return request_ids.empty(); }
  friend bool operator==(const FeasibleAction&, const FeasibleAction&) = default;
};

inline FeasibleAction null_action(const VehicleState& v) {
  return {v.id, {}, v.trajectory, 0.0};
}

/// Post-decision transition for one vehicle. Pure: the input is not modified.
inline VehicleState apply_action(const VehicleState& v, const FeasibleAction& f,
                                 const RoadNetwork& net) {
  if (f.vehicle_id != v.id) throw ContractError("action generated for a different vehicle");
  if (f.is_null()) return v;
  if (!f.route.empty()) {
    const Seconds first_leg = v.plan_time() + net.travel_time(v.plan_location(), f.route.front().location);
    if (first_leg > f.route.front().deadline) {
      throw ContractError("route's first stop is unreachable from the vehicle position");
    }
  }
  if (!evaluate_route(net, route_start(v), f.route)) {
    throw ContractError("action route violates a deadline or the capacity");
  }
  VehicleState out = v;
  out.trajectory = f.route;
  out.rebalance_target = kNoLocation;
  return out;
}

// ---------------------------------------------------------------------------
// Motion

struct StopEvent {
  VehicleId vehicle = 0;
  RequestId request = 0;
  StopKind kind = StopKind::kPickup;
  Seconds time = 0.0;
  Seconds deadline = 0.0;
};

struct AdvanceResult {
  VehicleState vehicle;
  std::vector<StopEvent> events;
};

/// Moves a vehicle along its trajectory for `delta` seconds, consuming every
/// stop reached (including stops reached exactly at the end of the window).
/// Idle vehicles drive toward their rebalance target, if any.
inline AdvanceResult advance_time(const VehicleState& in, Seconds delta, const RoadNetwork& net) {
  if (!(delta > 0.0)) throw ContractError("advance_time needs a positive duration");
  AdvanceResult res{in, {}};
  VehicleState& v = res.vehicle;
  const Seconds end = in.clock + delta;
  Seconds t = in.clock;

  auto consume_stops_here = [&] {
    while (!v.trajectory.empty() && v.trajectory.front().location == v.node) {
      const Stop s = v.trajectory.front();
      if (t > s.deadline + kTimeTolerance) {
        throw IntegrityError("vehicle " + std::to_string(v.id) + " reached stop of request " +
                             std::to_string(s.request_id) + " after its deadline");
      }
      if (s.kind == StopKind::kPickup) {
        v.onboard.insert(std::upper_bound(v.onboard.begin(), v.onboard.end(), s.request_id),
                         s.request_id);
        if (static_cast<int>(v.onboard.size()) > v.capacity) {
          throw IntegrityError("vehicle " + std::to_string(v.id) + " exceeds its capacity");
        }
      } else {
        auto it = std::lower_bound(v.onboard.begin(), v.onboard.end(), s.request_id);
        if (it == v.onboard.end() || *it != s.request_id) {
          throw IntegrityError("dropoff of request " + std::to_string(s.request_id) +
                               " that is not on board");
        }
        v.onboard.erase(it);
      }
      res.events.push_back({v.id, s.request_id, s.kind, t, s.deadline});
      v.trajectory.erase(v.trajectory.begin());
    }
  };

  while (true) {
    if (v.edge_remaining > 0.0) {
      const Seconds step = std::min(end - t, v.edge_remaining);
      v.edge_remaining -= step;
      t += step;
      if (v.edge_remaining > 0.0) break;  // window ended mid-edge
      v.edge_remaining = 0.0;
      v.node = v.heading;
    }
    consume_stops_here();
    if (v.rebalance_target == v.node) v.rebalance_target = kNoLocation;
    if (t >= end) break;
    Location target = kNoLocation;
    if (!v.trajectory.empty()) {
      target = v.trajectory.front().location;
    } else if (v.rebalance_target != kNoLocation) {
      target = v.rebalance_target;
    }
    if (target == kNoLocation) break;  // idle: hold position
    const Location hop = net.next_hop(v.node, target);
    v.heading = hop;
    v.edge_remaining = net.travel_time(v.node, hop);
  }
  v.clock = end;
  return res;
}

// ---------------------------------------------------------------------------
// System state

struct SystemState {
  int epoch = 0;
  Seconds time = 0.0;
  std::vector<VehicleState> vehicles;
  EpochBatch pending;
};

/// Vehicles right after the assignment; unassigned demand is gone.
struct PostDecisionState {
  int epoch = 0;
  std::vector<VehicleState> vehicles;
};

/// Uniformly random initial positions.
inline std::vector<VehicleState> place_vehicles(const RoadNetwork& net, int count, int capacity,
                                                std::uint64_t seed, Seconds clock = 0.0) {
  if (capacity < 1) throw ContractError("capacity must be >= 1");
  Rng rng(seed);
  std::uniform_int_distribution<Location> pick(0, static_cast<Location>(net.size() - 1));
  std::vector<VehicleState> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto& v = out[i];
    v.id = i;
    v.capacity = capacity;
    v.node = v.heading = pick(rng);
    v.clock = clock;
  }
  return out;
}

inline void hash_into(Hasher& h, const VehicleState& v) {
  h.add(v.id);
  h.add(v.capacity);
  h.add(v.node);
  h.add(v.heading);
  h.add(v.edge_remaining);
  h.add(v.clock);
  h.add(v.trajectory.size());
  for (const Stop& s : v.trajectory) {
    h.add(s.location);
    h.add(s.kind);
    h.add(s.request_id);
    h.add(s.deadline);
  }
  h.add_range(std::span<const RequestId>(v.onboard));
  h.add(v.rebalance_target);
}

inline std::uint64_t state_hash(const VehicleState& v) {
  Hasher h;
  hash_into(h, v);
  return h.digest();
}

inline std::uint64_t state_hash(std::span<const VehicleState> vs) {
  Hasher h;
  h.add(vs.size());
  for (const auto& v : vs) hash_into(h, v);
  return h.digest();
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const Stop& s) {
  j = {{"location", s.location},
       {"kind", s.kind == StopKind::kPickup ? "pickup" : "dropoff"},
       {"request", s.request_id},
       {"deadline", s.deadline}};
}

inline void from_json(const nlohmann::json& j, Stop& s) {
  s.location = j.at("location").get<Location>();
  s.kind = j.at("kind").get<std::string>() == "pickup" ? StopKind::kPickup : StopKind::kDropoff;
  s.request_id = j.at("request").get<RequestId>();
  s.deadline = j.at("deadline").get<Seconds>();
}

inline void to_json(nlohmann::json& j, const VehicleState& v) {
  j = {{"id", v.id},
       {"capacity", v.capacity},
       {"node", v.node},
       {"heading", v.heading},
       {"edge_remaining", v.edge_remaining},
       {"clock", v.clock},
       {"trajectory", v.trajectory},
       {"onboard", v.onboard},
       {"rebalance_target", v.rebalance_target}};
}

inline void from_json(const nlohmann::json& j, VehicleState& v) {
  v.id = j.at("id").get<VehicleId>();
  v.capacity = j.at("capacity").get<int>();
  v.node = j.at("node").get<Location>();
  v.heading = j.at("heading").get<Location>();
  v.edge_remaining = j.at("edge_remaining").get<Seconds>();
  v.clock = j.at("clock").get<Seconds>();
  v.trajectory = j.at("trajectory").get<std::vector<Stop>>();
  v.onboard = j.at("onboard").get<std::vector<RequestId>>();
  v.rebalance_target = j.at("rebalance_target").get<Location>();
}

inline void to_json(nlohmann::json& j, const FeasibleAction& f) {
  j = {{"vehicle", f.vehicle_id},
       {"requests", f.request_ids},
       {"route", f.route},
       {"reward", f.immediate_reward}};
}

inline void from_json(const nlohmann::json& j, FeasibleAction& f) {
  f.vehicle_id = j.at("vehicle").get<VehicleId>();
  f.request_ids = j.at("requests").get<std::vector<RequestId>>();
  f.route = j.at("route").get<std::vector<Stop>>();
  f.immediate_reward = j.at("reward").get<double>();
}

/// JSON-lines snapshot: one vehicle per line.
inline void write_snapshot(std::ostream& out, std::span<const VehicleState> vehicles) {
  for (const auto& v : vehicles) out << nlohmann::json(v).dump() << '\n';
}

}  // namespace neuradp
