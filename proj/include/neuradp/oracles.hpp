#pragma once

/// \file
/// Slow reference implementations used to check the fast paths: joint
/// enumeration for the assignment problem, permutation search for feasible
/// sets, Floyd-Warshall for travel times, exhaustive matching for
/// rebalancing and central differences for gradients. They share no search
/// code with the modules they check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "neuradp/assign.hpp"
#include "neuradp/common.hpp"
#include "neuradp/demand.hpp"
#include "neuradp/feasibility.hpp"
#include "neuradp/fleet.hpp"
#include "neuradp/rebalance.hpp"
#include "neuradp/roadnet.hpp"
#include "neuradp/valuefn.hpp"

namespace neuradp::oracle {

// ---------------------------------------------------------------------------
// Travel times

/// All-pairs shortest times over the retained arcs.
inline std::vector<std::vector<Seconds>> floyd_warshall(const RoadNetwork& net) {
  const std::size_t n = net.size();
  const Seconds inf = std::numeric_limits<Seconds>::infinity();
  std::vector<std::vector<Seconds>> d(n, std::vector<Seconds>(n, inf));
  for (std::size_t a = 0; a < n; ++a) {
    d[a][a] = 0.0;
    for (const auto& arc : net.out_arcs(static_cast<Location>(a))) {
      d[a][arc.to] = std::min(d[a][arc.to], arc.seconds);
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// ---------------------------------------------------------------------------
// Assignment

struct BruteAssignment {
  std::vector<std::size_t> chosen;
  double objective = -std::numeric_limits<double>::infinity();
  std::int64_t joint_choices = 0;
};

/// Every joint choice in lexicographic order; keeps the first strict maximum.
inline BruteAssignment brute_force_assignment(const AssignmentInstance& inst) {
  BruteAssignment best;
  const std::size_t nv = inst.vehicles.size();
  std::vector<std::size_t> pick(nv, 0);
  while (true) {
    ++best.joint_choices;
    std::set<RequestId> seen;
    bool ok = true;
    for (std::size_t i = 0; i < nv && ok; ++i) {
      for (RequestId r : inst.vehicles[i].requests[pick[i]]) {
        if (!seen.insert(r).second) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      double value = 0.0;
      for (std::size_t i = 0; i < nv; ++i) value += inst.vehicles[i].scores[pick[i]];
      if (value > best.objective) {
        best.objective = value;
        best.chosen = pick;
      }
    }
    std::size_t k = nv;
    while (k > 0) {
      --k;
      if (++pick[k] < inst.vehicles[k].scores.size()) break;
      pick[k] = 0;
      if (k == 0) return best;
    }
    if (nv == 0) return best;
  }
}

/// Random instance: null action at index 0 plus random request groups.
inline AssignmentInstance random_assignment_instance(Rng& rng, int max_vehicles, int max_requests, int max_actions) {
  std::uniform_int_distribution<int> nv_d(1, max_vehicles), nr_d(1, max_requests), na_d(1, max_actions);
  std::uniform_real_distribution<double> score_d(-1.0, 4.0);
  const int nv = nv_d(rng), nr = nr_d(rng);
  AssignmentInstance inst;
  inst.vehicles.resize(nv);
  for (auto& v : inst.vehicles) {
    const int na = na_d(rng);
    v.requests.push_back({});
    v.scores.push_back(score_d(rng) * 0.25);
    for (int a = 1; a < na; ++a) {
      std::uniform_int_distribution<int> size_d(1, std::min(3, nr));
      const int size = size_d(rng);
      std::vector<RequestId> ids(nr);
      std::iota(ids.begin(), ids.end(), RequestId{100});
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(size);
      std::sort(ids.begin(), ids.end());
      v.requests.push_back(ids);
      v.scores.push_back(score_d(rng) + size);
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Routes and feasible sets

struct ReplayCheck {
  bool ok = true;
  std::string reason;
  Seconds end_time = 0.0;
};

/// Drives `route` from the vehicle's position using the given travel-time
/// matrix, checking deadlines, capacity, pickup-before-dropoff and that every
/// prior commitment of the vehicle is still served.
inline ReplayCheck replay_route(const std::vector<std::vector<Seconds>>& tt, const VehicleState& v,
                                std::span<const Stop> route, std::span<const Request> added) {
  ReplayCheck res;
  auto fail = [&](std::string why) {
    res.ok = false;
    res.reason = std::move(why);
    return res;
  };
  std::set<RequestId> onboard(v.onboard.begin(), v.onboard.end());
  if (static_cast<int>(onboard.size()) > v.capacity) return fail("over capacity at start");
  std::multiset<std::pair<RequestId, int>> expected;
  for (const Stop& s : v.trajectory) expected.insert({s.request_id, static_cast<int>(s.kind)});
  for (const Request& r : added) {
    expected.insert({r.id, static_cast<int>(StopKind::kPickup)});
    expected.insert({r.id, static_cast<int>(StopKind::kDropoff)});
  }
  std::multiset<std::pair<RequestId, int>> got;
  for (const Stop& s : route) got.insert({s.request_id, static_cast<int>(s.kind)});
  if (got != expected) return fail("route stops differ from commitments plus new requests");

  Location at = v.heading;
  Seconds t = v.clock + v.edge_remaining;
  for (const Stop& s : route) {
    t += tt[at][s.location];
    if (t > s.deadline) return fail("deadline missed for request " + std::to_string(s.request_id));
    if (s.kind == StopKind::kPickup) {
      if (!onboard.insert(s.request_id).second) return fail("double pickup");
      if (static_cast<int>(onboard.size()) > v.capacity) return fail("over capacity");
    } else {
      if (onboard.erase(s.request_id) == 0) return fail("dropoff before pickup");
    }
    at = s.location;
  }
  for (const Request& r : added) {
    for (const Stop& s : route) {
      if (s.request_id != r.id) continue;
      const bool bad = s.kind == StopKind::kPickup ? s.deadline != r.pickup_deadline : s.deadline != r.dropoff_deadline;
      if (bad) return fail("stop deadline differs from request");
    }
  }
  res.end_time = t;
  return res;
}

/// Earliest completion over every ordering of the vehicle's stops plus the
/// group's stops, by permutation enumeration.
inline std::optional<Seconds> best_completion(const std::vector<std::vector<Seconds>>& tt, const VehicleState& v,
                                              std::span<const Request> group) {
  std::vector<Stop> stops = v.trajectory;
  for (const Request& r : group) {
    stops.push_back(pickup_stop(r));
    stops.push_back(dropoff_stop(r));
  }
  std::vector<std::size_t> perm(stops.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::optional<Seconds> best;
  std::vector<Stop> route(stops.size());
  do {
    for (std::size_t k = 0; k < perm.size(); ++k) route[k] = stops[perm[k]];
    const ReplayCheck c = replay_route(tt, v, route, group);
    if (c.ok && (!best || c.end_time < *best)) best = c.end_time;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct BruteFeasible {
  /// Request groups (sorted ids) with their earliest completion time.
  std::map<std::vector<RequestId>, Seconds> groups;
};

/// All nonempty groups of at most `capacity` requests that some ordering serves.
inline BruteFeasible brute_force_feasible_set(const std::vector<std::vector<Seconds>>& tt, const VehicleState& v,
                                              std::span<const Request> assignable) {
  BruteFeasible out;
  const std::size_t n = assignable.size();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    if (std::popcount(mask) > v.capacity) continue;
    std::vector<Request> group;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (1u << k)) group.push_back(assignable[k]);
    if (auto end = best_completion(tt, v, group)) {
      std::vector<RequestId> ids;
      for (const auto& r : group) ids.push_back(r.id);
      std::sort(ids.begin(), ids.end());
      out.groups.emplace(std::move(ids), *end);
    }
  }
  return out;
}

/// Small connected random network with random edge times.
inline RoadNetwork random_micro_network(Rng& rng, int max_nodes) {
  std::uniform_int_distribution<int> nd(3, max_nodes);
  const int n = nd(rng);
  std::uniform_int_distribution<int> secs(20, 120);
  std::vector<Edge> edges;
  for (int k = 0; k < n; ++k) {  // ring in both directions keeps it strongly connected
    edges.push_back({k, (k + 1) % n, static_cast<Seconds>(secs(rng))});
    edges.push_back({(k + 1) % n, k, static_cast<Seconds>(secs(rng))});
  }
  std::uniform_int_distribution<int> node(0, n - 1);
  for (int k = 0; k < n; ++k) {
    const int a = node(rng), b = node(rng);
    if (a != b) edges.push_back({a, b, static_cast<Seconds>(secs(rng))});
  }
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return build_network(ids, edges);
}

struct MicroInstance {
  VehicleState vehicle;
  std::vector<Request> requests;
};

/// A vehicle (possibly carrying one passenger and/or holding one unserved
/// pickup) plus up to three new requests, on a random micro network.
inline MicroInstance random_micro_instance(Rng& rng, const RoadNetwork& net, int max_capacity, int max_requests,
                                           const DelayConstraints& delays) {
  MicroInstance mi;
  const int n = static_cast<int>(net.size());
  std::uniform_int_distribution<Location> loc(0, n - 1);
  std::uniform_int_distribution<int> cap(1, max_capacity), nreq(1, max_requests), coin(0, 1);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  const int epoch = 10;
  const Seconds delta = 60.0;
  const Seconds now = epoch * delta;

  VehicleState& v = mi.vehicle;
  v.id = 0;
  v.capacity = cap(rng);
  v.node = loc(rng);
  v.heading = v.node;
  if (coin(rng)) {  // mid-edge
    const auto arcs = net.out_arcs(v.node);
    const auto& arc = arcs[std::uniform_int_distribution<std::size_t>(0, arcs.size() - 1)(rng)];
    v.heading = arc.to;
    v.edge_remaining = std::floor(arc.seconds * frac(rng));
  }
  v.clock = now;
  RequestId next_id = 1;
  auto make = [&](int ep) {
    Location o = loc(rng), d = loc(rng);
    while (d == o) d = loc(rng);
    return make_request(next_id++, o, d, ep, delta, net, delays);
  };
  const Seconds start = v.clock + v.edge_remaining;
  if (coin(rng)) {  // passenger on board, heading to its dropoff
    Request r = make(epoch - 1);
    if (start + net.travel_time(v.heading, r.destination) <= r.dropoff_deadline) {
      v.onboard.push_back(r.id);
      v.trajectory.push_back(dropoff_stop(r));
    }
  }
  if (coin(rng) && static_cast<int>(v.onboard.size()) < v.capacity) {  // accepted but not yet picked up
    Request r = make(epoch - 1);
    std::vector<Stop> route = v.trajectory;
    route.push_back(pickup_stop(r));
    route.push_back(dropoff_stop(r));
    if (evaluate_route(net, route_start(v), route)) v.trajectory = route;
  }
  const int k = nreq(rng);
  for (int i = 0; i < k; ++i) mi.requests.push_back(make(epoch));
  return mi;
}

// ---------------------------------------------------------------------------
// Rebalancing

struct BruteRebalance {
  Seconds cost = std::numeric_limits<Seconds>::infinity();
  std::vector<std::size_t> target;
};

/// Every assignment of vehicles to points within the allotments.
inline BruteRebalance brute_force_rebalance(const RebalanceInstance& inst) {
  BruteRebalance best;
  const std::size_t nv = inst.vehicles.size(), np = inst.points.size();
  std::vector<std::size_t> pick(nv, 0);
  std::vector<int> load(np, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == nv) {
      Seconds c = 0.0;
      for (std::size_t k = 0; k < nv; ++k) c += inst.cost[k][pick[k]];
      if (c < best.cost) {
        best.cost = c;
        best.target = pick;
      }
      return;
    }
    for (std::size_t j = 0; j < np; ++j) {
      if (load[j] >= inst.allotments[j]) continue;
      ++load[j];
      pick[i] = j;
      rec(i + 1);
      --load[j];
    }
  };
  rec(0);
  return best;
}

inline RebalanceInstance random_rebalance_instance(Rng& rng, int max_vehicles, int max_points) {
  std::uniform_int_distribution<int> nv_d(1, max_vehicles), np_d(1, max_points);
  std::uniform_int_distribution<int> cost_d(0, 600);
  const int nv = nv_d(rng), np = np_d(rng);
  RebalanceInstance inst;
  for (int i = 0; i < nv; ++i) inst.vehicles.push_back(i);
  for (int j = 0; j < np; ++j) inst.points.push_back(j);
  inst.cost.assign(nv, std::vector<Seconds>(np));
  for (auto& row : inst.cost)
    for (auto& c : row) c = cost_d(rng);
  inst.allotments = compute_allotments(nv, np);
  return inst;
}

// ---------------------------------------------------------------------------
// Gradients

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences of the minibatch loss against the analytic gradient.
/// Relative error uses max(|a|, |n|, floor) as denominator.
inline GradientCheck check_loss_gradient(ValueNetParams params, std::span<const TrainingSample> batch,
                                         double h = 1e-5, double floor = 1e-6) {
  std::vector<double> analytic(params.theta.size());
  loss_and_gradient(params, batch, analytic);
  std::vector<double> scratch(params.theta.size());
  GradientCheck out;
  for (std::size_t k = 0; k < params.theta.size(); ++k) {
    const double keep = params.theta[k];
    params.theta[k] = keep + h;
    const double up = loss_and_gradient(params, batch, scratch);
    params.theta[k] = keep - h;
    const double down = loss_and_gradient(params, batch, scratch);
    params.theta[k] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
    const double rel = std::abs(analytic[k] - numeric) / denom;
    if (rel > out.max_rel_error) out = {rel, k, analytic[k], numeric};
  }
  return out;
}

/// Random features with the given shape; stop count drawn from [0, max_stops].
inline StateFeatures random_features(Rng& rng, int embed_dim, int max_stops) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(0, max_stops);
  StateFeatures f;
  f.embed_dim = embed_dim;
  f.num_stops = static_cast<std::size_t>(len(rng));
  f.stop_inputs.resize(f.num_stops * static_cast<std::size_t>(embed_dim + 1));
  for (double& x : f.stop_inputs) x = u(rng);
  f.current.resize(embed_dim);
  for (double& x : f.current) x = u(rng);
  f.epoch_scalar = 0.5 * (u(rng) + 1.0);
  f.nearby = 0.5 * (u(rng) + 1.0);
  f.batch = 1.0 + u(rng);
  return f;
}

/// Randomly initialised net with biases and initial state perturbed too, so
/// every parameter gets a nonzero gradient path.
inline ValueNetParams random_toy_net(Rng& rng, const ValueNetShape& shape) {
  ValueNetParams p = init_value_net(shape, rng());
  std::normal_distribution<double> g(0.0, 0.3);
  const ValueNetLayout L(shape);
  auto jitter = [&](std::size_t at, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) p.theta[at + k] += g(rng);
  };
  const std::size_t H = shape.hidden;
  jitter(L.bz, H);
  jitter(L.br, H);
  jitter(L.bn, H);
  jitter(L.bhn, H);
  jitter(L.h0, H);
  jitter(L.c1, shape.head1);
  jitter(L.c2, shape.head2);
  jitter(L.c3, 1);
  return p;
}

}  // namespace neuradp::oracle
