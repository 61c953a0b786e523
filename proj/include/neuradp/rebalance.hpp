#pragma once

/// \file
/// Rebalancing of idle vehicles toward sampled historical request origins:
/// a capacitated transportation problem solved exactly as min-cost flow.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <span>
#include <vector>

#include "neuradp/common.hpp"
#include "neuradp/fleet.hpp"
#include "neuradp/roadnet.hpp"

namespace neuradp {

struct RebalanceInstance {
  std::vector<VehicleId> vehicles;
  std::vector<Location> points;
  /// cost[i][j]: seconds from vehicle i's position to point j.
  std::vector<std::vector<Seconds>> cost;
  std::vector<int> allotments;
};

struct RebalancePlan {
  /// Index into `points` per vehicle.
  std::vector<std::size_t> target;
  Seconds total_cost = 0.0;
};

/// Uniform sample with replacement of min(count, num_vehicles) origins.
inline std::vector<Location> sample_demand(std::span<const Location> history, std::size_t count,
                                           std::size_t num_vehicles, Rng& rng) {
  if (history.empty()) return {};
  const std::size_t n = std::min(count, num_vehicles);
  std::uniform_int_distribution<std::size_t> pick(0, history.size() - 1);
  std::vector<Location> out(n);
  for (auto& loc : out) loc = history[pick(rng)];
  return out;
}

inline std::vector<Location> sample_demand(std::span<const Location> history, std::size_t count,
                                           std::size_t num_vehicles, std::uint64_t seed) {
  Rng rng(seed);
  return sample_demand(history, count, num_vehicles, rng);
}

/// Floor/ceil split of vehicles over points; the surplus goes to the lowest indices.
inline std::vector<int> compute_allotments(std::size_t num_vehicles, std::size_t num_points) {
  if (num_points < 1) throw ContractError("allotments need at least one demand point");
  std::vector<int> n(num_points, static_cast<int>(num_vehicles / num_points));
  const std::size_t extra = num_vehicles % num_points;
  for (std::size_t j = 0; j < extra; ++j) ++n[j];
  return n;
}

inline RebalanceInstance make_rebalance_instance(std::span<const VehicleState> idle,
                                                 std::vector<Location> points, const RoadNetwork& net) {
  RebalanceInstance inst;
  for (const auto& v : idle) inst.vehicles.push_back(v.id);
  inst.points = std::move(points);
  inst.cost.resize(idle.size());
  for (std::size_t i = 0; i < idle.size(); ++i) {
    for (Location p : inst.points) {
      inst.cost[i].push_back(idle[i].edge_remaining + net.travel_time(idle[i].plan_location(), p));
    }
  }
  if (!inst.points.empty()) inst.allotments = compute_allotments(idle.size(), inst.points.size());
  return inst;
}

/// Successive shortest augmenting paths with Johnson potentials.
inline RebalancePlan solve_rebalance(const RebalanceInstance& inst) {
  const std::size_t nv = inst.vehicles.size();
  const std::size_t np = inst.points.size();
  RebalancePlan plan;
  if (nv == 0) return plan;
  if (inst.allotments.size() != np || inst.cost.size() != nv) {
    throw ContractError("rebalance instance dimensions disagree");
  }
  long supply = 0;
  for (int a : inst.allotments) {
    if (a < 0) throw ContractError("negative allotment");
    supply += a;
  }
  if (supply != static_cast<long>(nv)) throw ContractError("allotments do not sum to the vehicle count");

  // Nodes: source, vehicles, points, sink.
  const std::size_t src = 0, sink = 1 + nv + np, n = sink + 1;
  struct Arc {
    std::size_t to;
    int cap;
    double cost;
    std::size_t rev;
  };
  std::vector<std::vector<Arc>> g(n);
  auto add = [&](std::size_t u, std::size_t v, int cap, double cost) {
    g[u].push_back({v, cap, cost, g[v].size()});
    g[v].push_back({u, 0, -cost, g[u].size() - 1});
  };
  for (std::size_t i = 0; i < nv; ++i) add(src, 1 + i, 1, 0.0);
  for (std::size_t i = 0; i < nv; ++i) {
    if (inst.cost[i].size() != np) throw ContractError("cost row size mismatch");
    for (std::size_t j = 0; j < np; ++j) add(1 + i, 1 + nv + j, 1, inst.cost[i][j]);
  }
  for (std::size_t j = 0; j < np; ++j) add(1 + nv + j, sink, inst.allotments[j], 0.0);

  std::vector<double> potential(n, 0.0), dist(n);
  std::vector<std::size_t> prev_node(n), prev_arc(n);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t flow = 0; flow < nv; ++flow) {
    std::fill(dist.begin(), dist.end(), inf);
    dist[src] = 0.0;
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, src});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (std::size_t k = 0; k < g[u].size(); ++k) {
        const Arc& e = g[u][k];
        if (e.cap <= 0) continue;
        // Reduced costs are nonnegative up to rounding; clamp keeps Dijkstra sound.
        const double rc = std::max(0.0, e.cost + potential[u] - potential[e.to]);
        if (d + rc < dist[e.to]) {
          dist[e.to] = d + rc;
          prev_node[e.to] = u;
          prev_arc[e.to] = k;
          pq.push({dist[e.to], e.to});
        }
      }
    }
    if (dist[sink] == inf) throw ContractError("rebalance flow infeasible");
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] < inf) potential[v] += dist[v];
    for (std::size_t v = sink; v != src; v = prev_node[v]) {
      Arc& e = g[prev_node[v]][prev_arc[v]];
      e.cap -= 1;
      g[v][e.rev].cap += 1;
    }
  }

  plan.target.assign(nv, np);
  for (std::size_t i = 0; i < nv; ++i) {
    for (const Arc& e : g[1 + i]) {
      if (e.to >= 1 + nv && e.to < 1 + nv + np && e.cap == 0) {
        plan.target[i] = e.to - 1 - nv;
        plan.total_cost += inst.cost[i][plan.target[i]];
      }
    }
  }
  return plan;
}

}  // namespace neuradp
