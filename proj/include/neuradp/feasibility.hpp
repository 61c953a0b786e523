#pragma once

/// \file
/// Per-vehicle feasible action generation: nearest-vehicle pruning, order
/// preserving request insertion under a shared evaluation budget, and
/// breadth-first growth of request groups.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "neuradp/common.hpp"
#include "neuradp/demand.hpp"
#include "neuradp/fleet.hpp"
#include "neuradp/roadnet.hpp"

namespace neuradp {

struct FeasibilityOptions {
  /// Nearest vehicles kept per request.
  int max_candidates = 30;
  /// Route checks allowed per vehicle per epoch.
  std::int64_t eval_cap = 150;
  /// Test-only: unlimited budget and full reordering of all stops.
  bool exhaustive = false;
};

/// Shared counter of route feasibility checks for one vehicle in one epoch.
class EvalBudget {
 public:
  explicit EvalBudget(std::int64_t cap) : cap_(cap) {}
  [[nodiscard]] bool exhausted() const { return used_ >= cap_; }
  bool consume() {
    if (used_ >= cap_) return false;
    ++used_;
    return true;
  }
  [[nodiscard]] std::int64_t used() const { return used_; }
  [[nodiscard]] std::int64_t cap() const { return cap_; }

 private:
  std::int64_t cap_;
  std::int64_t used_ = 0;
};

enum class InsertStatus { kFeasible, kInfeasible, kBudgetExhausted };

struct InsertionResult {
  InsertStatus status = InsertStatus::kInfeasible;
  std::vector<Stop> route;
  Seconds duration = 0.0;
  std::size_t pickup_index = 0;
  std::size_t dropoff_index = 0;
};

/// Inserts the pickup and dropoff of `r` into `stops` without reordering them.
/// Every (pickup, dropoff) position pair checked costs one unit of budget.
/// Returns the feasible insertion with the smallest route duration; ties go to
/// the lexicographically smallest (pickup, dropoff) position. When the budget
/// runs out part-way, the best insertion found so far is returned if any.
inline InsertionResult try_insert(const RouteStart& start, std::span<const Stop> stops,
                                  const Request& r, const RoadNetwork& net, EvalBudget& budget) {
  InsertionResult best;
  const Stop pick = pickup_stop(r);
  const Stop drop = dropoff_stop(r);
  const std::size_t n = stops.size();
  std::vector<Stop> candidate;
  candidate.reserve(n + 2);
  bool cut = false;
  Seconds best_duration = std::numeric_limits<Seconds>::infinity();
  for (std::size_t i = 0; i <= n && !cut; ++i) {
    for (std::size_t j = i; j <= n; ++j) {
      if (!budget.consume()) {
        cut = true;
        break;
      }
      candidate.assign(stops.begin(), stops.begin() + static_cast<std::ptrdiff_t>(i));
      candidate.push_back(pick);
      candidate.insert(candidate.end(), stops.begin() + static_cast<std::ptrdiff_t>(i),
                       stops.begin() + static_cast<std::ptrdiff_t>(j));
      candidate.push_back(drop);
      candidate.insert(candidate.end(), stops.begin() + static_cast<std::ptrdiff_t>(j), stops.end());
      const auto end = evaluate_route(net, start, candidate);
      if (!end) continue;
      const Seconds duration = *end - start.time;
      if (duration < best_duration) {
        best_duration = duration;
        best.status = InsertStatus::kFeasible;
        best.route = candidate;
        best.duration = duration;
        best.pickup_index = i;
        best.dropoff_index = j;
      }
    }
  }
  if (best.status != InsertStatus::kFeasible && cut) best.status = InsertStatus::kBudgetExhausted;
  return best;
}

inline InsertionResult try_insert(const VehicleState& v, const Request& r, const RoadNetwork& net,
                                  EvalBudget& budget) {
  return try_insert(route_start(v), v.trajectory, r, net, budget);
}

namespace detail {

/// Full enumeration over every ordering of all stops (existing and new) that
/// keeps each request's pickup before its dropoff. Test-only completeness mode.
class RouteEnumerator {
 public:
  RouteEnumerator(const RoadNetwork& net, const RouteStart& start, std::vector<Stop> stops)
      : net_(net), start_(start), stops_(std::move(stops)), used_(stops_.size(), 0) {
    for (std::size_t k = 0; k < stops_.size(); ++k) {
      if (stops_[k].kind == StopKind::kPickup) pickup_of_[stops_[k].request_id] = k;
    }
  }

  std::optional<std::pair<std::vector<Stop>, Seconds>> best() {
    current_.clear();
    best_end_ = std::numeric_limits<Seconds>::infinity();
    best_route_.reset();
    dfs(start_.location, start_.time, start_.onboard);
    if (!best_route_) return std::nullopt;
    return std::make_pair(*best_route_, best_end_ - start_.time);
  }

 private:
  void dfs(Location at, Seconds t, int load) {
    if (current_.size() == stops_.size()) {
      if (t < best_end_) {
        best_end_ = t;
        best_route_ = current_;
      }
      return;
    }
    for (std::size_t k = 0; k < stops_.size(); ++k) {
      if (used_[k]) continue;
      const Stop& s = stops_[k];
      if (s.kind == StopKind::kDropoff) {
        auto it = pickup_of_.find(s.request_id);
        if (it != pickup_of_.end() && !used_[it->second]) continue;
      }
      const Seconds arrive = t + net_.travel_time(at, s.location);
      if (arrive > s.deadline) continue;
      const int next_load = load + (s.kind == StopKind::kPickup ? 1 : -1);
      if (next_load > start_.capacity || next_load < 0) continue;
      used_[k] = 1;
      current_.push_back(s);
      dfs(s.location, arrive, next_load);
      current_.pop_back();
      used_[k] = 0;
    }
  }

  const RoadNetwork& net_;
  RouteStart start_;
  std::vector<Stop> stops_;
  std::vector<char> used_;
  std::unordered_map<RequestId, std::size_t> pickup_of_;
  std::vector<Stop> current_;
  Seconds best_end_ = 0.0;
  std::optional<std::vector<Stop>> best_route_;
};

}  // namespace detail

/// Feasible actions of one vehicle; actions[0] is always the null action.
struct FeasibleSet {
  VehicleId vehicle_id = 0;
  std::vector<FeasibleAction> actions;
  std::int64_t evaluations = 0;
  /// Insertions abandoned because the evaluation budget ran out.
  std::int64_t budget_cutoffs = 0;

  [[nodiscard]] bool has_null() const {
    return std::any_of(actions.begin(), actions.end(),
                       [](const FeasibleAction& a) { return a.is_null(); });
  }
};

/// Request id -> candidate vehicle ids (nearest first).
using CandidateMap = std::map<RequestId, std::vector<VehicleId>>;

/// Keeps, per request, the `max_candidates` vehicles with the smallest travel
/// time to its origin among those reaching it within `tau` (inclusive).
inline CandidateMap prune_candidates(std::span<const Request> requests,
                                     std::span<const VehicleState> vehicles, const RoadNetwork& net,
                                     Seconds tau, int max_candidates = 30) {
  CandidateMap out;
  std::vector<std::pair<Seconds, VehicleId>> reach;
  for (const Request& r : requests) {
    reach.clear();
    for (const VehicleState& v : vehicles) {
      const Seconds t = v.edge_remaining + net.travel_time(v.plan_location(), r.origin);
      if (t <= tau) reach.emplace_back(t, v.id);
    }
    std::sort(reach.begin(), reach.end());
    if (static_cast<int>(reach.size()) > max_candidates) reach.resize(std::max(0, max_candidates));
    auto& list = out[r.id];
    for (const auto& [t, id] : reach) list.push_back(id);
  }
  return out;
}

/// Per-vehicle request lists (sorted by id) from a candidate map.
inline std::unordered_map<VehicleId, std::vector<Request>> assignable_by_vehicle(
    const CandidateMap& candidates, std::span<const Request> requests) {
  std::unordered_map<RequestId, const Request*> by_id;
  for (const Request& r : requests) by_id[r.id] = &r;
  std::unordered_map<VehicleId, std::vector<Request>> out;
  for (const auto& [rid, vehicles] : candidates) {
    for (VehicleId v : vehicles) out[v].push_back(*by_id.at(rid));
  }
  for (auto& [v, list] : out) {
    std::sort(list.begin(), list.end(), [](const Request& a, const Request& b) { return a.id < b.id; });
  }
  return out;
}

/// Grows request groups breadth-first: singletons, then extensions of feasible
/// groups by feasible singletons with a larger id, each extension inserted into
/// the smaller group's route. Stops at the evaluation cap or at groups of size
/// `capacity`. The null action is always first.
inline FeasibleSet generate_feasible_set(const VehicleState& v, std::span<const Request> assignable,
                                         const RoadNetwork& net, const FeasibilityOptions& opt = {}) {
  FeasibleSet fs;
  fs.vehicle_id = v.id;
  fs.actions.push_back(null_action(v));

  std::vector<Request> reqs(assignable.begin(), assignable.end());
  std::sort(reqs.begin(), reqs.end(), [](const Request& a, const Request& b) { return a.id < b.id; });

  EvalBudget budget(opt.exhaustive ? std::numeric_limits<std::int64_t>::max() : opt.eval_cap);
  const RouteStart start = route_start(v);

  struct Group {
    std::vector<std::size_t> members;
    std::vector<Stop> route;
  };

  auto extend = [&](const std::vector<Stop>& base,
                    const std::vector<std::size_t>& members) -> std::optional<std::vector<Stop>> {
    const Request& r = reqs[members.back()];
    if (!opt.exhaustive) {
      auto res = try_insert(start, base, r, net, budget);
      if (res.status == InsertStatus::kBudgetExhausted) ++fs.budget_cutoffs;
      if (res.status != InsertStatus::kFeasible) return std::nullopt;
      return std::move(res.route);
    }
    budget.consume();
    std::vector<Stop> all = v.trajectory;
    for (std::size_t m : members) {
      all.push_back(pickup_stop(reqs[m]));
      all.push_back(dropoff_stop(reqs[m]));
    }
    auto best = detail::RouteEnumerator(net, start, std::move(all)).best();
    if (!best) return std::nullopt;
    return std::move(best->first);
  };

  auto emit = [&](const Group& g) {
    FeasibleAction a;
    a.vehicle_id = v.id;
    for (std::size_t m : g.members) a.request_ids.push_back(reqs[m].id);
    a.route = g.route;
    a.immediate_reward = static_cast<double>(g.members.size());
    fs.actions.push_back(std::move(a));
  };

  std::vector<Group> level;
  std::vector<std::size_t> singles;
  for (std::size_t i = 0; i < reqs.size() && !budget.exhausted(); ++i) {
    if (v.capacity < 1) break;
    std::vector<std::size_t> members{i};
    if (auto route = extend(v.trajectory, members)) {
      level.push_back({std::move(members), std::move(*route)});
      singles.push_back(i);
      emit(level.back());
    }
  }
  for (int size = 2; size <= v.capacity && !level.empty() && !budget.exhausted(); ++size) {
    std::vector<Group> next;
    for (const Group& g : level) {
      for (std::size_t s : singles) {
        if (s <= g.members.back()) continue;
        if (budget.exhausted()) break;
        std::vector<std::size_t> members = g.members;
        members.push_back(s);
        if (auto route = extend(g.route, members)) {
          next.push_back({std::move(members), std::move(*route)});
          emit(next.back());
        }
      }
      if (budget.exhausted()) break;
    }
    level = std::move(next);
  }
  fs.evaluations = budget.used();
  return fs;
}

/// Feasible sets for the whole fleet, in vehicle order. Generation is
/// independent per vehicle; `workers > 1` spreads it over threads.
inline std::vector<FeasibleSet> generate_fleet_feasible_sets(std::span<const VehicleState> vehicles,
                                                            std::span<const Request> batch,
                                                            const RoadNetwork& net, Seconds tau,
                                                            const FeasibilityOptions& opt,
                                                            int workers = 1) {
  const auto candidates = prune_candidates(batch, vehicles, net, tau, opt.max_candidates);
  const auto per_vehicle = assignable_by_vehicle(candidates, batch);
  std::vector<FeasibleSet> out(vehicles.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    static const std::vector<Request> kNone;
    for (std::size_t i = begin; i < end; ++i) {
      auto it = per_vehicle.find(vehicles[i].id);
      const auto& list = it == per_vehicle.end() ? kNone : it->second;
      out[i] = generate_feasible_set(vehicles[i], list, net, opt);
    }
  };
  if (workers <= 1 || vehicles.size() < 2) {
    work(0, vehicles.size());
  } else {
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), vehicles.size());
    std::vector<std::thread> pool;
    const std::size_t chunk = (vehicles.size() + w - 1) / w;
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t b = k * chunk, e = std::min(vehicles.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace neuradp
