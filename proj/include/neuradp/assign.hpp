#pragma once

/// \file
/// Exact solver for the epoch assignment integer program: every vehicle takes
/// exactly one of its actions (the null action included), no request is used
/// twice, and the summed action scores are maximal.
///
/// Branch-and-bound over vehicles in index order. The bound relaxes the
/// request constraints between unfixed vehicles: prefix value plus, for every
/// remaining vehicle, its best action compatible with the prefix. A greedy
/// incumbent seeds pruning. Vehicles that share no request candidates are
/// solved independently. Among optimal assignments the lexicographically
/// smallest action-index vector is returned.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuradp/common.hpp"
#include "neuradp/feasibility.hpp"

namespace neuradp {

struct VehicleChoices {
  std::vector<std::vector<RequestId>> requests;  // per action
  std::vector<double> scores;                    // per action
};

struct AssignmentInstance {
  std::vector<VehicleChoices> vehicles;
};

struct Assignment {
  std::vector<std::size_t> chosen;  // action index per vehicle
  double objective = 0.0;
  std::int64_t nodes = 0;
  /// Node limit hit: `chosen` is the greedy solution, not a proven optimum.
  bool fallback = false;
};

struct SolveOptions {
  std::int64_t node_limit = 20'000'000;
  /// Throw instead of falling back to greedy when the node limit is hit.
  bool strict = false;
};

class NodeLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline AssignmentInstance make_instance(std::span<const FeasibleSet> sets,
                                        std::span<const std::vector<double>> scores) {
  if (sets.size() != scores.size()) throw ContractError("score table does not match feasible sets");
  AssignmentInstance inst;
  inst.vehicles.resize(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].actions.size() != scores[i].size()) {
      throw ContractError("score count does not match action count");
    }
    for (const auto& a : sets[i].actions) inst.vehicles[i].requests.push_back(a.request_ids);
    inst.vehicles[i].scores = scores[i];
  }
  return inst;
}

namespace detail {

class AssignmentSolver {
 public:
  explicit AssignmentSolver(const AssignmentInstance& inst) : inst_(inst) {
    const std::size_t nv = inst.vehicles.size();
    actions_.resize(nv);
    order_.resize(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const auto& vc = inst.vehicles[i];
      if (vc.requests.size() != vc.scores.size()) throw ContractError("ragged assignment instance");
      bool has_null = false;
      actions_[i].resize(vc.requests.size());
      for (std::size_t a = 0; a < vc.requests.size(); ++a) {
        if (!std::isfinite(vc.scores[a])) throw ContractError("non-finite action score");
        if (vc.requests[a].empty()) has_null = true;
        for (RequestId r : vc.requests[a]) {
          auto [it, inserted] = req_index_.try_emplace(r, static_cast<int>(req_index_.size()));
          actions_[i][a].push_back(it->second);
        }
      }
      if (!has_null) throw ContractError("vehicle " + std::to_string(i) + " lacks a null action");
      order_[i].resize(vc.scores.size());
      std::iota(order_[i].begin(), order_[i].end(), 0);
      std::stable_sort(order_[i].begin(), order_[i].end(), [&](std::size_t x, std::size_t y) {
        return vc.scores[x] > vc.scores[y];
      });
    }
    used_.assign(req_index_.size(), 0);
    double scale = 1.0;
    for (const auto& vc : inst.vehicles)
      for (double s : vc.scores) scale += std::abs(s);
    tol_ = 1e-12 * scale;
  }

  Assignment solve(const SolveOptions& opt) {
    const std::size_t nv = inst_.vehicles.size();
    Assignment out;
    out.chosen.assign(nv, 0);
    node_limit_ = opt.node_limit;
    nodes_ = 0;

    // Components of the vehicle/request sharing graph.
    std::vector<std::size_t> parent(nv);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::vector<long> owner(req_index_.size(), -1);
    for (std::size_t i = 0; i < nv; ++i) {
      for (const auto& act : actions_[i]) {
        for (int r : act) {
          if (owner[r] < 0) {
            owner[r] = static_cast<long>(i);
          } else {
            parent[find(i)] = find(static_cast<std::size_t>(owner[r]));
          }
        }
      }
    }
    std::unordered_map<std::size_t, std::vector<std::size_t>> comps;
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < nv; ++i) {
      auto [it, inserted] = comps.try_emplace(find(i));
      if (inserted) roots.push_back(it->first);
      it->second.push_back(i);
    }

    bool fallback = false;
    for (std::size_t root : roots) {
      const auto& members = comps[root];
      std::vector<std::size_t> choice;
      if (!solve_component(members, choice)) {
        if (opt.strict) throw NodeLimitExceeded("assignment node limit exceeded");
        fallback = true;
        choice = greedy(members);
      }
      for (std::size_t k = 0; k < members.size(); ++k) out.chosen[members[k]] = choice[k];
    }
    out.fallback = fallback;
    out.nodes = nodes_;
    out.objective = objective_of(inst_, out.chosen);
    return out;
  }

  static double objective_of(const AssignmentInstance& inst, std::span<const std::size_t> chosen) {
    double total = 0.0;
    for (std::size_t i = 0; i < chosen.size(); ++i) total += inst.vehicles[i].scores[chosen[i]];
    return total;
  }

  /// Prefix value plus best compatible action per remaining vehicle.
  double bound(std::span<const std::size_t> prefix) {
    std::fill(used_.begin(), used_.end(), 0);
    double value = 0.0;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      value += inst_.vehicles[i].scores[prefix[i]];
      for (int r : actions_[i][prefix[i]]) ++used_[r];
    }
    for (std::size_t i = prefix.size(); i < inst_.vehicles.size(); ++i) value += best_free(i);
    return value;
  }

 private:
  double score(std::size_t v, std::size_t a) const { return inst_.vehicles[v].scores[a]; }

  bool compatible(std::size_t v, std::size_t a) const {
    for (int r : actions_[v][a])
      if (used_[r]) return false;
    return true;
  }
  void take(std::size_t v, std::size_t a, int delta) {
    for (int r : actions_[v][a]) used_[r] += delta;
  }
  double best_free(std::size_t v) const {
    for (std::size_t a : order_[v])
      if (compatible(v, a)) return score(v, a);
    return -std::numeric_limits<double>::infinity();  // unreachable: null is always free
  }

  /// Vehicles by descending gap between best and null score; each takes its
  /// best action compatible with earlier picks.
  std::vector<std::size_t> greedy(const std::vector<std::size_t>& members) {
    std::vector<std::size_t> by_gap(members.size());
    std::iota(by_gap.begin(), by_gap.end(), 0);
    auto gap = [&](std::size_t k) {
      const std::size_t v = members[k];
      double null_score = 0.0;
      for (std::size_t a = 0; a < actions_[v].size(); ++a)
        if (actions_[v][a].empty()) {
          null_score = score(v, a);
          break;
        }
      return score(v, order_[v].front()) - null_score;
    };
    std::stable_sort(by_gap.begin(), by_gap.end(),
                     [&](std::size_t x, std::size_t y) { return gap(x) > gap(y); });
    std::vector<std::size_t> choice(members.size(), 0);
    for (std::size_t k : by_gap) {
      const std::size_t v = members[k];
      for (std::size_t a : order_[v]) {
        if (compatible(v, a)) {
          choice[k] = a;
          take(v, a, +1);
          break;
        }
      }
    }
    for (std::size_t k = 0; k < members.size(); ++k) take(members[k], choice[k], -1);
    return choice;
  }

  bool solve_component(const std::vector<std::size_t>& members, std::vector<std::size_t>& choice) {
    members_ = &members;
    const auto seed = greedy(members);
    incumbent_floor_ = 0.0;
    for (std::size_t k = 0; k < members.size(); ++k) incumbent_floor_ += score(members[k], seed[k]);
    best_value_ = -std::numeric_limits<double>::infinity();
    current_.assign(members.size(), 0);
    best_.clear();
    aborted_ = false;
    dfs(0, 0.0);
    if (aborted_) return false;
    if (best_.empty()) best_ = seed;  // only possible through rounding at the floor
    choice = best_;
    return true;
  }

  void dfs(std::size_t depth, double value) {
    const auto& members = *members_;
    if (depth == members.size()) {
      if (value > best_value_ + tol_) {
        best_value_ = value;
        best_ = current_;
      }
      return;
    }
    const std::size_t v = members[depth];
    for (std::size_t a = 0; a < actions_[v].size(); ++a) {
      if (!compatible(v, a)) continue;
      if (++nodes_ > node_limit_) {
        aborted_ = true;
        return;
      }
      take(v, a, +1);
      const double child = value + score(v, a);
      double ub = child;
      for (std::size_t k = depth + 1; k < members.size(); ++k) ub += best_free(members[k]);
      if (ub >= incumbent_floor_ - tol_ && ub > best_value_ + tol_) {
        current_[depth] = a;
        dfs(depth + 1, child);
      }
      take(v, a, -1);
      if (aborted_) return;
    }
  }

  const AssignmentInstance& inst_;
  std::unordered_map<RequestId, int> req_index_;
  std::vector<std::vector<std::vector<int>>> actions_;
  std::vector<std::vector<std::size_t>> order_;
  std::vector<int> used_;
  double tol_ = 0.0;

  const std::vector<std::size_t>* members_ = nullptr;
  std::vector<std::size_t> current_, best_;
  double best_value_ = 0.0;
  double incumbent_floor_ = 0.0;
  std::int64_t nodes_ = 0;
  std::int64_t node_limit_ = 0;
  bool aborted_ = false;
};

}  // namespace detail

inline Assignment solve(const AssignmentInstance& instance, const SolveOptions& opt = {}) {
  return detail::AssignmentSolver(instance).solve(opt);
}

/// Upper bound on any completion of `prefix` (actions fixed for vehicles 0..k-1).
inline double relaxation_bound(const AssignmentInstance& instance, std::span<const std::size_t> prefix) {
  if (prefix.size() > instance.vehicles.size()) throw ContractError("prefix longer than instance");
  return detail::AssignmentSolver(instance).bound(prefix);
}

/// Checks one-action-per-vehicle and at-most-once request use.
inline bool is_feasible_assignment(const AssignmentInstance& inst, std::span<const std::size_t> chosen) {
  if (chosen.size() != inst.vehicles.size()) return false;
  std::unordered_map<RequestId, int> seen;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i] >= inst.vehicles[i].scores.size()) return false;
    for (RequestId r : inst.vehicles[i].requests[chosen[i]])
      if (++seen[r] > 1) return false;
  }
  return true;
}

inline void to_json(nlohmann::json& j, const AssignmentInstance& inst) {
  j = nlohmann::json::array();
  for (const auto& v : inst.vehicles) j.push_back({{"requests", v.requests}, {"scores", v.scores}});
  j = {{"format", "neuradp-assignment"}, {"version", 1}, {"vehicles", j}};
}

inline void from_json(const nlohmann::json& j, AssignmentInstance& inst) {
  if (j.at("format").get<std::string>() != "neuradp-assignment" || j.at("version").get<int>() != 1) {
    throw ConfigError("not a version-1 assignment instance");
  }
  inst.vehicles.clear();
  for (const auto& v : j.at("vehicles")) {
    VehicleChoices vc;
    vc.requests = v.at("requests").get<std::vector<std::vector<RequestId>>>();
    vc.scores = v.at("scores").get<std::vector<double>>();
    inst.vehicles.push_back(std::move(vc));
  }
}

inline void save_instance(const std::string& path, const AssignmentInstance& inst) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  // max_digits10 keeps doubles bit-exact through text.
  out << nlohmann::json(inst).dump(1) << '\n';
}

inline AssignmentInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return nlohmann::json::parse(in).get<AssignmentInstance>();
}

}  // namespace neuradp
