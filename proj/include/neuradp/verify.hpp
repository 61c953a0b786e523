#pragma once

/// \file
/// Seeded oracle suites shared by `neuradp verify` and the acceptance runner.

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "neuradp/oracles.hpp"
#include "neuradp/replay.hpp"
#include "neuradp/sim.hpp"

namespace neuradp::verify {

struct SuiteResult {
  std::string name;
  bool passed = true;
  int cases = 0;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline void fail(SuiteResult& r, const std::string& why) {
  if (r.passed) r.detail = why;
  r.passed = false;
}

}  // namespace detail

/// Branch-and-bound objective and lex-min choice equal joint enumeration; the
/// relaxation bound dominates every completion of random prefixes.
inline SuiteResult assignment_suite(int instances = 100, std::uint64_t seed = 11) {
  SuiteResult r;
  r.name = "assignment exactness";
  detail::Timer timer;
  Rng rng(seed);
  for (int k = 0; k < instances; ++k) {
    const auto inst = oracle::random_assignment_instance(rng, 5, 6, 8);
    const auto brute = oracle::brute_force_assignment(inst);
    const auto got = solve(inst, {.node_limit = 20'000'000, .strict = true});
    ++r.cases;
    if (got.objective != brute.objective || got.chosen != brute.chosen) {
      std::ostringstream os;
      os << "instance " << k << ": solver " << got.objective << " vs brute force " << brute.objective;
      detail::fail(r, os.str());
    }
    if (!is_feasible_assignment(inst, got.chosen)) detail::fail(r, "instance " + std::to_string(k) + ": infeasible");
    // Bound versus the best completion of a random prefix.
    std::vector<std::size_t> prefix;
    for (std::size_t i = 0; i < inst.vehicles.size() / 2; ++i) {
      prefix.push_back(std::uniform_int_distribution<std::size_t>(0, inst.vehicles[i].scores.size() - 1)(rng));
    }
    AssignmentInstance rest = inst;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      rest.vehicles[i].requests = {inst.vehicles[i].requests[prefix[i]]};
      rest.vehicles[i].scores = {inst.vehicles[i].scores[prefix[i]]};
    }
    bool prefix_ok = true;
    std::set<RequestId> used;
    for (std::size_t i = 0; i < prefix.size(); ++i)
      for (RequestId q : rest.vehicles[i].requests[0]) prefix_ok &= used.insert(q).second;
    if (!prefix_ok) continue;
    const double bound = relaxation_bound(inst, prefix);
    const double best = oracle::brute_force_assignment(rest).objective;
    if (std::isfinite(best) && bound + 1e-9 < best) {
      detail::fail(r, "instance " + std::to_string(k) + ": bound below best completion");
    }
  }
  r.seconds = timer.seconds();
  return r;
}

/// Every generated action replays under Floyd-Warshall times; in exhaustive
/// mode the groups equal the brute-force feasible groups with equal completion times.
inline SuiteResult feasibility_suite(int instances = 200, std::uint64_t seed = 12) {
  SuiteResult r;
  r.name = "feasibility soundness and completeness";
  detail::Timer timer;
  Rng rng(seed);
  std::uniform_real_distribution<double> tau_d(120.0, 420.0);
  for (int k = 0; k < instances; ++k) {
    const RoadNetwork net = oracle::random_micro_network(rng, 10);
    const auto tt = oracle::floyd_warshall(net);
    const Seconds tau = std::round(tau_d(rng));
    const DelayConstraints delays{tau, std::round(tau * std::uniform_real_distribution<double>(0.5, 2.0)(rng))};
    const auto mi = oracle::random_micro_instance(rng, net, 3, 3, delays);
    ++r.cases;
    const std::string tag = "instance " + std::to_string(k) + ": ";

    for (bool exhaustive : {false, true}) {
      FeasibilityOptions opt;
      opt.exhaustive = exhaustive;
      const FeasibleSet fs = generate_feasible_set(mi.vehicle, mi.requests, net, opt);
      if (fs.actions.empty() || !fs.actions[0].is_null() ||
          std::count_if(fs.actions.begin(), fs.actions.end(), [](const auto& a) { return a.is_null(); }) != 1) {
        detail::fail(r, tag + "null action missing or duplicated");
      }
      std::map<std::vector<RequestId>, Seconds> groups;
      for (const auto& a : fs.actions) {
        if (a.is_null()) continue;
        std::vector<Request> added;
        for (RequestId id : a.request_ids)
          for (const auto& q : mi.requests)
            if (q.id == id) added.push_back(q);
        const auto check = oracle::replay_route(tt, mi.vehicle, a.route, added);
        if (!check.ok) detail::fail(r, tag + "action fails replay: " + check.reason);
        if (a.immediate_reward != static_cast<double>(a.request_ids.size())) detail::fail(r, tag + "reward mismatch");
        groups[a.request_ids] = check.end_time;
      }
      if (!exhaustive) continue;
      const auto brute = oracle::brute_force_feasible_set(tt, mi.vehicle, mi.requests);
      if (groups.size() != brute.groups.size()) {
        detail::fail(r, tag + "exhaustive set has " + std::to_string(groups.size()) + " groups, brute force " +
                            std::to_string(brute.groups.size()));
        continue;
      }
      for (const auto& [g, end] : brute.groups) {
        auto it = groups.find(g);
        if (it == groups.end()) {
          detail::fail(r, tag + "brute-force group missing");
        } else if (it->second != end) {
          detail::fail(r, tag + "route not the earliest completion");
        }
      }
    }
  }
  r.seconds = timer.seconds();
  return r;
}

/// Analytic loss gradient versus central differences on small seeded nets.
inline SuiteResult gradient_suite(int nets = 10, std::uint64_t seed = 13, double tolerance = 1e-4) {
  SuiteResult r;
  r.name = "gradient check";
  detail::Timer timer;
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < nets; ++k) {
    std::uniform_int_distribution<int> small(1, 4);
    ValueNetShape shape{small(rng), small(rng) + 1, small(rng) + 1, small(rng)};
    const ValueNetParams params = oracle::random_toy_net(rng, shape);
    std::vector<TrainingSample> batch(4);
    for (std::size_t s = 0; s < batch.size(); ++s) {
      batch[s].input = oracle::random_features(rng, shape.embed_dim, 4);
      batch[s].target = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
      batch[s].weight = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
    }
    const auto check = oracle::check_loss_gradient(params, batch);
    ++r.cases;
    worst = std::max(worst, check.max_rel_error);
    if (!(check.max_rel_error < tolerance)) {
      std::ostringstream os;
      os << "net " << k << ": parameter " << check.worst_index << " analytic " << check.analytic << " numeric "
         << check.numeric;
      detail::fail(r, os.str());
    }
  }
  if (r.passed) {
    std::ostringstream os;
    os << "max relative error " << worst;
    r.detail = os.str();
  }
  r.seconds = timer.seconds();
  return r;
}

/// Min-cost flow cost equals exhaustive matching; one target per vehicle within allotments.
inline SuiteResult rebalance_suite(int instances = 100, std::uint64_t seed = 14) {
  SuiteResult r;
  r.name = "rebalance optimality";
  detail::Timer timer;
  Rng rng(seed);
  for (int k = 0; k < instances; ++k) {
    const auto inst = oracle::random_rebalance_instance(rng, 6, 6);
    const auto plan = solve_rebalance(inst);
    const auto brute = oracle::brute_force_rebalance(inst);
    ++r.cases;
    const std::string tag = "instance " + std::to_string(k) + ": ";
    if (plan.total_cost != brute.cost) detail::fail(r, tag + "cost differs from brute force");
    std::vector<int> load(inst.points.size(), 0);
    if (plan.target.size() != inst.vehicles.size()) detail::fail(r, tag + "vehicle without target");
    for (std::size_t t : plan.target) {
      if (t >= inst.points.size()) {
        detail::fail(r, tag + "vehicle without target");
        continue;
      }
      ++load[t];
    }
    for (std::size_t j = 0; j < load.size(); ++j)
      if (load[j] > inst.allotments[j]) detail::fail(r, tag + "allotment exceeded");
  }
  r.seconds = timer.seconds();
  return r;
}

/// Priorities {1, 3} with alpha = 1: share of draws of the second entry lies
/// within three binomial standard deviations of 3/4.
inline SuiteResult replay_suite(int draws = 100000, std::uint64_t seed = 15) {
  SuiteResult r;
  r.name = "replay statistics";
  detail::Timer timer;
  ReplayConfig cfg;
  cfg.capacity = 2;
  cfg.alpha = 1.0;
  cfg.epsilon = 1e-12;
  ReplayMemory<int> mem(cfg);
  mem.push(0);
  mem.push(1);
  mem.update_priorities({mem.index_of(0), mem.index_of(1)}, {1.0 - cfg.epsilon, 3.0 - cfg.epsilon});
  Rng rng(seed);
  std::int64_t second = 0;
  for (int k = 0; k < draws; ++k) {
    const auto s = mem.sample(1, rng);
    if (*s.items[0] == 1) ++second;
  }
  const double p = 0.75;
  const double mean = p * draws, sd = std::sqrt(draws * p * (1.0 - p));
  r.cases = draws;
  std::ostringstream os;
  os << second << " of " << draws << " draws (expected " << mean << " +- " << 3 * sd << ")";
  r.detail = os.str();
  r.passed = std::abs(static_cast<double>(second) - mean) <= 3.0 * sd;
  r.seconds = timer.seconds();
  return r;
}

/// Zero-weight value network without noise picks the baseline's assignment in every epoch.
inline SuiteResult zero_network_suite(const RoadNetwork& net, const RunConfig& base_cfg, int epochs = 200) {
  SuiteResult r;
  r.name = "zero-network reduction";
  detail::Timer timer;
  RunConfig cfg = base_cfg;
  cfg.horizon_epochs = epochs;
  const ValueNetParams zero(cfg.network);
  LocationEmbedding emb;
  {
    EmbeddingOptions eo = cfg.embedding;
    eo.steps = 50;
    eo.seed = derive_seed(cfg.training_seed, "embedding");
    emb = train_embeddings(net, eo).embedding;
  }
  const FeatureScales scales = feature_scales(cfg, expected_mean_batch(cfg));
  const DaySeeds seeds = day_seeds(cfg, "eval-day", 0);
  EpisodeSinks keep;
  keep.keep_epochs = true;
  const auto a = run_episode(net, cfg, seeds, baseline_policy(), keep);
  const auto b = run_episode(net, cfg, seeds, value_policy(zero, emb, scales), keep);
  r.cases = static_cast<int>(a.chosen.size());
  if (a.chosen.size() != static_cast<std::size_t>(epochs) || a.chosen != b.chosen) {
    detail::fail(r, "assignments differ");
  }
  if (a.final_hash != b.final_hash || a.served != b.served) detail::fail(r, "final states differ");
  std::ostringstream os;
  os << epochs << " epochs, " << a.served << " of " << a.generated << " served by both";
  if (r.passed) r.detail = os.str();
  r.seconds = timer.seconds();
  return r;
}

}  // namespace neuradp::verify
