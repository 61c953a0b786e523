#pragma once

/// \file
/// Epoch loop (batch intake, pruning, feasible actions, scoring, assignment,
/// rebalancing, motion), training episodes and evaluation rollouts.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuradp/assign.hpp"
#include "neuradp/common.hpp"
#include "neuradp/demand.hpp"
#include "neuradp/feasibility.hpp"
#include "neuradp/fleet.hpp"
#include "neuradp/rebalance.hpp"
#include "neuradp/replay.hpp"
#include "neuradp/roadnet.hpp"
#include "neuradp/valuefn.hpp"

namespace neuradp {

struct DemandConfig {
  RateProfile profile = RateProfile::constant(1 << 30, 4.0);
  /// Optional hotspot on origins; center kNoLocation = uniform.
  Location hotspot_center = kNoLocation;
  double hotspot_amplitude = 0.0;
  Seconds hotspot_scale = 300.0;
  /// When set, every day replays this trip file instead of sampling.
  std::string trips_file;
};

struct RunConfig {
  // city
  std::string network_file;
  int grid_rows = 10;
  int grid_cols = 10;
  Seconds grid_edge_seconds = 60.0;

  Seconds delta = 60.0;
  DelayConstraints delays{300.0, 600.0};
  int fleet_size = 20;
  int capacity = 4;
  int horizon_epochs = 180;
  DemandConfig demand;

  std::uint64_t demand_seed = 1;
  std::uint64_t placement_seed = 2;
  std::uint64_t training_seed = 3;

  FeasibilityOptions feasibility;
  SolveOptions solve;
  int workers = 1;
  bool rebalance = true;
  int rebalance_samples = 500;

  EmbeddingOptions embedding;
  ValueNetShape network;
  TrainerConfig trainer;
  ReplayConfig replay;
  /// "random" or "zero".
  std::string init = "random";
  int episodes = 10;
  int update_every = 1;
  int minibatch = 32;
  double divergence_loss = 1e6;
  int divergence_patience = 5;

  int eval_days = 5;
  /// Where a diagnostic snapshot goes when an epoch fails; empty = none.
  std::string snapshot_dir;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(what);
    };
    require(delays.tau > 0.0, "tau must be positive");
    require(delays.lambda >= 0.0, "lambda must be nonnegative");
    require(delta > 0.0, "delta must be positive");
    require(capacity >= 1, "capacity must be at least 1");
    require(fleet_size >= 1, "fleet size must be at least 1");
    require(horizon_epochs >= 1, "horizon must be at least one epoch");
    require(network_file.empty() ? (grid_rows >= 1 && grid_cols >= 1 && grid_rows * grid_cols >= 2) : true,
            "grid needs at least two locations");
    require(grid_edge_seconds > 0.0, "grid edge seconds must be positive");
    require(feasibility.max_candidates >= 0 && feasibility.eval_cap >= 0, "feasibility limits must be nonnegative");
    require(workers >= 1, "workers must be at least 1");
    require(rebalance_samples >= 1, "rebalance samples must be at least 1");
    require(embedding.dim == network.embed_dim, "embedding dimension must equal the value network's");
    require(network.hidden >= 1 && network.head1 >= 1 && network.head2 >= 1, "layer sizes must be positive");
    require(trainer.gamma >= 0.0 && trainer.gamma < 1.0, "gamma must lie in [0, 1)");
    require(trainer.noise_start >= 0.0 && trainer.noise_end >= 0.0, "noise scales must be nonnegative");
    require(trainer.adam.lr > 0.0, "learning rate must be positive");
    require(replay.capacity >= 1 && replay.epsilon > 0.0 && replay.alpha >= 0.0, "invalid replay settings");
    require(init == "random" || init == "zero", "init must be random or zero");
    require(episodes >= 0 && update_every >= 1 && minibatch >= 1, "invalid training schedule");
    require(divergence_patience >= 1, "divergence patience must be at least 1");
    require(eval_days >= 1, "eval days must be at least 1");
  }
};

inline RoadNetwork make_city(const RunConfig& cfg) {
  if (!cfg.network_file.empty()) return load_network(cfg.network_file);
  return make_grid_network(cfg.grid_rows, cfg.grid_cols, cfg.grid_edge_seconds);
}

inline DemandStream make_demand(const RoadNetwork& net, const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.demand.trips_file.empty()) {
    auto res = ingest_trips(cfg.demand.trips_file, net, cfg.delta, cfg.delays);
    res.batches.resize(static_cast<std::size_t>(cfg.horizon_epochs));
    for (std::size_t e = 0; e < res.batches.size(); ++e) res.batches[e].epoch = static_cast<int>(e);
    return res.batches;
  }
  DemandOptions opt;
  opt.horizon_epochs = cfg.horizon_epochs;
  opt.profile = cfg.demand.profile;
  if (cfg.demand.hotspot_center != kNoLocation && cfg.demand.hotspot_amplitude > 0.0) {
    opt.spatial.origin =
        SpatialWeights::hotspot(net, cfg.demand.hotspot_center, cfg.demand.hotspot_amplitude, cfg.demand.hotspot_scale);
  }
  opt.delta = cfg.delta;
  opt.delays = cfg.delays;
  opt.seed = seed;
  return generate_demand(net, opt);
}

/// Feature normalisation derived from the run configuration.
inline FeatureScales feature_scales(const RunConfig& cfg, double mean_batch) {
  FeatureScales s;
  s.delay_scale = cfg.delays.tau + cfg.delays.lambda;
  s.fleet_size = cfg.fleet_size;
  s.mean_batch = std::max(mean_batch, 1e-9);
  s.horizon_epochs = cfg.horizon_epochs;
  s.nearby_radius = cfg.delays.tau;
  return s;
}

inline double expected_mean_batch(const RunConfig& cfg) {
  double sum = 0.0;
  for (int e = 0; e < cfg.horizon_epochs; ++e) sum += cfg.demand.profile.rate(e);
  return sum / cfg.horizon_epochs;
}

// ---------------------------------------------------------------------------
// Metrics

struct StepTiming {
  double feasibility_ms = 0.0;
  double scoring_ms = 0.0;
  double assignment_ms = 0.0;
  double rebalance_ms = 0.0;
  double total_ms = 0.0;
  /// Intake through assignment.
  [[nodiscard]] double dispatch_ms() const { return feasibility_ms + scoring_ms + assignment_ms; }
};

struct EpochMetrics {
  int epoch = 0;
  int requests_seen = 0;
  int requests_served = 0;
  int requests_dropped = 0;
  std::int64_t cumulative_seen = 0;
  std::int64_t cumulative_served = 0;
  double service_rate = 0.0;
  double objective = 0.0;
  std::int64_t solver_nodes = 0;
  bool solver_fallback = false;
  std::int64_t feasibility_evaluations = 0;
  std::int64_t budget_cutoffs = 0;
  std::int64_t actions = 0;
  int rebalanced = 0;
  Seconds rebalance_cost = 0.0;
  int pickups = 0;
  int dropoffs = 0;
  StepTiming timing;
};

/// Deterministic fields only; timings are written separately.
inline void to_json(nlohmann::json& j, const EpochMetrics& m) {
  j = {{"epoch", m.epoch},
       {"requests_seen", m.requests_seen},
       {"requests_served", m.requests_served},
       {"requests_dropped", m.requests_dropped},
       {"cumulative_seen", m.cumulative_seen},
       {"cumulative_served", m.cumulative_served},
       {"service_rate", m.service_rate},
       {"objective", m.objective},
       {"solver_nodes", m.solver_nodes},
       {"solver_fallback", m.solver_fallback},
       {"feasibility_evaluations", m.feasibility_evaluations},
       {"budget_cutoffs", m.budget_cutoffs},
       {"actions", m.actions},
       {"rebalanced", m.rebalanced},
       {"rebalance_cost", m.rebalance_cost},
       {"pickups", m.pickups},
       {"dropoffs", m.dropoffs}};
}

inline nlohmann::json timing_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"feasibility_ms", m.timing.feasibility_ms},
          {"scoring_ms", m.timing.scoring_ms},
          {"assignment_ms", m.timing.assignment_ms},
          {"rebalance_ms", m.timing.rebalance_ms},
          {"total_ms", m.timing.total_ms}};
}

// ---------------------------------------------------------------------------
// Policies

/// How actions are scored. No parameters = myopic baseline (score = immediate reward).
struct PolicyView {
  const ValueNetParams* params = nullptr;
  const LocationEmbedding* embedding = nullptr;
  FeatureScales scales;
  double noise_sigma = 0.0;
  Rng* noise_rng = nullptr;
};

inline PolicyView baseline_policy() { return {}; }

inline PolicyView value_policy(const ValueNetParams& params, const LocationEmbedding& emb, const FeatureScales& scales) {
  PolicyView p;
  p.params = &params;
  p.embedding = &emb;
  p.scales = scales;
  return p;
}

struct EpochOutcome {
  EpochMetrics metrics;
  std::optional<Experience> experience;
  std::vector<std::size_t> chosen;
  /// Request ids assigned this epoch.
  std::vector<RequestId> served;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - start_).count();
    start_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// One simulated day: fleet state, demand stream and running totals.
class Simulator {
 public:
  Simulator(const RoadNetwork& net, const RunConfig& cfg, DemandStream stream, std::uint64_t placement_seed,
            std::uint64_t rebalance_seed)
      : net_(net), cfg_(cfg), stream_(std::move(stream)), rebalance_rng_(rebalance_seed) {
    state_.vehicles = place_vehicles(net, cfg.fleet_size, cfg.capacity, placement_seed, 0.0);
    for (const auto& b : stream_) generated_ += static_cast<std::int64_t>(b.requests.size());
  }

  [[nodiscard]] const SystemState& state() const { return state_; }
  [[nodiscard]] bool done() const { return state_.epoch >= cfg_.horizon_epochs; }
  [[nodiscard]] std::int64_t generated() const { return generated_; }
  [[nodiscard]] std::int64_t seen() const { return seen_; }
  [[nodiscard]] std::int64_t served() const { return served_; }
  [[nodiscard]] std::int64_t dropped() const { return dropped_; }
  [[nodiscard]] std::int64_t completed_pickups() const { return pickups_; }

  /// Executes one decision epoch and advances the clock by delta.
  EpochOutcome run_epoch(const PolicyView& policy, bool record_experience) {
    try {
      return run_epoch_impl(policy, record_experience);
    } catch (...) {
      if (!cfg_.snapshot_dir.empty()) {
        std::filesystem::create_directories(cfg_.snapshot_dir);
        std::ofstream out(std::filesystem::path(cfg_.snapshot_dir) /
                          ("snapshot-epoch-" + std::to_string(state_.epoch) + ".jsonl"));
        write_snapshot(out, state_.vehicles);
      }
      throw;
    }
  }

 private:
  EpochOutcome run_epoch_impl(const PolicyView& policy, bool record_experience) {
    detail::Stopwatch total, watch;
    EpochOutcome out;
    EpochMetrics& m = out.metrics;
    const int t = state_.epoch;
    m.epoch = t;
    state_.time = t * cfg_.delta;
    state_.pending = static_cast<std::size_t>(t) < stream_.size() ? stream_[t] : EpochBatch{t, {}};
    const auto& batch = state_.pending.requests;
    auto& vehicles = state_.vehicles;
    for (const auto& v : vehicles) {
      if (std::abs(v.clock - state_.time) > kTimeTolerance) throw IntegrityError("vehicle clock out of sync");
    }

    // Feasible actions.
    auto sets = generate_fleet_feasible_sets(vehicles, batch, net_, cfg_.delays.tau, cfg_.feasibility, cfg_.workers);
    for (const auto& fs : sets) {
      m.feasibility_evaluations += fs.evaluations;
      m.budget_cutoffs += fs.budget_cutoffs;
      m.actions += static_cast<std::int64_t>(fs.actions.size());
    }
    m.timing.feasibility_ms = watch.lap_ms();

    // Scores.
    const bool need_context = record_experience || policy.params != nullptr;
    std::vector<int> nearby;
    if (need_context) nearby = nearby_counts(vehicles, net_, cfg_.delays.tau);
    std::vector<std::vector<double>> scores(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (policy.params == nullptr) {
        for (const auto& a : sets[i].actions) scores[i].push_back(a.immediate_reward);
        continue;
      }
      const ScoringContext ctx{t, static_cast<int>(batch.size()), nearby[i]};
      ActionScores s = score_actions(*policy.params, vehicles[i], sets[i], ctx, *policy.embedding, net_, policy.scales);
      if (policy.noise_sigma > 0.0 && policy.noise_rng != nullptr) explore_noise(s, policy.noise_sigma, *policy.noise_rng);
      scores[i] = s.total();
    }
    m.timing.scoring_ms = watch.lap_ms();

    // Assignment.
    const Assignment a = solve(make_instance(sets, scores), cfg_.solve);
    m.objective = a.objective;
    m.solver_nodes = a.nodes;
    m.solver_fallback = a.fallback;
    out.chosen = a.chosen;
    m.timing.assignment_ms = watch.lap_ms();

    if (record_experience) {
      Experience e;
      e.epoch = t;
      e.batch_count = static_cast<int>(batch.size());
      e.vehicles = vehicles;
      e.feasible = sets;
      e.nearby = nearby;
      out.experience = std::move(e);
    }

    std::set<RequestId> assigned;
    for (std::size_t i = 0; i < vehicles.size(); ++i) {
      const FeasibleAction& f = sets[i].actions[a.chosen[i]];
      for (RequestId r : f.request_ids) {
        if (!assigned.insert(r).second) throw IntegrityError("request assigned to two vehicles");
      }
      vehicles[i] = apply_action(vehicles[i], f, net_);
    }
    out.served.assign(assigned.begin(), assigned.end());
    m.requests_seen = static_cast<int>(batch.size());
    m.requests_served = static_cast<int>(assigned.size());
    m.requests_dropped = m.requests_seen - m.requests_served;
    for (const auto& r : batch) history_.push_back(r.origin);

    // Rebalancing of vehicles left without work.
    if (cfg_.rebalance && !history_.empty()) {
      std::vector<std::size_t> idle_index;
      std::vector<VehicleState> idle;
      for (std::size_t i = 0; i < vehicles.size(); ++i) {
        if (vehicles[i].idle()) {
          idle_index.push_back(i);
          idle.push_back(vehicles[i]);
        }
      }
      if (!idle.empty()) {
        auto points = sample_demand(history_, static_cast<std::size_t>(cfg_.rebalance_samples), idle.size(),
                                    rebalance_rng_);
        const auto inst = make_rebalance_instance(idle, points, net_);
        const auto plan = solve_rebalance(inst);
        for (std::size_t k = 0; k < idle.size(); ++k) {
          vehicles[idle_index[k]].rebalance_target = inst.points[plan.target[k]];
        }
        m.rebalanced = static_cast<int>(idle.size());
        m.rebalance_cost = plan.total_cost;
      }
    }
    m.timing.rebalance_ms = watch.lap_ms();

    // Motion.
    for (auto& v : vehicles) {
      auto res = advance_time(v, cfg_.delta, net_);
      for (const auto& ev : res.events) (ev.kind == StopKind::kPickup ? m.pickups : m.dropoffs) += 1;
      v = std::move(res.vehicle);
    }
    pickups_ += m.pickups;

    seen_ += m.requests_seen;
    served_ += m.requests_served;
    dropped_ += m.requests_dropped;
    m.cumulative_seen = seen_;
    m.cumulative_served = served_;
    m.service_rate = seen_ > 0 ? static_cast<double>(served_) / static_cast<double>(seen_) : 0.0;
    if (served_ + dropped_ != seen_) throw IntegrityError("served + dropped != seen");

    ++state_.epoch;
    state_.time = state_.epoch * cfg_.delta;
    m.timing.total_ms = total.lap_ms();
    return out;
  }

  const RoadNetwork& net_;
  const RunConfig& cfg_;
  DemandStream stream_;
  SystemState state_;
  Rng rebalance_rng_;
  std::vector<Location> history_;
  std::int64_t generated_ = 0, seen_ = 0, served_ = 0, dropped_ = 0, pickups_ = 0;
};

// ---------------------------------------------------------------------------
// Episodes

struct DaySeeds {
  std::uint64_t demand = 0;
  std::uint64_t placement = 0;
  std::uint64_t rebalance = 0;
};

inline DaySeeds day_seeds(const RunConfig& cfg, std::string_view label, std::uint64_t index) {
  DaySeeds s;
  s.demand = derive_seed(cfg.demand_seed, label, index);
  s.placement = derive_seed(cfg.placement_seed, label, index);
  s.rebalance = derive_seed(s.demand, "rebalance");
  return s;
}

struct EpisodeResult {
  std::int64_t generated = 0;
  std::int64_t served = 0;
  std::int64_t dropped = 0;
  double service_rate = 0.0;
  double max_dispatch_ms = 0.0;
  std::uint64_t final_hash = 0;
  std::vector<EpochMetrics> epochs;
  std::vector<std::vector<std::size_t>> chosen;
};

struct EpisodeSinks {
  std::ostream* metrics = nullptr;
  std::ostream* timing = nullptr;
  bool keep_epochs = false;
  /// Written into every metrics and timing row.
  int day = 0;
};

inline EpisodeResult run_episode(const RoadNetwork& net, const RunConfig& cfg, const DaySeeds& seeds,
                                 const PolicyView& policy, const EpisodeSinks& sinks = {}) {
  Simulator sim(net, cfg, make_demand(net, cfg, seeds.demand), seeds.placement, seeds.rebalance);
  EpisodeResult r;
  while (!sim.done()) {
    EpochOutcome o = sim.run_epoch(policy, false);
    r.max_dispatch_ms = std::max(r.max_dispatch_ms, o.metrics.timing.dispatch_ms());
    if (sinks.metrics) {
      nlohmann::json row = o.metrics;
      row["day"] = sinks.day;
      *sinks.metrics << row.dump() << '\n';
    }
    if (sinks.timing) {
      nlohmann::json row = timing_json(o.metrics);
      row["day"] = sinks.day;
      *sinks.timing << row.dump() << '\n';
    }
    if (sinks.keep_epochs) {
      r.epochs.push_back(o.metrics);
      r.chosen.push_back(std::move(o.chosen));
    }
  }
  r.generated = sim.generated();
  r.served = sim.served();
  r.dropped = sim.dropped();
  if (r.served + r.dropped != r.generated) throw IntegrityError("served + dropped != generated");
  r.service_rate = r.generated > 0 ? static_cast<double>(r.served) / static_cast<double>(r.generated) : 0.0;
  r.final_hash = state_hash(std::span<const VehicleState>(sim.state().vehicles));
  return r;
}

// ---------------------------------------------------------------------------
// Evaluation

struct EvalRow {
  int day = 0;
  std::uint64_t demand_seed = 0;
  std::int64_t generated = 0;
  std::int64_t served = 0;
  std::int64_t dropped = 0;
  double service_rate = 0.0;
  std::uint64_t final_hash = 0;
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_served = 0.0;
  double sd_served = 0.0;
  double mean_service_rate = 0.0;
  double sd_service_rate = 0.0;
  double max_dispatch_ms = 0.0;
};

inline std::pair<double, double> mean_and_sd(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

/// Summary without timings or mode, so equal policies give equal files.
inline nlohmann::json to_json(const EvalSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"day", r.day},
                    {"demand_seed", r.demand_seed},
                    {"generated", r.generated},
                    {"served", r.served},
                    {"dropped", r.dropped},
                    {"service_rate", r.service_rate},
                    {"final_state_hash", r.final_hash}});
  }
  return {{"days", rows},
          {"mean_served", s.mean_served},
          {"sd_served", s.sd_served},
          {"mean_service_rate", s.mean_service_rate},
          {"sd_service_rate", s.sd_service_rate}};
}

/// Noise-free rollouts over `days` held-out demand days.
inline EvalSummary evaluate(const RoadNetwork& net, const RunConfig& cfg, const PolicyView& policy, int days,
                            const EpisodeSinks& sinks = {}) {
  EvalSummary s;
  std::vector<double> served, rate;
  for (int d = 0; d < days; ++d) {
    const DaySeeds seeds = day_seeds(cfg, "eval-day", static_cast<std::uint64_t>(d));
    EpisodeSinks day_sinks = sinks;
    day_sinks.day = d;
    const EpisodeResult r = run_episode(net, cfg, seeds, policy, day_sinks);
    s.rows.push_back({d, seeds.demand, r.generated, r.served, r.dropped, r.service_rate, r.final_hash});
    s.max_dispatch_ms = std::max(s.max_dispatch_ms, r.max_dispatch_ms);
    served.push_back(static_cast<double>(r.served));
    rate.push_back(r.service_rate);
  }
  std::tie(s.mean_served, s.sd_served) = mean_and_sd(served);
  std::tie(s.mean_service_rate, s.sd_service_rate) = mean_and_sd(rate);
  return s;
}

/// Checks a checkpoint against the city and configuration it is used with.
inline void check_compatible(const Checkpoint& ck, const RoadNetwork& net, const RunConfig& cfg) {
  if (ck.embedding.table.size() != net.size() * static_cast<std::size_t>(ck.embedding.dim)) {
    throw ConfigError("checkpoint embedding does not match the road network");
  }
  if (ck.embedding.dim != ck.trainer.online.shape.embed_dim) throw ConfigError("checkpoint embedding/value mismatch");
  if (!(ck.trainer.online.shape == cfg.network)) {
    throw ConfigError("checkpoint architecture does not match the configured value network");
  }
}

inline EvalSummary evaluate(const RoadNetwork& net, const RunConfig& cfg, const Checkpoint* ck, int days,
                            const EpisodeSinks& sinks = {}) {
  if (ck == nullptr) return evaluate(net, cfg, baseline_policy(), days, sinks);
  check_compatible(*ck, net, cfg);
  return evaluate(net, cfg, value_policy(ck->trainer.online, ck->embedding, ck->scales), days, sinks);
}

// ---------------------------------------------------------------------------
// Training

struct TrainProgress {
  int episode = 0;
  double train_service_rate = 0.0;
  double validation_service_rate = 0.0;
  double mean_loss = 0.0;
  std::int64_t steps = 0;
  double noise_sigma = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Checkpoint last;
  Checkpoint best;
  double best_validation = -1.0;
  std::vector<TrainProgress> history;
  bool diverged = false;
};

struct TrainOptions {
  /// Directory for last.ckpt / best.ckpt; empty = keep in memory only.
  std::string out_dir;
  std::ostream* log = nullptr;
  std::function<void(const TrainProgress&)> on_episode;
};

inline Checkpoint initial_checkpoint(const RoadNetwork& net, const RunConfig& cfg) {
  Checkpoint ck;
  EmbeddingOptions eo = cfg.embedding;
  eo.seed = derive_seed(cfg.training_seed, "embedding");
  ck.embedding = train_embeddings(net, eo).embedding;
  ValueNetParams params = cfg.init == "zero" ? ValueNetParams(cfg.network)
                                             : init_value_net(cfg.network, derive_seed(cfg.training_seed, "value"));
  TrainerConfig tc = cfg.trainer;
  const std::int64_t collect = static_cast<std::int64_t>(cfg.episodes) * cfg.horizon_epochs;
  tc.noise_decay_epochs = std::max<std::int64_t>(1, collect / 2);
  ck.trainer = TrainerState(std::move(params), tc);
  const double mean_batch = cfg.demand.trips_file.empty()
                                ? expected_mean_batch(cfg)
                                : static_cast<double>(total_requests(make_demand(net, cfg, 0))) / cfg.horizon_epochs;
  ck.scales = feature_scales(cfg, mean_batch);
  return ck;
}

/// Collect experience with exploration, replay prioritised minibatches of
/// stored epochs, regress each vehicle's value toward its Bellman target,
/// validate on a held-out day after every episode.
inline TrainResult train(const RoadNetwork& net, const RunConfig& cfg, const TrainOptions& opt = {}) {
  TrainResult res;
  Checkpoint ck = initial_checkpoint(net, cfg);
  TrainerState& trainer = ck.trainer;
  ReplayConfig rc = cfg.replay;
  rc.beta_anneal_samples =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.episodes) * cfg.horizon_epochs / cfg.update_every);
  ReplayMemory<Experience> memory(rc);
  Rng noise_rng(derive_seed(cfg.training_seed, "exploration"));
  Rng sample_rng(derive_seed(cfg.training_seed, "replay"));
  const DaySeeds validation_seeds = day_seeds(cfg, "validation", 0);

  auto save = [&](const Checkpoint& c, const char* name) {
    if (opt.out_dir.empty()) return;
    std::filesystem::create_directories(opt.out_dir);
    save_checkpoint((std::filesystem::path(opt.out_dir) / name).string(), c);
  };

  int over_threshold = 0;
  res.best = ck;
  for (int ep = 0; ep < cfg.episodes && !res.diverged; ++ep) {
    detail::Stopwatch clock;
    const DaySeeds seeds = day_seeds(cfg, "train-episode", static_cast<std::uint64_t>(ep));
    Simulator sim(net, cfg, make_demand(net, cfg, seeds.demand), seeds.placement, seeds.rebalance);
    double loss_sum = 0.0;
    std::int64_t loss_count = 0;
    while (!sim.done()) {
      PolicyView policy = value_policy(trainer.online, ck.embedding, ck.scales);
      policy.noise_sigma = trainer.noise_sigma();
      policy.noise_rng = &noise_rng;
      EpochOutcome o = sim.run_epoch(policy, true);
      memory.push(std::move(*o.experience));
      ++trainer.collection_epochs;
      if (o.metrics.epoch % cfg.update_every != cfg.update_every - 1) continue;
      if (memory.size() < static_cast<std::size_t>(cfg.minibatch)) continue;

      auto drawn = memory.sample(static_cast<std::size_t>(cfg.minibatch), sample_rng);
      std::vector<TrainingSample> samples;
      std::vector<std::size_t> owner;
      for (std::size_t k = 0; k < drawn.items.size(); ++k) {
        BellmanResult b = bellman_targets(trainer, *drawn.items[k], ck.embedding, net, ck.scales, cfg.solve);
        for (auto& s : b.samples) {
          s.weight = drawn.weights[k];
          samples.push_back(std::move(s));
          owner.push_back(k);
        }
      }
      if (samples.empty()) continue;
      TrainStepResult step = train_step(trainer, samples);
      if (step.skipped) continue;
      std::vector<double> td(drawn.items.size(), 0.0), cnt(drawn.items.size(), 0.0);
      for (std::size_t s = 0; s < samples.size(); ++s) {
        td[owner[s]] += std::abs(step.td_errors[s]);
        cnt[owner[s]] += 1.0;
      }
      for (std::size_t k = 0; k < td.size(); ++k) td[k] = cnt[k] > 0 ? td[k] / cnt[k] : 0.0;
      memory.update_priorities(drawn.indices, td);
      loss_sum += step.loss;
      ++loss_count;
      over_threshold = step.loss > cfg.divergence_loss ? over_threshold + 1 : 0;
      if (over_threshold >= cfg.divergence_patience) {
        res.diverged = true;
        break;
      }
    }

    TrainProgress p;
    p.episode = ep;
    p.train_service_rate = sim.seen() > 0 ? static_cast<double>(sim.served()) / static_cast<double>(sim.seen()) : 0.0;
    p.mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    p.steps = trainer.steps;
    p.noise_sigma = trainer.noise_sigma();
    if (!res.diverged) {
      p.validation_service_rate =
          run_episode(net, cfg, validation_seeds, value_policy(trainer.online, ck.embedding, ck.scales)).service_rate;
      if (p.validation_service_rate > res.best_validation) {
        res.best_validation = p.validation_service_rate;
        res.best = ck;
        save(res.best, "best.ckpt");
      }
    }
    p.seconds = clock.lap_ms() / 1000.0;
    save(ck, "last.ckpt");
    res.history.push_back(p);
    if (opt.log) {
      *opt.log << nlohmann::json{{"episode", p.episode},
                                 {"train_service_rate", p.train_service_rate},
                                 {"validation_service_rate", p.validation_service_rate},
                                 {"mean_loss", p.mean_loss},
                                 {"steps", p.steps},
                                 {"noise_sigma", p.noise_sigma},
                                 {"seconds", p.seconds}}
                      .dump()
               << '\n';
    }
    if (opt.on_episode) opt.on_episode(p);
  }
  if (cfg.episodes == 0) save(ck, "best.ckpt");
  save(ck, "last.ckpt");
  res.last = std::move(ck);
  return res;
}

}  // namespace neuradp
