#pragma once

/// \file
/// Per-vehicle value function over post-decision vehicle states.
///
/// The stop sequence of a trajectory (location embedding + remaining delay per
/// stop, in visiting order) runs through a GRU; its last hidden state is joined
/// with the current location embedding, time of day, the number of nearby
/// vehicles and the batch size, then two tanh layers and a linear output give V.
/// Forward and backward passes are written out by hand so gradients can be
/// checked against finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "neuradp/adam.hpp"
#include "neuradp/assign.hpp"
#include "neuradp/common.hpp"
#include "neuradp/feasibility.hpp"
#include "neuradp/fleet.hpp"
#include "neuradp/roadnet.hpp"

namespace neuradp {

// ---------------------------------------------------------------------------
// Features

/// Scale factors applied during featurisation.
struct FeatureScales {
  Seconds delay_scale = 900.0;  // tau + lambda
  double fleet_size = 1.0;
  double mean_batch = 1.0;
  int horizon_epochs = 1;
  /// Vehicles within this travel time count as nearby.
  Seconds nearby_radius = 300.0;
};

/// Per-vehicle information that does not depend on the vehicle's own action.
struct ScoringContext {
  int epoch = 0;
  int batch_count = 0;
  int nearby_count = 0;
};

struct StateFeatures {
  int embed_dim = 0;
  std::size_t num_stops = 0;
  /// num_stops x (embed_dim + 1): embedding then normalised remaining delay.
  std::vector<double> stop_inputs;
  std::vector<double> current;
  double epoch_scalar = 0.0;
  double nearby = 0.0;
  double batch = 0.0;
  int nearby_count = 0;
  int batch_count = 0;

  friend bool operator==(const StateFeatures&, const StateFeatures&) = default;
};

/// Features of a vehicle following `route` from its current position.
/// Remaining delay of a stop = deadline - earliest arrival along the route.
inline StateFeatures featurize_route(const VehicleState& v, std::span<const Stop> route,
                                     const ScoringContext& ctx, const LocationEmbedding& emb,
                                     const RoadNetwork& net, const FeatureScales& scales) {
  StateFeatures f;
  f.embed_dim = emb.dim;
  f.num_stops = route.size();
  const std::size_t width = static_cast<std::size_t>(emb.dim) + 1;
  f.stop_inputs.resize(route.size() * width);
  const auto arrivals = arrival_times(net, route_start(v), route);
  for (std::size_t k = 0; k < route.size(); ++k) {
    auto e = emb.row(route[k].location);
    double* dst = f.stop_inputs.data() + k * width;
    std::copy(e.begin(), e.end(), dst);
    dst[emb.dim] = (route[k].deadline - arrivals[k]) / scales.delay_scale;
  }
  auto cur = emb.row(v.plan_location());
  f.current.assign(cur.begin(), cur.end());
  f.epoch_scalar = static_cast<double>(ctx.epoch) / std::max(1, scales.horizon_epochs);
  f.nearby_count = ctx.nearby_count;
  f.batch_count = ctx.batch_count;
  f.nearby = ctx.nearby_count / std::max(1.0, scales.fleet_size);
  f.batch = ctx.batch_count / std::max(1e-9, scales.mean_batch);
  return f;
}

inline StateFeatures featurize(const VehicleState& v_post, const ScoringContext& ctx,
                               const LocationEmbedding& emb, const RoadNetwork& net,
                               const FeatureScales& scales) {
  return featurize_route(v_post, v_post.trajectory, ctx, emb, net, scales);
}

/// Number of other vehicles whose position is within `radius` travel time of each vehicle.
inline std::vector<int> nearby_counts(std::span<const VehicleState> vehicles, const RoadNetwork& net,
                                      Seconds radius) {
  std::vector<int> out(vehicles.size(), 0);
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t j = 0; j < vehicles.size(); ++j) {
      if (i == j) continue;
      if (net.travel_time(vehicles[j].plan_location(), vehicles[i].plan_location()) <= radius) ++out[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network parameters

struct ValueNetShape {
  int embed_dim = 16;
  int hidden = 64;
  int head1 = 64;
  int head2 = 32;

  [[nodiscard]] int step_input() const { return embed_dim + 1; }
  [[nodiscard]] int head_input() const { return hidden + embed_dim + 3; }
  friend bool operator==(const ValueNetShape&, const ValueNetShape&) = default;
};

/// Offsets of every tensor inside the flat parameter vector.
struct ValueNetLayout {
  std::size_t wz, uz, bz, wr, ur, br, wn, un, bn, bhn, h0;
  std::size_t a1, c1, a2, c2, a3, c3;
  std::size_t total;

  explicit ValueNetLayout(const ValueNetShape& s) {
    const std::size_t H = s.hidden, I = s.step_input(), J = s.head_input();
    std::size_t o = 0;
    auto take = [&o](std::size_t n) {
      const std::size_t at = o;
      o += n;
      return at;
    };
    wz = take(H * I);
    uz = take(H * H);
    bz = take(H);
    wr = take(H * I);
    ur = take(H * H);
    br = take(H);
    wn = take(H * I);
    un = take(H * H);
    bn = take(H);
    bhn = take(H);
    h0 = take(H);
    a1 = take(static_cast<std::size_t>(s.head1) * J);
    c1 = take(s.head1);
    a2 = take(static_cast<std::size_t>(s.head2) * s.head1);
    c2 = take(s.head2);
    a3 = take(s.head2);
    c3 = take(1);
    total = o;
  }
};

struct ValueNetParams {
  ValueNetShape shape;
  std::vector<double> theta;

  ValueNetParams() : ValueNetParams(ValueNetShape{}) {}
  explicit ValueNetParams(const ValueNetShape& s) : shape(s), theta(ValueNetLayout(s).total, 0.0) {}

  [[nodiscard]] ValueNetLayout layout() const { return ValueNetLayout(shape); }
  [[nodiscard]] bool all_finite() const {
    return std::all_of(theta.begin(), theta.end(), [](double x) { return std::isfinite(x); });
  }
  [[nodiscard]] std::uint64_t hash() const {
    Hasher h;
    h.add(shape);
    h.add_range(std::span<const double>(theta));
    return h.digest();
  }
  friend bool operator==(const ValueNetParams&, const ValueNetParams&) = default;
};

/// Uniform Glorot-style weights, zero biases, zero initial hidden state.
inline ValueNetParams init_value_net(const ValueNetShape& shape, std::uint64_t seed) {
  ValueNetParams p(shape);
  const ValueNetLayout L(shape);
  Rng rng(derive_seed(seed, "value-net-init"));
  auto fill = [&](std::size_t at, std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t k = 0; k < rows * cols; ++k) p.theta[at + k] = u(rng);
  };
  const std::size_t H = shape.hidden, I = shape.step_input(), J = shape.head_input();
  fill(L.wz, H, I);
  fill(L.uz, H, H);
  fill(L.wr, H, I);
  fill(L.ur, H, H);
  fill(L.wn, H, I);
  fill(L.un, H, H);
  fill(L.a1, shape.head1, J);
  fill(L.a2, shape.head2, shape.head1);
  fill(L.a3, 1, shape.head2);
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// out[r] += sum_c W[r, c] * x[c]
inline void matvec_acc(const double* W, std::size_t rows, std::size_t cols, const double* x, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    out[r] += acc;
  }
}

/// out[c] += sum_r W[r, c] * d[r]
inline void matvec_t_acc(const double* W, std::size_t rows, std::size_t cols, const double* d, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = W + r * cols;
    const double dr = d[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += w[c] * dr;
  }
}

/// G[r, c] += d[r] * x[c]
inline void outer_acc(double* G, std::size_t rows, std::size_t cols, const double* d, const double* x) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* g = G + r * cols;
    const double dr = d[r];
    for (std::size_t c = 0; c < cols; ++c) g[c] += dr * x[c];
  }
}

}  // namespace detail

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
  std::vector<double> h;    // (T + 1) x H, h[0] = initial state
  std::vector<double> z, r, n, un;  // T x H
  std::vector<double> head_in, g1, g2;
  double value = 0.0;
};

inline double value_forward(const ValueNetParams& params, const StateFeatures& f, ForwardCache* cache) {
  const ValueNetShape& s = params.shape;
  if (f.embed_dim != s.embed_dim || static_cast<int>(f.current.size()) != s.embed_dim ||
      f.stop_inputs.size() != f.num_stops * static_cast<std::size_t>(s.step_input())) {
    throw ContractError("feature shape does not match value network");
  }
  const ValueNetLayout L(s);
  const double* th = params.theta.data();
  const std::size_t H = s.hidden, I = s.step_input(), T = f.num_stops;

  thread_local std::vector<double> h, hn, az, ar, un, an;
  h.assign(th + L.h0, th + L.h0 + H);
  hn.resize(H);
  az.resize(H);
  ar.resize(H);
  un.resize(H);
  an.resize(H);
  if (cache) {
    cache->h.assign(h.begin(), h.end());
    cache->h.reserve((T + 1) * H);
    cache->z.resize(T * H);
    cache->r.resize(T * H);
    cache->n.resize(T * H);
    cache->un.resize(T * H);
  }
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = f.stop_inputs.data() + t * I;
    std::copy(th + L.bz, th + L.bz + H, az.begin());
    std::copy(th + L.br, th + L.br + H, ar.begin());
    std::copy(th + L.bhn, th + L.bhn + H, un.begin());
    std::copy(th + L.bn, th + L.bn + H, an.begin());
    detail::matvec_acc(th + L.wz, H, I, x, az.data());
    detail::matvec_acc(th + L.uz, H, H, h.data(), az.data());
    detail::matvec_acc(th + L.wr, H, I, x, ar.data());
    detail::matvec_acc(th + L.ur, H, H, h.data(), ar.data());
    detail::matvec_acc(th + L.un, H, H, h.data(), un.data());
    detail::matvec_acc(th + L.wn, H, I, x, an.data());
    for (std::size_t k = 0; k < H; ++k) {
      const double z = detail::sigmoid(az[k]);
      const double r = detail::sigmoid(ar[k]);
      const double n = std::tanh(an[k] + r * un[k]);
      hn[k] = (1.0 - z) * n + z * h[k];
      if (cache) {
        cache->z[t * H + k] = z;
        cache->r[t * H + k] = r;
        cache->n[t * H + k] = n;
        cache->un[t * H + k] = un[k];
      }
    }
    std::swap(h, hn);
    if (cache) cache->h.insert(cache->h.end(), h.begin(), h.end());
  }

  const std::size_t J = s.head_input(), K1 = s.head1, K2 = s.head2;
  thread_local std::vector<double> u, g1, g2;
  u.resize(J);
  std::copy(h.begin(), h.end(), u.begin());
  std::copy(f.current.begin(), f.current.end(), u.begin() + static_cast<std::ptrdiff_t>(H));
  u[H + s.embed_dim] = f.epoch_scalar;
  u[H + s.embed_dim + 1] = f.nearby;
  u[H + s.embed_dim + 2] = f.batch;
  g1.assign(th + L.c1, th + L.c1 + K1);
  detail::matvec_acc(th + L.a1, K1, J, u.data(), g1.data());
  for (double& x : g1) x = std::tanh(x);
  g2.assign(th + L.c2, th + L.c2 + K2);
  detail::matvec_acc(th + L.a2, K2, K1, g1.data(), g2.data());
  for (double& x : g2) x = std::tanh(x);
  double y = th[L.c3];
  for (std::size_t k = 0; k < K2; ++k) y += th[L.a3 + k] * g2[k];

  if (!std::isfinite(y)) {
    throw NumericError("value network produced a non-finite output (stops=" + std::to_string(T) +
                       ", nearby=" + std::to_string(f.nearby) + ", batch=" + std::to_string(f.batch) + ")");
  }
  if (cache) {
    cache->head_in = u;
    cache->g1 = g1;
    cache->g2 = g2;
    cache->value = y;
  }
  return y;
}

/// Scalar V for one vehicle state.
inline double value(const ValueNetParams& params, const StateFeatures& f) {
  return value_forward(params, f, nullptr);
}

/// Accumulates dout * dV/dtheta into `grad` (same layout as params.theta).
inline void value_backward(const ValueNetParams& params, const StateFeatures& f, const ForwardCache& c,
                           double dout, std::span<double> grad) {
  const ValueNetShape& s = params.shape;
  const ValueNetLayout L(s);
  const double* th = params.theta.data();
  double* gr = grad.data();
  const std::size_t H = s.hidden, I = s.step_input(), J = s.head_input(), K1 = s.head1, K2 = s.head2;
  const std::size_t T = f.num_stops;

  // Head.
  std::vector<double> dp2(K2), dg1(K1, 0.0), dp1(K1), du(J, 0.0);
  gr[L.c3] += dout;
  for (std::size_t k = 0; k < K2; ++k) {
    gr[L.a3 + k] += dout * c.g2[k];
    dp2[k] = dout * th[L.a3 + k] * (1.0 - c.g2[k] * c.g2[k]);
    gr[L.c2 + k] += dp2[k];
  }
  detail::outer_acc(gr + L.a2, K2, K1, dp2.data(), c.g1.data());
  detail::matvec_t_acc(th + L.a2, K2, K1, dp2.data(), dg1.data());
  for (std::size_t k = 0; k < K1; ++k) {
    dp1[k] = dg1[k] * (1.0 - c.g1[k] * c.g1[k]);
    gr[L.c1 + k] += dp1[k];
  }
  detail::outer_acc(gr + L.a1, K1, J, dp1.data(), c.head_in.data());
  detail::matvec_t_acc(th + L.a1, K1, J, dp1.data(), du.data());

  // Recurrence, newest step first.
  std::vector<double> dh(du.begin(), du.begin() + static_cast<std::ptrdiff_t>(H));
  std::vector<double> dprev(H), daz(H), dar(H), dan(H), dun(H);
  for (std::size_t tt = T; tt-- > 0;) {
    const double* hp = c.h.data() + tt * H;
    const double* z = c.z.data() + tt * H;
    const double* r = c.r.data() + tt * H;
    const double* n = c.n.data() + tt * H;
    const double* un = c.un.data() + tt * H;
    const double* x = f.stop_inputs.data() + tt * I;
    for (std::size_t k = 0; k < H; ++k) {
      const double dn = dh[k] * (1.0 - z[k]);
      const double dz = dh[k] * (hp[k] - n[k]);
      dprev[k] = dh[k] * z[k];
      dan[k] = dn * (1.0 - n[k] * n[k]);
      const double dr = dan[k] * un[k];
      dun[k] = dan[k] * r[k];
      daz[k] = dz * z[k] * (1.0 - z[k]);
      dar[k] = dr * r[k] * (1.0 - r[k]);
      gr[L.bn + k] += dan[k];
      gr[L.bhn + k] += dun[k];
      gr[L.bz + k] += daz[k];
      gr[L.br + k] += dar[k];
    }
    detail::outer_acc(gr + L.wn, H, I, dan.data(), x);
    detail::outer_acc(gr + L.un, H, H, dun.data(), hp);
    detail::outer_acc(gr + L.wz, H, I, daz.data(), x);
    detail::outer_acc(gr + L.uz, H, H, daz.data(), hp);
    detail::outer_acc(gr + L.wr, H, I, dar.data(), x);
    detail::outer_acc(gr + L.ur, H, H, dar.data(), hp);
    detail::matvec_t_acc(th + L.un, H, H, dun.data(), dprev.data());
    detail::matvec_t_acc(th + L.uz, H, H, daz.data(), dprev.data());
    detail::matvec_t_acc(th + L.ur, H, H, dar.data(), dprev.data());
    dh.swap(dprev);
  }
  for (std::size_t k = 0; k < H; ++k) gr[L.h0 + k] += dh[k];
}

// ---------------------------------------------------------------------------
// Scoring

/// Immediate reward and value component of every action of one vehicle.
struct ActionScores {
  std::vector<double> immediate;
  std::vector<double> future;

  [[nodiscard]] std::vector<double> total() const {
    std::vector<double> out(immediate.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = immediate[k] + future[k];
    return out;
  }
};

/// score(f) = o(f) + V(post-decision state after f). Undiscounted, as used in
/// the assignment objective.
inline ActionScores score_actions(const ValueNetParams& params, const VehicleState& v,
                                  const FeasibleSet& feasible, const ScoringContext& ctx,
                                  const LocationEmbedding& emb, const RoadNetwork& net,
                                  const FeatureScales& scales) {
  ActionScores out;
  out.immediate.reserve(feasible.actions.size());
  out.future.reserve(feasible.actions.size());
  for (const FeasibleAction& a : feasible.actions) {
    out.immediate.push_back(a.immediate_reward);
    out.future.push_back(value(params, featurize_route(v, a.route, ctx, emb, net, scales)));
  }
  return out;
}

/// Adds zero-mean Gaussian noise of scale `sigma` to the value components.
inline void explore_noise(ActionScores& scores, double sigma, Rng& rng) {
  if (sigma <= 0.0) return;
  std::normal_distribution<double> g(0.0, sigma);
  for (double& v : scores.future) v += g(rng);
}

inline ActionScores explore_noise(ActionScores scores, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  explore_noise(scores, sigma, rng);
  return scores;
}

// ---------------------------------------------------------------------------
// Training

struct TrainerConfig {
  double gamma = 0.9;
  AdamConfig adam{};
  /// Hard copy of online weights into the target network every this many steps.
  std::int64_t target_update_every = 1000;
  double noise_start = 0.5;
  double noise_end = 0.02;
  /// Collection epochs over which the exploration scale decays linearly.
  std::int64_t noise_decay_epochs = 1;
  /// Global gradient-norm clip; 0 disables.
  double max_grad_norm = 0.0;
};

struct TrainerState {
  ValueNetParams online;
  ValueNetParams target;
  AdamState adam;
  TrainerConfig cfg;
  std::int64_t steps = 0;
  std::int64_t skipped_steps = 0;
  std::int64_t collection_epochs = 0;

  TrainerState() = default;
  TrainerState(ValueNetParams params, TrainerConfig config)
      : online(params), target(std::move(params)), adam(online.theta.size()), cfg(config) {
    if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw ContractError("gamma must lie in [0, 1)");
  }

  [[nodiscard]] double noise_sigma() const {
    const double frac = std::min(1.0, static_cast<double>(collection_epochs) /
                                          static_cast<double>(std::max<std::int64_t>(1, cfg.noise_decay_epochs)));
    return cfg.noise_start + (cfg.noise_end - cfg.noise_start) * frac;
  }
};

/// Everything stored per epoch for off-policy updates.
struct Experience {
  int epoch = 0;
  int batch_count = 0;
  std::vector<VehicleState> vehicles;
  std::vector<FeasibleSet> feasible;
  std::vector<int> nearby;

  [[nodiscard]] ScoringContext context(std::size_t i) const { return {epoch, batch_count, nearby[i]}; }
  [[nodiscard]] std::uint64_t hash() const {
    Hasher h;
    h.add(epoch);
    h.add(batch_count);
    for (const auto& v : vehicles) hash_into(h, v);
    for (const auto& fs : feasible) {
      h.add(fs.vehicle_id);
      for (const auto& a : fs.actions) {
        h.add_range(std::span<const RequestId>(a.request_ids));
        h.add(a.immediate_reward);
        for (const auto& s : a.route) {
          h.add(s.location);
          h.add(s.kind);
          h.add(s.request_id);
          h.add(s.deadline);
        }
      }
    }
    h.add_range(std::span<const int>(nearby));
    return h.digest();
  }
};

/// One regression sample: V(input) should move toward `target`.
struct TrainingSample {
  StateFeatures input;
  double target = 0.0;
  double weight = 1.0;
};

struct BellmanResult {
  std::vector<TrainingSample> samples;  // one per vehicle
  std::vector<std::size_t> chosen;
  double objective = 0.0;
};

/// Double-Q Bellman targets for a stored epoch: actions are selected by the
/// online network through the assignment solver, the chosen post-decision
/// states are evaluated by the target network, and
/// y_i = o(f*_i) + gamma * V_target(post-decision state of f*_i).
/// The regression input is the stored vehicle state with its current trajectory.
inline BellmanResult bellman_targets(const TrainerState& trainer, const Experience& e,
                                     const LocationEmbedding& emb, const RoadNetwork& net,
                                     const FeatureScales& scales, const SolveOptions& solve_opt = {}) {
  const std::size_t nv = e.vehicles.size();
  if (e.feasible.size() != nv || e.nearby.size() != nv) throw ContractError("malformed experience");
  std::vector<std::vector<double>> totals(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    totals[i] = score_actions(trainer.online, e.vehicles[i], e.feasible[i], e.context(i), emb, net, scales).total();
  }
  const auto inst = make_instance(e.feasible, totals);
  const Assignment a = solve(inst, solve_opt);
  BellmanResult out;
  out.chosen = a.chosen;
  out.objective = a.objective;
  out.samples.reserve(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    const FeasibleAction& f = e.feasible[i].actions[a.chosen[i]];
    const ScoringContext ctx = e.context(i);
    const double v_next = value(trainer.target, featurize_route(e.vehicles[i], f.route, ctx, emb, net, scales));
    TrainingSample s;
    s.input = featurize(e.vehicles[i], ctx, emb, net, scales);
    s.target = f.immediate_reward + trainer.cfg.gamma * v_next;
    out.samples.push_back(std::move(s));
  }
  return out;
}

/// Weighted mean squared error and its gradient.
inline double loss_and_gradient(const ValueNetParams& params, std::span<const TrainingSample> batch,
                                std::span<double> grad, std::vector<double>* td_errors = nullptr) {
  std::fill(grad.begin(), grad.end(), 0.0);
  if (td_errors) td_errors->clear();
  ForwardCache cache;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const TrainingSample& s : batch) {
    const double v = value_forward(params, s.input, &cache);
    const double err = v - s.target;
    loss += s.weight * err * err * inv_n;
    if (td_errors) td_errors->push_back(s.target - v);
    value_backward(params, s.input, cache, 2.0 * s.weight * err * inv_n, grad);
  }
  return loss;
}

struct TrainStepResult {
  double loss = 0.0;  // before the update
  std::vector<double> td_errors;
  bool skipped = false;
};

/// One Adam step on the weighted MSE; refreshes the target network on schedule.
inline TrainStepResult train_step(TrainerState& trainer, std::span<const TrainingSample> batch) {
  if (batch.empty()) throw ContractError("train_step needs a nonempty minibatch");
  TrainStepResult res;
  std::vector<double> grad(trainer.online.theta.size());
  res.loss = loss_and_gradient(trainer.online, batch, grad, &res.td_errors);
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  if (!std::isfinite(norm2) || !std::isfinite(res.loss)) {
    res.skipped = true;
    ++trainer.skipped_steps;
    return res;
  }
  if (trainer.cfg.max_grad_norm > 0.0 && norm2 > trainer.cfg.max_grad_norm * trainer.cfg.max_grad_norm) {
    const double scale = trainer.cfg.max_grad_norm / std::sqrt(norm2);
    for (double& g : grad) g *= scale;
  }
  trainer.adam.step(trainer.online.theta, grad, trainer.cfg.adam);
  ++trainer.steps;
  if (trainer.cfg.target_update_every > 0 && trainer.steps % trainer.cfg.target_update_every == 0) {
    trainer.target = trainer.online;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoints

/// Versioned binary blob: embedding, online/target weights, Adam moments,
/// schedule counters and feature scales. Doubles are stored as raw bytes.
struct Checkpoint {
  LocationEmbedding embedding;
  TrainerState trainer;
  FeatureScales scales;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'N', 'A', 'D', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class BlobWriter {
 public:
  explicit BlobWriter(std::ostream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void doubles(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class BlobReader {
 public:
  explicit BlobReader(std::istream& in) : in_(in) {}
  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw ConfigError("truncated checkpoint");
    return v;
  }
  std::vector<double> doubles() {
    const auto n = pod<std::uint64_t>();
    if (n > (1ULL << 32)) throw ConfigError("corrupt checkpoint array length");
    std::vector<double> v(n);
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in_) throw ConfigError("truncated checkpoint");
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  detail::BlobWriter w(out);
  out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  w.pod(detail::kCheckpointVersion);
  const auto& e = ck.embedding;
  w.pod<std::int32_t>(e.dim);
  w.pod<std::int32_t>(e.hidden);
  w.pod(e.target_scale);
  w.doubles(e.table);
  w.doubles(e.w1);
  w.doubles(e.b1);
  w.doubles(e.w2);
  w.pod(e.b2);
  const auto& t = ck.trainer;
  w.pod(t.online.shape);
  w.doubles(t.online.theta);
  w.doubles(t.target.theta);
  w.doubles(t.adam.m);
  w.doubles(t.adam.v);
  w.pod(t.adam.t);
  w.pod(t.cfg);
  w.pod(t.steps);
  w.pod(t.skipped_steps);
  w.pod(t.collection_epochs);
  // Field by field: the struct has padding.
  w.pod(ck.scales.delay_scale);
  w.pod(ck.scales.fleet_size);
  w.pod(ck.scales.mean_batch);
  w.pod<std::int32_t>(ck.scales.horizon_epochs);
  w.pod(ck.scales.nearby_radius);
}

inline Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0) {
    throw ConfigError("not a checkpoint file");
  }
  detail::BlobReader r(in);
  if (r.pod<std::uint32_t>() != detail::kCheckpointVersion) throw ConfigError("unsupported checkpoint version");
  Checkpoint ck;
  auto& e = ck.embedding;
  e.dim = r.pod<std::int32_t>();
  e.hidden = r.pod<std::int32_t>();
  e.target_scale = r.pod<Seconds>();
  e.table = r.doubles();
  e.w1 = r.doubles();
  e.b1 = r.doubles();
  e.w2 = r.doubles();
  e.b2 = r.pod<double>();
  auto& t = ck.trainer;
  const auto shape = r.pod<ValueNetShape>();
  t.online = ValueNetParams(shape);
  t.target = ValueNetParams(shape);
  t.online.theta = r.doubles();
  t.target.theta = r.doubles();
  t.adam.m = r.doubles();
  t.adam.v = r.doubles();
  t.adam.t = r.pod<std::int64_t>();
  const std::size_t expect = ValueNetLayout(shape).total;
  if (t.online.theta.size() != expect || t.target.theta.size() != expect || t.adam.m.size() != expect ||
      t.adam.v.size() != expect) {
    throw ConfigError("checkpoint weights do not match the stored architecture");
  }
  t.cfg = r.pod<TrainerConfig>();
  t.steps = r.pod<std::int64_t>();
  t.skipped_steps = r.pod<std::int64_t>();
  t.collection_epochs = r.pod<std::int64_t>();
  ck.scales.delay_scale = r.pod<Seconds>();
  ck.scales.fleet_size = r.pod<double>();
  ck.scales.mean_batch = r.pod<double>();
  ck.scales.horizon_epochs = r.pod<std::int32_t>();
  ck.scales.nearby_radius = r.pod<Seconds>();
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(out, ck);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace neuradp
