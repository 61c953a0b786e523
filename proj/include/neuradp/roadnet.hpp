#pragma once

/// \file
/// Road network: directed intersection graph restricted to its largest strongly
/// connected component, all-pairs shortest travel times, and the location
/// embeddings learned by regressing travel times through a small proxy network.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "neuradp/adam.hpp"
#include "neuradp/common.hpp"

namespace neuradp {

/// One directed road segment between two original node ids.
struct Edge {
  std::int64_t src = 0;
  std::int64_t dst = 0;
  Seconds seconds = 0.0;
};

struct NetworkOptions {
  /// Above this many locations shortest-path rows are computed on first use.
  std::size_t dense_threshold = 4000;
};

class RoadNetwork {
 public:
  struct Arc {
    Location to;
    Seconds seconds;
  };

  /// Restricts the graph to its largest strongly connected component and
  /// precomputes shortest travel times. Throws ContractError on bad input.
  static RoadNetwork build(std::vector<std::int64_t> locations, const std::vector<Edge>& edges,
                           NetworkOptions options = {});

  RoadNetwork(RoadNetwork&&) noexcept = default;
  RoadNetwork& operator=(RoadNetwork&&) noexcept = default;

  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] std::size_t num_edges() const { return num_edges_; }
  [[nodiscard]] bool dense() const { return dense_; }

  /// Original node id of a compact location.
  [[nodiscard]] std::int64_t node_id(Location loc) const { return ids_.at(check(loc)); }
  /// Compact location of a retained original node id.
  [[nodiscard]] std::optional<Location> find(std::int64_t node) const {
    auto it = index_.find(node);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  /// Closest retained location for any node of the input graph, including the
  /// ones dropped by the component restriction (undirected hop distance).
  [[nodiscard]] std::optional<Location> nearest_retained(std::int64_t node) const {
    if (auto loc = find(node)) return loc;
    auto it = removed_nearest_.find(node);
    if (it == removed_nearest_.end()) return std::nullopt;
    return it->second;
  }
  [[nodiscard]] std::size_t removed_count() const { return removed_nearest_.size() + unreachable_; }

  [[nodiscard]] std::span<const Arc> out_arcs(Location loc) const { return adjacency_.at(check(loc)); }

  /// Shortest travel time in seconds. Throws std::out_of_range for unknown locations.
  [[nodiscard]] Seconds travel_time(Location a, Location b) const {
    return row(check(a)).times[static_cast<std::size_t>(check(b))];
  }

  /// First location after `a` on a shortest path to `b` (`a` itself when a == b).
  [[nodiscard]] Location next_hop(Location a, Location b) const {
    return row(check(a)).next[static_cast<std::size_t>(check(b))];
  }

  /// Largest finite shortest travel time.
  [[nodiscard]] Seconds diameter() const;

  /// Fingerprint of the topology and weights.
  [[nodiscard]] std::uint64_t fingerprint() const;

 private:
  struct Row {
    std::vector<Seconds> times;
    std::vector<Location> next;
  };

  RoadNetwork() = default;

  Location check(Location loc) const {
    if (loc < 0 || static_cast<std::size_t>(loc) >= ids_.size()) {
      throw std::out_of_range("unknown location " + std::to_string(loc));
    }
    return loc;
  }

  const Row& row(Location source) const;
  Row dijkstra(Location source) const;

  std::vector<std::int64_t> ids_;
  std::unordered_map<std::int64_t, Location> index_;
  std::unordered_map<std::int64_t, Location> removed_nearest_;
  std::size_t unreachable_ = 0;
  std::vector<std::vector<Arc>> adjacency_;
  std::size_t num_edges_ = 0;
  bool dense_ = true;
  std::vector<Row> dense_rows_;
  // Lazy mode: rows materialised on first query.
  mutable std::unique_ptr<std::mutex> lazy_mutex_;
  mutable std::vector<std::unique_ptr<Row>> lazy_rows_;
  mutable Seconds diameter_ = -1.0;
};

namespace detail {

/// Iterative Tarjan; returns component index per node and the component count.
inline std::pair<std::vector<int>, int> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, num_comp = 0;
  struct Frame {
    int node;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.node].size()) {
        const int w = adj[f.node][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      const int v = f.node;
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[v]);
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = num_comp;
        } while (w != v);
        ++num_comp;
      }
    }
  }
  return {std::move(comp), num_comp};
}

}  // namespace detail

inline RoadNetwork RoadNetwork::build(std::vector<std::int64_t> locations,
                                      const std::vector<Edge>& edges, NetworkOptions options) {
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
  if (locations.empty()) throw ContractError("road network has no locations");

  std::unordered_map<std::int64_t, int> all_index;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i] < 0) throw ContractError("node ids must be nonnegative");
    all_index.emplace(locations[i], static_cast<int>(i));
  }
  const int n_all = static_cast<int>(locations.size());
  std::vector<std::vector<int>> adj(n_all);
  std::vector<std::vector<int>> undirected(n_all);
  for (const Edge& e : edges) {
    auto s = all_index.find(e.src);
    auto d = all_index.find(e.dst);
    if (s == all_index.end() || d == all_index.end()) {
      throw ContractError("edge references unknown node " + std::to_string(e.src) + "->" +
                          std::to_string(e.dst));
    }
    if (!(e.seconds > 0.0) || !std::isfinite(e.seconds)) {
      throw ContractError("edge weight must be positive and finite");
    }
    adj[s->second].push_back(d->second);
    undirected[s->second].push_back(d->second);
    undirected[d->second].push_back(s->second);
  }

  auto [comp, num_comp] = detail::strongly_connected_components(adj);
  // Largest component; ties go to the one holding the smallest node id.
  std::vector<int> comp_size(num_comp, 0);
  for (int c : comp) ++comp_size[c];
  int best = comp[0];
  for (int i = 0; i < n_all; ++i) {
    if (comp_size[comp[i]] > comp_size[best]) best = comp[i];
  }

  RoadNetwork net;
  std::vector<Location> compact(n_all, kNoLocation);
  for (int i = 0; i < n_all; ++i) {
    if (comp[i] != best) continue;
    compact[i] = static_cast<Location>(net.ids_.size());
    net.index_.emplace(locations[i], compact[i]);
    net.ids_.push_back(locations[i]);
  }
  if (net.ids_.empty()) throw ContractError("road network empty after component restriction");

  const std::size_t n = net.ids_.size();
  net.adjacency_.assign(n, {});
  for (const Edge& e : edges) {
    const Location a = compact[all_index[e.src]];
    const Location b = compact[all_index[e.dst]];
    if (a == kNoLocation || b == kNoLocation || a == b) continue;
    auto& arcs = net.adjacency_[a];
    auto it = std::find_if(arcs.begin(), arcs.end(), [b](const Arc& arc) { return arc.to == b; });
    if (it == arcs.end()) {
      arcs.push_back({b, e.seconds});
    } else {
      it->seconds = std::min(it->seconds, e.seconds);
    }
  }
  for (auto& arcs : net.adjacency_) {
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.to < y.to; });
    net.num_edges_ += arcs.size();
  }

  // Removed nodes map to the retained node with the fewest undirected hops.
  {
    std::vector<int> owner(n_all, -1);
    std::queue<int> frontier;
    for (int i = 0; i < n_all; ++i) {
      if (compact[i] != kNoLocation) {
        owner[i] = compact[i];
        frontier.push(i);
      }
    }
    while (!frontier.empty()) {
      const int u = frontier.front();
      frontier.pop();
      std::vector<int> nbrs = undirected[u];
      std::sort(nbrs.begin(), nbrs.end());
      for (int w : nbrs) {
        if (owner[w] != -1) continue;
        owner[w] = owner[u];
        frontier.push(w);
      }
    }
    for (int i = 0; i < n_all; ++i) {
      if (compact[i] != kNoLocation) continue;
      if (owner[i] == -1) {
        ++net.unreachable_;
      } else {
        net.removed_nearest_.emplace(locations[i], owner[i]);
      }
    }
  }

  net.dense_ = n <= options.dense_threshold;
  if (net.dense_) {
    net.dense_rows_.reserve(n);
    for (std::size_t s = 0; s < n; ++s) net.dense_rows_.push_back(net.dijkstra(static_cast<Location>(s)));
    (void)net.diameter();
  } else {
    net.lazy_mutex_ = std::make_unique<std::mutex>();
    net.lazy_rows_.resize(n);
  }
  return net;
}

inline RoadNetwork::Row RoadNetwork::dijkstra(Location source) const {
  const std::size_t n = ids_.size();
  Row r;
  r.times.assign(n, std::numeric_limits<Seconds>::infinity());
  r.next.assign(n, kNoLocation);
  using Item = std::pair<Seconds, Location>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  r.times[source] = 0.0;
  r.next[source] = source;
  pq.push({0.0, source});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > r.times[u]) continue;
    for (const Arc& arc : adjacency_[u]) {
      const Seconds nd = d + arc.seconds;
      if (nd < r.times[arc.to]) {
        r.times[arc.to] = nd;
        r.next[arc.to] = (u == source) ? arc.to : r.next[u];
        pq.push({nd, arc.to});
      }
    }
  }
  return r;
}

inline const RoadNetwork::Row& RoadNetwork::row(Location source) const {
  if (dense_) return dense_rows_[static_cast<std::size_t>(source)];
  std::lock_guard lock(*lazy_mutex_);
  auto& slot = lazy_rows_[static_cast<std::size_t>(source)];
  if (!slot) slot = std::make_unique<Row>(dijkstra(source));
  return *slot;
}

inline Seconds RoadNetwork::diameter() const {
  if (diameter_ >= 0.0) return diameter_;
  Seconds d = 0.0;
  for (std::size_t s = 0; s < size(); ++s) {
    for (Seconds t : row(static_cast<Location>(s)).times) d = std::max(d, t);
  }
  diameter_ = d;
  return d;
}

inline std::uint64_t RoadNetwork::fingerprint() const {
  Hasher h;
  h.add(size());
  for (std::size_t a = 0; a < size(); ++a) {
    h.add(ids_[a]);
    for (const Arc& arc : adjacency_[a]) {
      h.add(arc.to);
      h.add(arc.seconds);
    }
  }
  return h.digest();
}

inline RoadNetwork build_network(std::vector<std::int64_t> locations, const std::vector<Edge>& edges,
                                 NetworkOptions options = {}) {
  return RoadNetwork::build(std::move(locations), edges, options);
}

inline Seconds travel_time(const RoadNetwork& net, Location a, Location b) {
  return net.travel_time(a, b);
}

/// Bidirectional rows x cols grid; node id = r * cols + c.
inline std::vector<Edge> make_grid_edges(int rows, int cols, Seconds edge_seconds) {
  if (rows < 1 || cols < 1 || !(edge_seconds > 0.0)) throw ContractError("invalid grid dimensions");
  std::vector<Edge> edges;
  auto id = [cols](int r, int c) { return static_cast<std::int64_t>(r) * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        edges.push_back({id(r, c), id(r, c + 1), edge_seconds});
        edges.push_back({id(r, c + 1), id(r, c), edge_seconds});
      }
      if (r + 1 < rows) {
        edges.push_back({id(r, c), id(r + 1, c), edge_seconds});
        edges.push_back({id(r + 1, c), id(r, c), edge_seconds});
      }
    }
  }
  return edges;
}

inline RoadNetwork make_grid_network(int rows, int cols, Seconds edge_seconds) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  return build_network(std::move(ids), make_grid_edges(rows, cols, edge_seconds));
}

/// Parses `src dst weight_seconds` lines; blank lines and `#` comments are ignored.
inline std::vector<Edge> parse_edge_list(std::istream& in, const std::string& name = "<stream>") {
  std::vector<Edge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    Edge e;
    if (!(ss >> e.src)) continue;  // blank
    std::string rest;
    if (!(ss >> e.dst >> e.seconds) || (ss >> rest)) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": expected `src dst weight_seconds`");
    }
    if (e.src < 0 || e.dst < 0) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": node ids must be nonnegative");
    }
    edges.push_back(e);
  }
  return edges;
}

inline RoadNetwork load_network(const std::string& path, NetworkOptions options = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list " + path);
  auto edges = parse_edge_list(in, path);
  if (edges.empty()) throw ConfigError(path + ": no edges");
  std::vector<std::int64_t> ids;
  for (const Edge& e : edges) {
    ids.push_back(e.src);
    ids.push_back(e.dst);
  }
  return build_network(std::move(ids), edges, options);
}

inline void write_edge_list(std::ostream& out, const std::vector<Edge>& edges) {
  for (const Edge& e : edges) out << e.src << ' ' << e.dst << ' ' << e.seconds << '\n';
}

// ---------------------------------------------------------------------------
// Location embeddings

/// Per-location vectors plus the two-layer proxy that maps a pair of them to a
/// travel-time estimate (in units of `target_scale` seconds).
struct LocationEmbedding {
  int dim = 0;
  int hidden = 0;
  Seconds target_scale = 1.0;
  std::vector<double> table;  // size() * dim
  std::vector<double> w1;     // hidden x (2 * dim)
  std::vector<double> b1;     // hidden
  std::vector<double> w2;     // hidden
  double b2 = 0.0;

  [[nodiscard]] std::size_t num_locations() const {
    return dim > 0 ? table.size() / static_cast<std::size_t>(dim) : 0;
  }

  [[nodiscard]] std::span<const double> row(Location loc) const {
    if (loc < 0 || static_cast<std::size_t>(loc) >= num_locations()) {
      throw std::out_of_range("location " + std::to_string(loc) + " missing from embedding table");
    }
    return {table.data() + static_cast<std::size_t>(loc) * dim, static_cast<std::size_t>(dim)};
  }

  /// Proxy estimate of travel_time(a, b) / target_scale.
  [[nodiscard]] double proxy(Location a, Location b) const {
    auto ea = row(a), eb = row(b);
    double y = b2;
    for (int k = 0; k < hidden; ++k) {
      const double* w = w1.data() + static_cast<std::size_t>(k) * 2 * dim;
      double pre = b1[k];
      for (int d = 0; d < dim; ++d) pre += w[d] * ea[d] + w[dim + d] * eb[d];
      y += w2[k] * std::tanh(pre);
    }
    return y;
  }

  [[nodiscard]] bool all_finite() const {
    auto ok = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(table) && ok(w1) && ok(b1) && ok(w2) && std::isfinite(b2);
  }
};

struct EmbeddingOptions {
  int dim = 16;
  int hidden = 32;
  int steps = 2000;
  int batch = 64;
  double lr = 1e-2;
  /// Learning rate decays linearly to lr * final_lr_fraction.
  double final_lr_fraction = 0.01;
  int checkpoints = 10;
  std::uint64_t seed = 0;
};

struct EmbeddingTrainResult {
  LocationEmbedding embedding;
  /// Mean squared proxy error on normalised targets after training.
  double final_loss = 0.0;
  /// Loss on a fixed evaluation pair set at evenly spaced steps.
  std::vector<double> checkpoint_losses;
};

namespace detail {

inline double embedding_loss(const LocationEmbedding& emb, const RoadNetwork& net,
                             std::span<const std::pair<Location, Location>> pairs) {
  double total = 0.0;
  for (auto [a, b] : pairs) {
    const double err = emb.proxy(a, b) - net.travel_time(a, b) / emb.target_scale;
    total += err * err;
  }
  return pairs.empty() ? 0.0 : total / static_cast<double>(pairs.size());
}

}  // namespace detail

/// Fits embeddings so the proxy regresses normalised shortest travel times over
/// uniformly sampled location pairs. Deterministic given options.seed.
inline EmbeddingTrainResult train_embeddings(const RoadNetwork& net, const EmbeddingOptions& opt) {
  if (opt.dim < 2) throw ContractError("embedding dim must be >= 2");
  if (opt.steps < 1) throw ContractError("embedding steps must be >= 1");
  if (opt.hidden < 1 || opt.batch < 1) throw ContractError("embedding hidden/batch must be >= 1");

  const std::size_t n = net.size();
  const int dim = opt.dim, hidden = opt.hidden;
  Rng rng(derive_seed(opt.seed, "embedding-init"));

  LocationEmbedding emb;
  emb.dim = dim;
  emb.hidden = hidden;
  emb.target_scale = std::max<Seconds>(net.diameter(), 1.0);
  emb.table.resize(n * dim);
  emb.w1.resize(static_cast<std::size_t>(hidden) * 2 * dim);
  emb.b1.assign(hidden, 0.0);
  emb.w2.resize(hidden);
  {
    std::normal_distribution<double> g_table(0.0, 0.5);
    std::normal_distribution<double> g_w1(0.0, 1.0 / std::sqrt(2.0 * dim));
    std::normal_distribution<double> g_w2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    for (double& x : emb.table) x = g_table(rng);
    for (double& x : emb.w1) x = g_w1(rng);
    for (double& x : emb.w2) x = g_w2(rng);
  }

  // Fixed evaluation set: all pairs when small, a seeded sample otherwise.
  std::vector<std::pair<Location, Location>> eval_pairs;
  std::uniform_int_distribution<Location> pick(0, static_cast<Location>(n - 1));
  if (n * n <= 4096) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) eval_pairs.emplace_back(a, b);
  } else {
    Rng eval_rng(derive_seed(opt.seed, "embedding-eval"));
    for (int i = 0; i < 4096; ++i) eval_pairs.emplace_back(pick(eval_rng), pick(eval_rng));
  }

  // Flat parameter layout for Adam: table | w1 | b1 | w2 | b2.
  const std::size_t n_table = emb.table.size(), n_w1 = emb.w1.size();
  const std::size_t total = n_table + n_w1 + hidden + hidden + 1;
  std::vector<double> params(total), grad(total);
  auto pack = [&] {
    auto it = std::copy(emb.table.begin(), emb.table.end(), params.begin());
    it = std::copy(emb.w1.begin(), emb.w1.end(), it);
    it = std::copy(emb.b1.begin(), emb.b1.end(), it);
    it = std::copy(emb.w2.begin(), emb.w2.end(), it);
    *it = emb.b2;
  };
  auto unpack = [&] {
    auto it = params.begin();
    std::copy(it, it + n_table, emb.table.begin());
    it += n_table;
    std::copy(it, it + n_w1, emb.w1.begin());
    it += n_w1;
    std::copy(it, it + hidden, emb.b1.begin());
    it += hidden;
    std::copy(it, it + hidden, emb.w2.begin());
    it += hidden;
    emb.b2 = *it;
  };
  pack();

  AdamState adam(total);
  AdamConfig adam_cfg;
  adam_cfg.lr = opt.lr;
  Rng sample_rng(derive_seed(opt.seed, "embedding-pairs"));
  std::vector<double> h(hidden), dpre(hidden);

  EmbeddingTrainResult result;
  const int every = std::max(1, opt.steps / std::max(1, opt.checkpoints));
  for (int step = 0; step < opt.steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double* g_table = grad.data();
    double* g_w1 = g_table + n_table;
    double* g_b1 = g_w1 + n_w1;
    double* g_w2 = g_b1 + hidden;
    double* g_b2 = g_w2 + hidden;
    for (int s = 0; s < opt.batch; ++s) {
      const Location a = pick(sample_rng), b = pick(sample_rng);
      const double target = net.travel_time(a, b) / emb.target_scale;
      auto ea = emb.row(a), eb = emb.row(b);
      double y = emb.b2;
      for (int k = 0; k < hidden; ++k) {
        const double* w = emb.w1.data() + static_cast<std::size_t>(k) * 2 * dim;
        double pre = emb.b1[k];
        for (int d = 0; d < dim; ++d) pre += w[d] * ea[d] + w[dim + d] * eb[d];
        h[k] = std::tanh(pre);
        y += emb.w2[k] * h[k];
      }
      const double dy = 2.0 * (y - target) / opt.batch;
      *g_b2 += dy;
      for (int k = 0; k < hidden; ++k) {
        g_w2[k] += dy * h[k];
        dpre[k] = dy * emb.w2[k] * (1.0 - h[k] * h[k]);
        g_b1[k] += dpre[k];
        const double* w = emb.w1.data() + static_cast<std::size_t>(k) * 2 * dim;
        double* gw = g_w1 + static_cast<std::size_t>(k) * 2 * dim;
        double* ga = g_table + static_cast<std::size_t>(a) * dim;
        double* gb = g_table + static_cast<std::size_t>(b) * dim;
        for (int d = 0; d < dim; ++d) {
          gw[d] += dpre[k] * ea[d];
          gw[dim + d] += dpre[k] * eb[d];
          ga[d] += dpre[k] * w[d];
          gb[d] += dpre[k] * w[dim + d];
        }
      }
    }
    const double frac = static_cast<double>(step) / static_cast<double>(opt.steps);
    const double lr = opt.lr * (1.0 - frac * (1.0 - opt.final_lr_fraction));
    adam.step(params, grad, adam_cfg, lr);
    unpack();
    if ((step + 1) % every == 0) {
      result.checkpoint_losses.push_back(detail::embedding_loss(emb, net, eval_pairs));
    }
  }

  if (n * n <= 250000) {
    std::vector<std::pair<Location, Location>> all;
    all.reserve(n * n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) all.emplace_back(a, b);
    result.final_loss = detail::embedding_loss(emb, net, all);
  } else {
    result.final_loss = detail::embedding_loss(emb, net, eval_pairs);
  }
  result.embedding = std::move(emb);
  return result;
}

inline EmbeddingTrainResult train_embeddings(const RoadNetwork& net, int dim, int steps,
                                             std::uint64_t seed) {
  EmbeddingOptions opt;
  opt.dim = dim;
  opt.steps = steps;
  opt.seed = seed;
  return train_embeddings(net, opt);
}

}  // namespace neuradp
