#include "neuradp/roadnet.hpp"

#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <sstream>

#include "neuradp/oracles.hpp"

namespace neuradp {
namespace {

RoadNetwork cycle3() {
  return build_network({0, 1, 2}, {{0, 1, 10}, {1, 2, 20}, {2, 0, 30}});
}

// Dijkstra over the raw edge list, written separately from the library.
std::vector<Seconds> reference_dijkstra(const std::vector<Edge>& edges, std::int64_t n, std::int64_t src) {
  std::vector<std::vector<std::pair<std::int64_t, Seconds>>> adj(n);
  for (const auto& e : edges) adj[e.src].push_back({e.dst, e.seconds});
  std::vector<Seconds> d(n, std::numeric_limits<Seconds>::infinity());
  using Item = std::pair<Seconds, std::int64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  d[src] = 0;
  pq.push({0, src});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du > d[u]) continue;
    for (auto [v, w] : adj[u])
      if (du + w < d[v]) {
        d[v] = du + w;
        pq.push({d[v], v});
      }
  }
  return d;
}

TEST(RoadNetwork, SingleNodeHasZeroTable) {
  const auto net = build_network({7}, {});
  ASSERT_EQ(net.size(), 1u);
  EXPECT_EQ(net.travel_time(0, 0), 0.0);
}

TEST(RoadNetwork, DirectedCycleSumsLegs) {
  const auto net = cycle3();
  const auto fw = oracle::floyd_warshall(net);
  EXPECT_EQ(net.travel_time(0, 2), 30.0);
  EXPECT_EQ(net.travel_time(2, 1), 40.0);
  for (Location a = 0; a < 3; ++a)
    for (Location b = 0; b < 3; ++b) EXPECT_EQ(net.travel_time(a, b), fw[a][b]);
}

TEST(RoadNetwork, DeadEndNodeIsRemoved) {
  // 0..3 form a cycle, 4 only has an incoming edge.
  const auto net = build_network({0, 1, 2, 3, 4}, {{0, 1, 5}, {1, 2, 5}, {2, 3, 5}, {3, 0, 5}, {2, 4, 5}});
  EXPECT_EQ(net.size(), 4u);
  EXPECT_FALSE(net.find(4).has_value());
  EXPECT_EQ(net.removed_count(), 1u);
  // Trip endpoints at the removed node snap to its neighbour.
  ASSERT_TRUE(net.nearest_retained(4).has_value());
  EXPECT_EQ(net.node_id(*net.nearest_retained(4)), 2);
}

TEST(RoadNetwork, EmptyGraphIsAnError) {
  EXPECT_THROW(build_network({}, {}), ContractError);
}

TEST(RoadNetwork, NonPositiveWeightIsAnError) {
  EXPECT_THROW(build_network({0, 1}, {{0, 1, 0.0}, {1, 0, 1.0}}), ContractError);
}

TEST(RoadNetwork, ZeroDiagonalAndSingleArc) {
  const auto net = build_network({0, 1}, {{0, 1, 42}, {1, 0, 42}});
  EXPECT_EQ(net.travel_time(0, 0), 0.0);
  EXPECT_EQ(net.travel_time(0, 1), 42.0);
}

TEST(RoadNetwork, UnknownLocationThrows) {
  const auto net = cycle3();
  EXPECT_THROW((void)net.travel_time(0, 3), std::out_of_range);
  EXPECT_THROW((void)net.travel_time(-1, 0), std::out_of_range);
}

TEST(RoadNetwork, UnitGridCornerToCornerMatchesBfs) {
  const auto net = make_grid_network(10, 10, 1.0);
  // BFS hop count on the grid.
  std::vector<int> hops(100, -1);
  std::queue<int> q;
  hops[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    const int r = u / 10, c = u % 10;
    const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (auto [rr, cc] : nb) {
      if (rr < 0 || rr >= 10 || cc < 0 || cc >= 10) continue;
      if (hops[rr * 10 + cc] < 0) {
        hops[rr * 10 + cc] = hops[u] + 1;
        q.push(rr * 10 + cc);
      }
    }
  }
  EXPECT_EQ(hops[99], 18);
  EXPECT_EQ(net.travel_time(0, 99), 18.0);
}

TEST(RoadNetwork, MatchesIndependentDijkstraAndTriangleInequality) {
  Rng rng(5);
  std::uniform_int_distribution<int> w(1, 100);
  const int n = 60;
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) {
    edges.push_back({i, (i + 1) % n, static_cast<Seconds>(w(rng))});
    for (int k = 0; k < 2; ++k) edges.push_back({i, w(rng) % n, static_cast<Seconds>(w(rng))});
  }
  std::erase_if(edges, [](const Edge& e) { return e.src == e.dst; });
  std::vector<std::int64_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  const auto net = build_network(ids, edges);
  ASSERT_EQ(net.size(), static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const auto ref = reference_dijkstra(edges, n, s);
    for (int t = 0; t < n; ++t) ASSERT_EQ(net.travel_time(*net.find(s), *net.find(t)), ref[t]);
  }
  std::uniform_int_distribution<Location> loc(0, n - 1);
  for (int k = 0; k < 2000; ++k) {
    const Location a = loc(rng), b = loc(rng), c = loc(rng);
    EXPECT_LE(net.travel_time(a, c), net.travel_time(a, b) + net.travel_time(b, c));
  }
}

TEST(RoadNetwork, NextHopWalksAShortestPath) {
  const auto net = make_grid_network(6, 6, 30.0);
  for (Location a : {0, 7, 35})
    for (Location b : {0, 14, 29, 35}) {
      Location at = a;
      Seconds t = 0;
      while (at != b) {
        const Location h = net.next_hop(at, b);
        t += net.travel_time(at, h);
        at = h;
      }
      EXPECT_EQ(t, net.travel_time(a, b));
    }
}

TEST(RoadNetwork, LazyRowsAgreeWithDense) {
  const auto edges = make_grid_edges(7, 5, 12.5);
  std::vector<std::int64_t> ids(35);
  std::iota(ids.begin(), ids.end(), 0);
  const auto dense = build_network(ids, edges);
  const auto lazy = build_network(ids, edges, {.dense_threshold = 4});
  EXPECT_TRUE(dense.dense());
  EXPECT_FALSE(lazy.dense());
  for (Location a = 0; a < 35; ++a)
    for (Location b = 0; b < 35; ++b) ASSERT_EQ(dense.travel_time(a, b), lazy.travel_time(a, b));
  EXPECT_EQ(dense.diameter(), lazy.diameter());
}

TEST(RoadNetwork, EdgeListRoundTrip) {
  const auto edges = make_grid_edges(3, 4, 60.0);
  std::stringstream ss;
  write_edge_list(ss, edges);
  const auto back = parse_edge_list(ss);
  ASSERT_EQ(back.size(), edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    EXPECT_EQ(back[k].src, edges[k].src);
    EXPECT_EQ(back[k].dst, edges[k].dst);
    EXPECT_EQ(back[k].seconds, edges[k].seconds);
  }
}

TEST(RoadNetwork, EdgeListReportsLine) {
  std::stringstream ss("0 1 5\n# comment\n1 x 5\n");
  try {
    parse_edge_list(ss, "city.txt");
    FAIL() << "expected a parse error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("city.txt:3"), std::string::npos);
  }
}

TEST(Embedding, OneLocationHasZeroLoss) {
  const auto net = build_network({0}, {});
  const auto res = train_embeddings(net, 2, 200, 1);
  EXPECT_LT(res.final_loss, 1e-6);
  EXPECT_EQ(res.embedding.num_locations(), 1u);
}

TEST(Embedding, TwoLocationsAreFittable) {
  const auto net = build_network({0, 1}, {{0, 1, 100}, {1, 0, 100}});
  const auto res = train_embeddings(net, 2, 1500, 3);
  // Normalised targets are 0, 1, 1, 0: mean square 0.5.
  EXPECT_LT(res.final_loss, 0.01 * 0.5);
}

TEST(Embedding, DeterministicGivenSeed) {
  const auto net = make_grid_network(4, 4, 60.0);
  const auto a = train_embeddings(net, 4, 300, 9);
  const auto b = train_embeddings(net, 4, 300, 9);
  EXPECT_EQ(a.embedding.table, b.embedding.table);
  EXPECT_EQ(a.final_loss, b.final_loss);
  const auto c = train_embeddings(net, 4, 300, 10);
  EXPECT_NE(a.embedding.table, c.embedding.table);
}

TEST(Embedding, LossTrendIsDecreasing) {
  const auto net = make_grid_network(6, 6, 60.0);
  EmbeddingOptions opt;
  opt.dim = 8;
  opt.steps = 1500;
  opt.checkpoints = 8;
  opt.seed = 4;
  const auto res = train_embeddings(net, opt);
  ASSERT_GE(res.checkpoint_losses.size(), 5u);
  int inversions = 0;
  for (std::size_t k = 1; k < res.checkpoint_losses.size(); ++k)
    inversions += res.checkpoint_losses[k] > res.checkpoint_losses[k - 1];
  EXPECT_LE(inversions, 1);
  EXPECT_LT(res.checkpoint_losses.back(), res.checkpoint_losses.front());
  EXPECT_TRUE(res.embedding.all_finite());
  EXPECT_EQ(res.embedding.table.size(), net.size() * 8);
}

TEST(Embedding, MissingLocationThrows) {
  const auto net = make_grid_network(2, 2, 60.0);
  const auto emb = train_embeddings(net, 2, 10, 1).embedding;
  EXPECT_THROW((void)emb.row(4), std::out_of_range);
}

}  // namespace
}  // namespace neuradp
