#include "godnf/sbm.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "godnf/rng.hpp"

namespace godnf {

SbmResult generate_sbm(Index n, int k, Real p_in, Real p_out,
                       std::uint64_t seed) {
  require(n > 0, "n must be positive");
  require(k >= 1 && k <= n, "k must lie in [1, n]");
  require(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0,
          "need 0 <= p_out <= p_in <= 1");

  SbmResult out;
  out.labels.resize(static_cast<std::size_t>(n));
  const Index base = n / k;
  const Index extra = n % k;  // first `extra` communities get one more node
  Index next = 0;
  for (int c = 0; c < k; ++c) {
    const Index size = base + (c < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i)
      out.labels[static_cast<std::size_t>(next++)] = c;
  }

  std::mt19937_64 eng(derive_seed(seed, 0));
  std::vector<std::pair<Index, Index>> edges;
  for (Index u = 0; u < n; ++u)
    for (Index v = u + 1; v < n; ++v) {
      const Real p = out.labels[static_cast<std::size_t>(u)] ==
                             out.labels[static_cast<std::size_t>(v)]
                         ? p_in
                         : p_out;
      if (uniform01(eng) < p) edges.emplace_back(u, v);
    }
  out.graph = build_graph(edges, n);
  return out;
}

namespace {

struct UnionFind {
  std::vector<Index> parent;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }

  Index find(Index v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  }

  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

Graph ensure_connected(const Graph& g) {
  if (g.n <= 1 || g.connected()) return g;
  UnionFind uf(g.n);
  for (const auto& [u, v] : g.edges) uf.unite(u, v);
  // lowest node of each component, in ascending order, chained together
  std::vector<Index> reps;
  for (Index v = 0; v < g.n; ++v)
    if (uf.find(v) == v) reps.push_back(v);
  auto edges = g.edges;
  for (std::size_t i = 1; i < reps.size(); ++i)
    edges.emplace_back(reps[i - 1], reps[i]);
  return build_graph(edges, g.n);
}

Graph ensure_blocks_connected(const Graph& g,
                              const std::vector<int>& labels) {
  require(static_cast<Index>(labels.size()) == g.n,
          "labels must cover every node");
  UnionFind uf(g.n);
  for (const auto& [u, v] : g.edges)
    if (labels[static_cast<std::size_t>(u)] ==
        labels[static_cast<std::size_t>(v)])
      uf.unite(u, v);

  // per label: fragment representatives in ascending order, chained
  std::map<int, std::vector<Index>> reps;
  for (Index v = 0; v < g.n; ++v)
    if (uf.find(v) == v) reps[labels[static_cast<std::size_t>(v)]].push_back(v);

  auto edges = g.edges;
  for (const auto& [label, nodes] : reps)
    for (std::size_t i = 1; i < nodes.size(); ++i)
      edges.emplace_back(nodes[i - 1], nodes[i]);
  return build_graph(edges, g.n);
}

}  // namespace godnf
