#pragma once

#include <cstdint>
#include <vector>

#include "godnf/graph.hpp"

namespace godnf {

struct SbmResult {
  Graph graph;
  std::vector<int> labels;  // community per node, contiguous blocks
};

/// Stochastic block model with balanced contiguous communities (sizes differ
/// by at most 1). Every intra-community pair draws an edge with p_in, every
/// inter-community pair with p_out. Deterministic given seed.
SbmResult generate_sbm(Index n, int k, Real p_in, Real p_out,
                       std::uint64_t seed);

/// Adds a deterministic chain of bridge edges between components until the
/// graph is connected. Returns the input unchanged if already connected.
Graph ensure_connected(const Graph& g);

/// Same repair restricted to same-label fragments: after the call each label
/// class induces a connected subgraph. Never adds cross-label edges.
Graph ensure_blocks_connected(const Graph& g, const std::vector<int>& labels);

}  // namespace godnf
