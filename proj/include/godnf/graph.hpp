#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "godnf/types.hpp"

namespace godnf {

/// Immutable sparse undirected graph. Edges are stored once in canonical
/// (u < v) order plus a CSR adjacency over both directions. No self-loops,
/// no duplicates.
struct Graph {
  Index n = 0;
  std::vector<std::pair<Index, Index>> edges;  // canonical u < v
  std::vector<Index> offsets;                  // size n + 1
  std::vector<Index> neighbors;                // size 2 * m, sorted per row
  std::vector<Index> degrees;                  // size n

  Index num_edges() const { return static_cast<Index>(edges.size()); }

  std::span<const Index> adj(Index v) const {
    return {neighbors.data() + offsets[v],
            static_cast<std::size_t>(offsets[v + 1] - offsets[v])};
  }

  bool connected() const;
};

/// Builds a Graph from an arbitrary edge list: duplicates and self-loops are
/// dropped, the adjacency is symmetrized. Throws on out-of-range endpoints
/// or n == 0.
Graph build_graph(const std::vector<std::pair<Index, Index>>& edge_list,
                  Index n);

/// Symmetrically normalized Laplacian I - D^{-1/2} A D^{-1/2}. Rows of
/// isolated nodes are left empty (diagonal 0).
SpMat normalized_laplacian(const Graph& g);

/// Row-stochastic influence matrix: self_weight on the diagonal and
/// (1 - self_weight) / deg(i) on each neighbor. Isolated nodes carry their
/// full mass on the diagonal and require self_weight > 0.
SpMat uniform_row_stochastic(const Graph& g, Real self_weight);

/// Max absolute column sum and max absolute row sum, one pass over the
/// stored entries.
std::pair<Real, Real> norm_1_inf(const SpMat& mat);

/// Sparse-dense product mat * x with fixed left-to-right accumulation
/// within each row.
Matrix spmm(const SpMat& mat, const Matrix& x);

/// Parses the "u v" per line edge-list format ('#' starts a comment line).
/// Node count is max endpoint + 1 unless n_hint is larger.
Graph read_edge_list(const std::string& path, Index n_hint = 0);

void write_edge_list(const Graph& g, const std::string& path);

}  // namespace godnf
