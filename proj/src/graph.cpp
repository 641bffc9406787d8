#include "godnf/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace godnf {

bool Graph::connected() const {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index count = 1;
  while (!stack.empty()) {
    Index v = stack.back();
    stack.pop_back();
    for (Index u : adj(v)) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

Graph build_graph(const std::vector<std::pair<Index, Index>>& edge_list,
                  Index n) {
  require(n > 0, "build_graph: n must be positive");
  std::vector<std::pair<Index, Index>> canon;
  canon.reserve(edge_list.size());
  for (auto [u, v] : edge_list) {
    require(u >= 0 && u < n && v >= 0 && v < n,
            "build_graph: edge endpoint out of range [0, n)");
    if (u == v) continue;
    canon.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  Graph g;
  g.n = n;
  g.edges = std::move(canon);
  g.degrees.assign(n, 0);
  for (auto [u, v] : g.edges) {
    ++g.degrees[u];
    ++g.degrees[v];
  }
  g.offsets.assign(n + 1, 0);
  for (Index i = 0; i < n; ++i) g.offsets[i + 1] = g.offsets[i] + g.degrees[i];
  g.neighbors.assign(g.offsets[n], 0);
  std::vector<Index> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (auto [u, v] : g.edges) {
    g.neighbors[cursor[u]++] = v;
    g.neighbors[cursor[v]++] = u;
  }
  for (Index i = 0; i < n; ++i)
    std::sort(g.neighbors.begin() + g.offsets[i],
              g.neighbors.begin() + g.offsets[i + 1]);
  return g;
}

SpMat normalized_laplacian(const Graph& g) {
  std::vector<Eigen::Triplet<Real, Index>> trip;
  trip.reserve(g.neighbors.size() + g.n);
  std::vector<Real> inv_sqrt_deg(g.n, 0.0);
  for (Index i = 0; i < g.n; ++i)
    if (g.degrees[i] > 0) inv_sqrt_deg[i] = 1.0 / std::sqrt(Real(g.degrees[i]));
  for (Index i = 0; i < g.n; ++i) {
    if (g.degrees[i] == 0) continue;
    trip.emplace_back(i, i, 1.0);
    for (Index j : g.adj(i))
      trip.emplace_back(i, j, -inv_sqrt_deg[i] * inv_sqrt_deg[j]);
  }
  SpMat lg(g.n, g.n);
  lg.setFromTriplets(trip.begin(), trip.end());
  lg.makeCompressed();
  return lg;
}

SpMat uniform_row_stochastic(const Graph& g, Real self_weight) {
  require(self_weight >= 0.0 && self_weight < 1.0,
          "uniform_row_stochastic: self_weight must lie in [0, 1)");
  std::vector<Eigen::Triplet<Real, Index>> trip;
  trip.reserve(g.neighbors.size() + g.n);
  for (Index i = 0; i < g.n; ++i) {
    if (g.degrees[i] == 0) {
      require(self_weight > 0.0,
              "uniform_row_stochastic: isolated node " + std::to_string(i) +
                  " needs self_weight > 0");
      trip.emplace_back(i, i, 1.0);
      continue;
    }
    if (self_weight > 0.0) trip.emplace_back(i, i, self_weight);
    const Real share = (1.0 - self_weight) / Real(g.degrees[i]);
    for (Index j : g.adj(i)) trip.emplace_back(i, j, share);
  }
  SpMat w(g.n, g.n);
  w.setFromTriplets(trip.begin(), trip.end());
  w.makeCompressed();
  return w;
}

std::pair<Real, Real> norm_1_inf(const SpMat& mat) {
  std::vector<Real> col_sum(mat.cols(), 0.0);
  Real norm_inf = 0.0;
  const Index* outer = mat.outerIndexPtr();
  const Index* inner = mat.innerIndexPtr();
  const Real* vals = mat.valuePtr();
  for (Index i = 0; i < mat.outerSize(); ++i) {
    Real row_sum = 0.0;
    for (Index k = outer[i]; k < outer[i + 1]; ++k) {
      const Real a = std::abs(vals[k]);
      row_sum += a;
      col_sum[inner[k]] += a;
    }
    norm_inf = std::max(norm_inf, row_sum);
  }
  Real norm_1 = 0.0;
  for (Real c : col_sum) norm_1 = std::max(norm_1, c);
  return {norm_1, norm_inf};
}

Matrix spmm(const SpMat& mat, const Matrix& x) {
  require(mat.cols() == x.rows(), "spmm: dimension mismatch");
  Matrix out = Matrix::Zero(mat.rows(), x.cols());
  const Index* outer = mat.outerIndexPtr();
  const Index* inner = mat.innerIndexPtr();
  const Real* vals = mat.valuePtr();
  for (Index i = 0; i < mat.rows(); ++i) {
    auto acc = out.row(i);
    for (Index k = outer[i]; k < outer[i + 1]; ++k)
      acc += vals[k] * x.row(inner[k]);
  }
  return out;
}

Graph read_edge_list(const std::string& path, Index n_hint) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  std::vector<std::pair<Index, Index>> edges;
  Index max_node = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u)) continue;  // blank or comment-only line
    if (!(ls >> v))
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected \"u v\" pair");
    if (u < 0 || v < 0)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": negative node id");
    edges.emplace_back(static_cast<Index>(u), static_cast<Index>(v));
    max_node = std::max({max_node, static_cast<Index>(u), static_cast<Index>(v)});
  }
  Index n = std::max(n_hint, max_node + 1);
  if (n == 0) throw std::runtime_error(path + ": no edges and no node count");
  return build_graph(edges, n);
}

void write_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  out << "# n " << g.n << "\n";
  for (auto [u, v] : g.edges) out << u << " " << v << "\n";
}

}  // namespace godnf
