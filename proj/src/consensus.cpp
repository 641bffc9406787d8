#include "godnf/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

namespace godnf {

namespace {

struct UnionFind {
  std::vector<Index> parent;

  explicit UnionFind(Index n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), Index{0});
  }

  Index find(Index v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];  // path halving
      v = parent[v];
    }
    return v;
  }

  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a > b) std::swap(a, b);
    parent[b] = a;  // root at the smaller id keeps labels deterministic
  }
};

// roots -> dense cluster ids in order of first appearance
std::vector<int> dense_labels(UnionFind& uf, Index n, int& k_out) {
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<int> of_root(static_cast<std::size_t>(n), -1);
  int k = 0;
  for (Index v = 0; v < n; ++v) {
    const Index r = uf.find(v);
    if (of_root[r] < 0) of_root[r] = k++;
    label[v] = of_root[r];
  }
  k_out = k;
  return label;
}

}  // namespace

std::string to_string(ConsensusKind kind) {
  switch (kind) {
    case ConsensusKind::Single: return "single";
    case ConsensusKind::Multi: return "multi";
    case ConsensusKind::Individualized: return "individualized";
    case ConsensusKind::NotConverged: return "not_converged";
  }
  return "not_converged";
}

std::vector<std::vector<Index>> ConsensusReport::clusters() const {
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(k));
  for (Index v = 0; v < static_cast<Index>(cluster_assignments.size()); ++v)
    out[static_cast<std::size_t>(cluster_assignments[v])].push_back(v);
  return out;
}

ConsensusReport classify_convergence(const Matrix& final_state, Real tol) {
  require(tol > 0.0, "tolerance must be positive");
  const Index n = final_state.rows();
  require(n > 0, "state must be nonempty");

  UnionFind uf(n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if ((final_state.row(i) - final_state.row(j)).norm() <= tol)
        uf.unite(i, j);

  ConsensusReport report;
  report.tolerance = tol;
  report.cluster_assignments = dense_labels(uf, n, report.k);

  report.cluster_values = Matrix::Zero(report.k, final_state.cols());
  std::vector<int> sizes(static_cast<std::size_t>(report.k), 0);
  for (Index v = 0; v < n; ++v) {
    const int c = report.cluster_assignments[v];
    report.cluster_values.row(c) += final_state.row(v);
    ++sizes[static_cast<std::size_t>(c)];
  }
  for (int c = 0; c < report.k; ++c)
    report.cluster_values.row(c) /= static_cast<Real>(sizes[c]);

  if (report.k == 1)
    report.kind = ConsensusKind::Single;
  else if (report.k == n)
    report.kind = ConsensusKind::Individualized;
  else
    report.kind = ConsensusKind::Multi;
  return report;
}

std::vector<std::vector<Index>> detect_blocks(const SpMat& m) {
  const Index n = m.rows();
  require(m.cols() == n, "matrix must be square");
  UnionFind uf(n);
  for (Index i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(m, i); it; ++it)
      if (it.value() != 0.0 && it.col() != i) uf.unite(i, it.col());

  int k = 0;
  const std::vector<int> label = dense_labels(uf, n, k);
  std::vector<std::vector<Index>> blocks(static_cast<std::size_t>(k));
  for (Index v = 0; v < n; ++v)
    blocks[static_cast<std::size_t>(label[v])].push_back(v);
  return blocks;
}

namespace {

bool is_row_stochastic(const SpMat& w, Real tol) {
  for (Index i = 0; i < w.rows(); ++i) {
    Real sum = 0.0;
    for (SpMat::InnerIterator it(w, i); it; ++it) {
      if (it.value() < 0.0) return false;
      sum += it.value();
    }
    if (std::abs(sum - 1.0) > tol) return false;
  }
  return true;
}

bool support_connected_and_lazy(const SpMat& w) {
  const Index n = w.rows();
  UnionFind uf(n);
  std::vector<bool> lazy(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i)
    for (SpMat::InnerIterator it(w, i); it; ++it) {
      if (it.value() == 0.0) continue;
      if (it.col() == i)
        lazy[static_cast<std::size_t>(i)] = it.value() > 0.0;
      else
        uf.unite(i, it.col());
    }
  if (std::find(lazy.begin(), lazy.end(), false) != lazy.end()) return false;
  const Index root = uf.find(0);
  for (Index v = 1; v < n; ++v)
    if (uf.find(v) != root) return false;
  return true;
}

// restriction of (lambda, x0) to two node sets differs in any entry by > tol
bool blocks_differ(const Vector& lambda, const Matrix& x0,
                   const std::vector<Index>& a, const std::vector<Index>& b,
                   Real tol) {
  if (a.size() != b.size()) return true;
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (std::abs(lambda[a[p]] - lambda[b[p]]) > tol) return true;
    if ((x0.row(a[p]) - x0.row(b[p])).cwiseAbs().maxCoeff() > tol) return true;
  }
  return false;
}

}  // namespace

std::vector<RegimeCheck> verify_regime_conditions(
    const DiffusionParams& params, const WeightSchedule& schedule,
    const SpMat& lg, const Matrix& x0, Real lambda_threshold) {
  const SpMat& w_star = schedule.last();
  const Index n = w_star.rows();
  params.validate(n);
  require(x0.rows() == n, "anchor state must have one row per node");

  std::vector<RegimeCheck> checks;

  {
    RegimeCheck single;
    single.expected = ConsensusKind::Single;
    single.expected_k = 1;
    single.satisfied = params.alpha == 0.0 && params.mu == 0.0 &&
                       params.lambda.cwiseAbs().maxCoeff() == 0.0 &&
                       is_row_stochastic(w_star, 1e-9) &&
                       support_connected_and_lazy(w_star);
    checks.push_back(single);
  }

  {
    RegimeCheck multi;
    multi.expected = ConsensusKind::Multi;
    const SpMat m_star = combined_matrix(w_star, lg, params);
    const auto blocks = detect_blocks(m_star);
    multi.expected_k = static_cast<int>(blocks.size());
    bool differ = false;
    for (std::size_t a = 0; a < blocks.size() && !differ; ++a)
      for (std::size_t b = a + 1; b < blocks.size() && !differ; ++b)
        differ = blocks_differ(params.lambda, x0, blocks[a], blocks[b], 1e-9);
    multi.satisfied = blocks.size() >= 2 && differ;
    checks.push_back(multi);
  }

  {
    RegimeCheck indiv;
    indiv.expected = ConsensusKind::Individualized;
    indiv.expected_k = static_cast<int>(n);
    bool distinct = true;
    for (Index i = 0; i < n && distinct; ++i)
      for (Index j = i + 1; j < n && distinct; ++j)
        distinct = (x0.row(i) - x0.row(j)).cwiseAbs().maxCoeff() > 1e-9;
    indiv.satisfied = distinct && params.lambda.minCoeff() >= lambda_threshold;
    checks.push_back(indiv);
  }

  return checks;
}

std::string to_json_string(const ConsensusReport& report) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(report.kind);
  j["k"] = report.k;
  j["clusters"] = report.clusters();
  auto values = nlohmann::ordered_json::array();
  for (Index c = 0; c < report.cluster_values.rows(); ++c) {
    auto row = nlohmann::ordered_json::array();
    for (Index d = 0; d < report.cluster_values.cols(); ++d)
      row.push_back(report.cluster_values(c, d));
    values.push_back(std::move(row));
  }
  j["values"] = std::move(values);
  return j.dump(2);
}

}  // namespace godnf
