#pragma once

// Reference implementations for cross-checking the library's sparse kernels.
// Everything here is deliberately naive: dense storage, schoolbook loops.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "godnf/graph.hpp"
#include "godnf/types.hpp"

namespace oracle {

using godnf::Graph;
using godnf::Index;
using godnf::Matrix;
using godnf::Real;
using godnf::SpMat;
using godnf::Vector;

inline Matrix dense(const SpMat& a) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.outerSize(); ++i)
    for (SpMat::InnerIterator it(a, i); it; ++it)
      out(it.row(), it.col()) += it.value();
  return out;
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index k = 0; k < a.cols(); ++k)
      for (Index j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
  return out;
}

inline std::pair<Real, Real> norms_1_inf(const Matrix& a) {
  Real n1 = 0.0, ninf = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    Real c = 0.0;
    for (Index i = 0; i < a.rows(); ++i) c += std::abs(a(i, j));
    n1 = std::max(n1, c);
  }
  for (Index i = 0; i < a.rows(); ++i) {
    Real r = 0.0;
    for (Index j = 0; j < a.cols(); ++j) r += std::abs(a(i, j));
    ninf = std::max(ninf, r);
  }
  return {n1, ninf};
}

/// Largest singular value via power iteration on AᵀA.
inline Real spectral_norm(const Matrix& a, int iters = 200,
                          std::uint64_t seed = 12345) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  std::mt19937_64 eng(seed);
  std::normal_distribution<Real> nd;
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v[i] = nd(eng);
  Real nv = v.norm();
  if (nv == 0.0) v[0] = 1.0; else v /= nv;
  Real sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector u = a * v;
    sigma = u.norm();
    if (sigma == 0.0) return 0.0;
    Vector w = a.transpose() * u;
    Real nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
  }
  return sigma;
}

inline Real rel_err(Real got, Real want) {
  return std::abs(got - want) /
         std::max({Real(1), std::abs(got), std::abs(want)});
}

inline Graph path_graph(Index n) {
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return godnf::build_graph(e, n);
}

inline Graph cycle_graph(Index n) {
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return godnf::build_graph(e, n);
}

inline Graph complete_graph(Index n) {
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return godnf::build_graph(e, n);
}

inline Graph star_graph(Index leaves) {
  std::vector<std::pair<Index, Index>> e;
  for (Index i = 1; i <= leaves; ++i) e.emplace_back(0, i);
  return godnf::build_graph(e, leaves + 1);
}

inline Real unit(std::mt19937_64& eng) {
  return std::uniform_real_distribution<Real>(0.0, 1.0)(eng);
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& eng,
                            Real scale = 1.0) {
  std::uniform_real_distribution<Real> ud(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = ud(eng);
  return m;
}

/// Random connected graph: spanning tree plus extra random edges.
inline Graph random_connected_graph(Index n, Real extra_edge_frac,
                                    std::mt19937_64& eng) {
  std::vector<std::pair<Index, Index>> e;
  std::uniform_real_distribution<Real> ud(0.0, 1.0);
  for (Index i = 1; i < n; ++i) {
    Index parent = static_cast<Index>(eng() % static_cast<std::uint64_t>(i));
    e.emplace_back(parent, i);
  }
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (ud(eng) < extra_edge_frac) e.emplace_back(i, j);
  return godnf::build_graph(e, n);
}

inline SpMat sparse_from_dense(const Matrix& a) {
  std::vector<Eigen::Triplet<Real, Index>> trips;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != 0.0)
        trips.emplace_back(i, j, a(i, j));
  SpMat m(a.rows(), a.cols());
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

/// Random sparse matrix with the given fill probability, entries in
/// [-scale, scale].
inline SpMat random_sparse(Index n, Real density, std::mt19937_64& eng,
                           Real scale = 1.0) {
  std::uniform_real_distribution<Real> ud(0.0, 1.0);
  std::uniform_real_distribution<Real> vd(-scale, scale);
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (ud(eng) < density) a(i, j) = vd(eng);
  return sparse_from_dense(a);
}

}  // namespace oracle
