#include "godnf/opinion.hpp"

#include <cmath>

#include "godnf/blend.hpp"

namespace godnf {

void FJConfig::validate() const {
  require(lambda.size() == weights.rows(), "FJConfig: lambda size mismatch");
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    require(lambda[i] >= 0.0 && lambda[i] <= 1.0,
            "FJConfig: lambda entries must lie in [0, 1]");
  const Index* outer = weights.outerIndexPtr();
  const Real* vals = weights.valuePtr();
  for (Index i = 0; i < weights.outerSize(); ++i) {
    Real s = 0.0;
    for (Index k = outer[i]; k < outer[i + 1]; ++k) s += vals[k];
    require(std::abs(s - 1.0) <= 1e-12,
            "FJConfig: weights row " + std::to_string(i) + " does not sum to 1");
  }
}

namespace {

void check_row_stochastic(const SpMat& w, Real tol) {
  const Index* outer = w.outerIndexPtr();
  const Real* vals = w.valuePtr();
  for (Index i = 0; i < w.outerSize(); ++i) {
    Real s = 0.0;
    for (Index k = outer[i]; k < outer[i + 1]; ++k) s += vals[k];
    if (std::abs(s - 1.0) > tol)
      throw std::invalid_argument("fd_step: row " + std::to_string(i) +
                                  " of w sums to " + std::to_string(s));
  }
}

}  // namespace

Matrix fd_step(const Matrix& x, const SpMat& w) {
  require(w.cols() == x.rows(), "fd_step: shape mismatch");
  check_row_stochastic(w, 1e-9);
  return spmm(w, x);
}

Matrix fj_step(const Matrix& x, const Matrix& x0, const FJConfig& cfg) {
  require(x.rows() == x0.rows() && x.cols() == x0.cols(),
          "fj_step: x and x0 shapes differ");
  require(cfg.weights.cols() == x.rows(), "fj_step: weights shape mismatch");
  Matrix neighborhood = spmm(cfg.weights, x);
  attachment_blend_inplace(cfg.lambda, x0, neighborhood);
  return neighborhood;
}

Matrix hk_step(const Matrix& x, const Graph& g, const HKConfig& cfg) {
  require(x.rows() == g.n, "hk_step: x row count must equal node count");
  Matrix out(x.rows(), x.cols());
  for (Index i = 0; i < g.n; ++i) {
    RowVector acc = RowVector::Zero(x.cols());
    int count = 0;
    if (cfg.include_self) {
      acc += x.row(i);
      ++count;
    }
    for (Index j : g.adj(i)) {
      if ((x.row(i) - x.row(j)).norm() <= cfg.epsilon) {
        acc += x.row(j);
        ++count;
      }
    }
    if (count == 0)
      out.row(i) = x.row(i);  // empty confidence set keeps the opinion
    else
      out.row(i) = acc / Real(count);
  }
  return out;
}

}  // namespace godnf
