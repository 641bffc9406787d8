#pragma once

#include "godnf/graph.hpp"
#include "godnf/types.hpp"

namespace godnf {

/// Bounded-confidence configuration. A neighbor j influences i when
/// ||x_i - x_j||_2 <= epsilon; the node's own opinion is always part of the
/// average when include_self is set.
struct HKConfig {
  Real epsilon = 0.0;
  bool include_self = true;
};

/// Per-node attachment to the initial opinion plus a row-stochastic
/// influence matrix.
struct FJConfig {
  Vector lambda;  // each entry in [0, 1]
  SpMat weights;

  void validate() const;
};

/// One weighted-averaging step x' = W x. Throws if any row sum of w
/// deviates from 1 by more than 1e-9.
Matrix fd_step(const Matrix& x, const SpMat& w);

/// One step of x'_i = lambda_i x0_i + (1 - lambda_i) sum_j W_ij x_j.
Matrix fj_step(const Matrix& x, const Matrix& x0, const FJConfig& cfg);

/// Bounded-confidence averaging over graph neighbors within epsilon.
Matrix hk_step(const Matrix& x, const Graph& g, const HKConfig& cfg);

}  // namespace godnf
