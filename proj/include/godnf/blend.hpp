#pragma once

#include "godnf/types.hpp"

namespace godnf {

/// y_i <- lambda_i * x0_i + (1 - lambda_i) * y_i, rowwise. The endpoints are
/// exact: lambda_i == 0 leaves y_i untouched and lambda_i == 1 copies x0_i,
/// so reductions to plain averaging dynamics are bit-identical.
inline void attachment_blend_inplace(const Vector& lambda, const Matrix& x0,
                                     Matrix& y) {
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const Real l = lambda[i];
    if (l == 0.0) continue;
    if (l == 1.0) {
      y.row(i) = x0.row(i);
      continue;
    }
    y.row(i) = l * x0.row(i) + (1.0 - l) * y.row(i);
  }
}

/// x' = alpha * x + (1 - alpha) * y with an exact alpha == 0 endpoint.
inline Matrix retention_blend(Real alpha, const Matrix& x, Matrix&& y) {
  if (alpha == 0.0) return std::move(y);
  y = alpha * x + (1.0 - alpha) * y;
  return std::move(y);
}

}  // namespace godnf
