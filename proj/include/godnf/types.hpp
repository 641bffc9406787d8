#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace godnf {

using Real = double;
using Index = int;

// Node features are stored row-major: one contiguous row per node.
using Matrix =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;

// Compressed row storage; outer/inner/value pointers expose the raw
// (offsets, indices, values) triplet.
using SpMat = Eigen::SparseMatrix<Real, Eigen::RowMajor, Index>;

/// Thrown when an entry of the evolving state exceeds the magnitude cap.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

inline bool all_finite(const Matrix& x) { return x.allFinite(); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace godnf
