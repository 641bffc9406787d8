#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "godnf/graph.hpp"
#include "godnf/types.hpp"

namespace godnf {

struct DiffusionParams {
  Real alpha = 0.0;  // retention, [0, 1)
  Vector lambda;     // per-node stubbornness, each in [0, 1]
  Real mu = 0.0;     // smoothness strength, >= 0
  int steps = 1;     // T

  void validate(Index n) const;
};

enum class WeightMode { Static, Dynamic };

/// Influence weights over time. Static mode reuses `base` at every step;
/// Dynamic mode carries the materialized sequence W(1..) in `per_step`.
struct WeightSchedule {
  WeightMode mode = WeightMode::Static;
  SpMat base;
  std::vector<SpMat> per_step;
  Real max_delta_norm = 1.0;  // Frobenius cap k on weight adjustments

  const SpMat& at(int t) const;
  const SpMat& last() const;
  void validate() const;
};

struct Trajectory {
  std::vector<Matrix> snapshots;  // X(0..T)
  std::vector<Real> step_deltas;  // relative Frobenius change, T entries
};

struct ConvergenceReport {
  std::vector<Real> bound_per_step;  // sqrt(|M|_1 |M|_inf) per step
  Real contraction_beta = 0.0;       // alpha + (1 - alpha) * max bound
  bool converged = false;
  Real final_delta = std::numeric_limits<Real>::quiet_NaN();
  Real fixed_point_residual = std::numeric_limits<Real>::quiet_NaN();
};

struct RunOptions {
  Real tol = 1e-6;
  bool solve_fixed_point = false;
  Real divergence_cap = 1e12;
};

/// M = diag(1 - lambda) (W - mu * L_g), sparse on the union support.
SpMat combined_matrix(const SpMat& w, const SpMat& lg,
                      const DiffusionParams& params);

/// sqrt(|M|_1 * |M|_inf), a linear-time upper bound on the spectral norm.
Real op_norm_bound(const SpMat& m);

/// One update x' = alpha x + (1 - alpha)[Lambda x0 + (I - Lambda)(W - mu L_g) x].
Matrix godnf_step(const Matrix& x, const Matrix& x0, const SpMat& w,
                  const SpMat& lg, const DiffusionParams& params);

/// W(t+1) = project(W(t) + eta(t) * delta) with eta(t) = 1/(1 + t). The
/// projection clamps entries to >= 0 and renormalizes each row; the realized
/// change is additionally capped at eta(t) * max_delta_norm in Frobenius norm
/// so that ||W(t+1) - W(t)||_F <= k/(1+t) holds unconditionally. Deltas
/// larger than max_delta_norm are clipped first. Rows untouched by delta are
/// copied bit-for-bit.
SpMat evolve_weights(const WeightSchedule& schedule, const SpMat& delta, int t);

/// Runs T update steps, recording snapshots, per-step relative changes and
/// per-step norm bounds. Throws DivergenceError if any state entry exceeds
/// the divergence cap.
std::pair<Trajectory, ConvergenceReport> run_diffusion(
    const Matrix& x0, const Graph& g, const DiffusionParams& params,
    const WeightSchedule& schedule, const RunOptions& opts = {});

/// Solves (I - M*) X* = Lambda X(0). Requires op_norm_bound(m_star) < 1;
/// dense LU up to n = 5000, Neumann series beyond. The relative residual is
/// written to *residual_out when given.
Matrix fixed_point_solve(const Matrix& x0, const SpMat& m_star,
                         const Vector& lambda, Real* residual_out = nullptr);

/// Hinge penalty sum_t max(0, sqrt(|M(t)|_1 |M(t)|_inf) - threshold).
Real reg_loss(const std::vector<SpMat>& m_sequence, Real threshold = 1.0);

}  // namespace godnf
