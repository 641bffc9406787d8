#include "godnf/diffusion.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

#include "godnf/blend.hpp"

namespace godnf {

namespace {

// W - mu * L_g on the union support; W itself when mu == 0.
SpMat diffusion_kernel(const SpMat& w, const SpMat& lg, Real mu) {
  if (mu == 0.0) return w;
  SpMat k = w - mu * lg;
  k.makeCompressed();
  return k;
}

void scale_rows_inplace(SpMat& m, const Vector& factors) {
  for (Index i = 0; i < m.outerSize(); ++i) {
    const Real f = factors[i];
    for (Index k = m.outerIndexPtr()[i]; k < m.outerIndexPtr()[i + 1]; ++k)
      m.valuePtr()[k] *= f;
  }
}

Matrix step_with_kernel(const Matrix& x, const Matrix& x0, const SpMat& kernel,
                        const Vector& lambda, Real alpha) {
  Matrix y = spmm(kernel, x);
  attachment_blend_inplace(lambda, x0, y);
  return retention_blend(alpha, x, std::move(y));
}

Real frobenius(const SpMat& m) {
  Real acc = 0.0;
  const Index nnz = static_cast<Index>(m.nonZeros());
  for (Index k = 0; k < nnz; ++k) acc += m.valuePtr()[k] * m.valuePtr()[k];
  return std::sqrt(acc);
}

void check_square(const SpMat& m, Index n, const char* name) {
  require(m.rows() == n && m.cols() == n,
          std::string(name) + " must be " + std::to_string(n) + "x" +
              std::to_string(n));
}

}  // namespace

void DiffusionParams::validate(Index n) const {
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(lambda.size() == n, "lambda must have one entry per node");
  for (Index i = 0; i < n; ++i)
    require(lambda[i] >= 0.0 && lambda[i] <= 1.0,
            "lambda[" + std::to_string(i) + "] must lie in [0, 1]");
  require(mu >= 0.0 && std::isfinite(mu), "mu must be finite and >= 0");
  require(steps >= 1, "steps must be >= 1");
}

const SpMat& WeightSchedule::at(int t) const {
  if (mode == WeightMode::Static || t == 0) return base;
  require(t >= 1 && t <= static_cast<int>(per_step.size()),
          "weight schedule has no matrix for step " + std::to_string(t));
  return per_step[static_cast<std::size_t>(t - 1)];
}

const SpMat& WeightSchedule::last() const {
  if (mode == WeightMode::Static || per_step.empty()) return base;
  return per_step.back();
}

void WeightSchedule::validate() const {
  const Index n = base.rows();
  check_square(base, n, "base weights");
  for (Index i = 0; i < n; ++i) {
    Real sum = 0.0;
    for (Index k = base.outerIndexPtr()[i]; k < base.outerIndexPtr()[i + 1];
         ++k) {
      require(base.valuePtr()[k] >= 0.0,
              "base weights must be nonnegative (row " + std::to_string(i) +
                  ")");
      sum += base.valuePtr()[k];
    }
    require(std::abs(sum - 1.0) <= 1e-9,
            "base weight row " + std::to_string(i) + " must sum to 1");
  }
  require(max_delta_norm > 0.0, "max_delta_norm must be positive");
  for (const SpMat& w : per_step) check_square(w, n, "scheduled weights");
  if (mode == WeightMode::Static)
    require(per_step.empty(), "static schedules carry no per-step weights");
}

SpMat combined_matrix(const SpMat& w, const SpMat& lg,
                      const DiffusionParams& params) {
  const Index n = w.rows();
  check_square(w, n, "weights");
  check_square(lg, n, "laplacian");
  require(params.lambda.size() == n, "lambda must have one entry per node");
  SpMat m = diffusion_kernel(w, lg, params.mu);
  m.makeCompressed();
  scale_rows_inplace(m, (1.0 - params.lambda.array()).matrix());
  return m;
}

Real op_norm_bound(const SpMat& m) {
  const auto [n1, ninf] = norm_1_inf(m);
  return std::sqrt(n1 * ninf);
}

Matrix godnf_step(const Matrix& x, const Matrix& x0, const SpMat& w,
                  const SpMat& lg, const DiffusionParams& params) {
  const Index n = x.rows();
  params.validate(n);
  check_square(w, n, "weights");
  check_square(lg, n, "laplacian");
  require(x0.rows() == n && x0.cols() == x.cols(),
          "anchor state must match the current state's shape");
  const SpMat kernel = diffusion_kernel(w, lg, params.mu);
  return step_with_kernel(x, x0, kernel, params.lambda, params.alpha);
}

SpMat evolve_weights(const WeightSchedule& schedule, const SpMat& delta,
                     int t) {
  require(t >= 0, "step index must be >= 0");
  const SpMat& w = schedule.at(t);
  const Index n = w.rows();
  check_square(delta, n, "delta");
  SpMat packed;
  const SpMat* dp = &delta;
  if (!delta.isCompressed()) {
    packed = delta;
    packed.makeCompressed();
    dp = &packed;
  }

  Real dnorm = frobenius(*dp);
  if (dnorm == 0.0) return w;
  const Real scale = dnorm > schedule.max_delta_norm
                         ? schedule.max_delta_norm / dnorm
                         : 1.0;
  const Real eta = 1.0 / (1.0 + static_cast<Real>(t));

  SpMat next = w;
  next.makeCompressed();
  const Index* wo = next.outerIndexPtr();
  const Index* wi = next.innerIndexPtr();
  Real* wv = next.valuePtr();
  const Index* doff = dp->outerIndexPtr();
  const Index* di = dp->innerIndexPtr();
  const Real* dv = dp->valuePtr();

  for (Index i = 0; i < n; ++i) {
    const Index dbeg = doff[i], dend = doff[i + 1];
    if (dbeg == dend) continue;  // untouched rows stay bit-identical
    // merge delta into the row; every delta entry must sit on the support
    Index k = wo[i];
    for (Index d = dbeg; d < dend; ++d) {
      while (k < wo[i + 1] && wi[k] < di[d]) ++k;
      require(k < wo[i + 1] && wi[k] == di[d],
              "delta entry (" + std::to_string(i) + ", " +
                  std::to_string(di[d]) + ") is outside the weight support");
      wv[k] += eta * scale * dv[d];
    }
    Real sum = 0.0;
    for (k = wo[i]; k < wo[i + 1]; ++k) {
      if (wv[k] < 0.0) wv[k] = 0.0;
      sum += wv[k];
    }
    require(sum > 0.0, "weight row " + std::to_string(i) +
                           " lost all mass after the update");
    const Real inv = 1.0 / sum;
    for (k = wo[i]; k < wo[i + 1]; ++k) wv[k] *= inv;
  }

  // cap the realized move: renormalization is not nonexpansive, so pull the
  // candidate back toward W(t) until ||W(t+1) - W(t)||_F <= eta * k
  Real moved = 0.0;
  const Index nnz = static_cast<Index>(next.nonZeros());
  for (Index k = 0; k < nnz; ++k) {
    const Real d = next.valuePtr()[k] - w.valuePtr()[k];
    moved += d * d;
  }
  moved = std::sqrt(moved);
  const Real cap = eta * schedule.max_delta_norm;
  if (moved > cap) {
    const Real c = cap / moved;
    for (Index k = 0; k < nnz; ++k)
      next.valuePtr()[k] =
          w.valuePtr()[k] + c * (next.valuePtr()[k] - w.valuePtr()[k]);
  }
  return next;
}

std::pair<Trajectory, ConvergenceReport> run_diffusion(
    const Matrix& x0, const Graph& g, const DiffusionParams& params,
    const WeightSchedule& schedule, const RunOptions& opts) {
  const Index n = g.n;
  params.validate(n);
  schedule.validate();
  require(schedule.base.rows() == n, "weights must match the graph size");
  require(x0.rows() == n, "initial state must have one row per node");
  require(all_finite(x0), "initial state must be finite");
  if (schedule.mode == WeightMode::Dynamic)
    require(static_cast<int>(schedule.per_step.size()) >= params.steps - 1,
            "dynamic schedule must be materialized through step T - 1");

  const SpMat lg = normalized_laplacian(g);
  const bool is_static = schedule.mode == WeightMode::Static;

  SpMat kernel;
  Real bound = 0.0;
  if (is_static) {
    kernel = diffusion_kernel(schedule.base, lg, params.mu);
    bound = op_norm_bound(combined_matrix(schedule.base, lg, params));
  }

  Trajectory traj;
  traj.snapshots.reserve(static_cast<std::size_t>(params.steps) + 1);
  traj.snapshots.push_back(x0);
  traj.step_deltas.reserve(static_cast<std::size_t>(params.steps));

  ConvergenceReport report;
  report.bound_per_step.reserve(static_cast<std::size_t>(params.steps));

  Matrix x = x0;
  for (int t = 0; t < params.steps; ++t) {
    const SpMat& wt = schedule.at(t);
    if (!is_static) {
      kernel = diffusion_kernel(wt, lg, params.mu);
      bound = op_norm_bound(combined_matrix(wt, lg, params));
    }
    Matrix x_next = step_with_kernel(x, x0, kernel, params.lambda, params.alpha);
    if (!all_finite(x_next) ||
        x_next.cwiseAbs().maxCoeff() > opts.divergence_cap)
      throw DivergenceError(t + 1, "state exceeded the divergence cap at step " +
                                       std::to_string(t + 1));
    const Real base_norm = x.norm();
    const Real delta =
        (x_next - x).norm() / (base_norm > 0.0 ? base_norm : 1.0);
    traj.step_deltas.push_back(delta);
    report.bound_per_step.push_back(bound);
    x = std::move(x_next);
    traj.snapshots.push_back(x);
  }

  const Real max_bound =
      *std::max_element(report.bound_per_step.begin(),
                        report.bound_per_step.end());
  report.contraction_beta = params.alpha + (1.0 - params.alpha) * max_bound;
  report.final_delta = traj.step_deltas.back();
  report.converged = report.final_delta < opts.tol;

  if (opts.solve_fixed_point) {
    const SpMat m_star = combined_matrix(schedule.last(), lg, params);
    if (op_norm_bound(m_star) < 1.0) {
      Real residual = 0.0;
      fixed_point_solve(x0, m_star, params.lambda, &residual);
      report.fixed_point_residual = residual;
    }
  }
  return {std::move(traj), std::move(report)};
}

Matrix fixed_point_solve(const Matrix& x0, const SpMat& m_star,
                         const Vector& lambda, Real* residual_out) {
  const Index n = x0.rows();
  check_square(m_star, n, "fixed-point operator");
  require(lambda.size() == n, "lambda must have one entry per node");
  const Real bound = op_norm_bound(m_star);
  require(bound < 1.0,
          "fixed point not certified: operator norm bound is " +
              std::to_string(bound));

  Matrix rhs = x0;
  rhs.array().colwise() *= lambda.array();

  Matrix x;
  if (n <= 5000) {
    Matrix a = Matrix::Identity(n, n) - Matrix(m_star);
    x = Eigen::PartialPivLU<Matrix>(a).solve(rhs);
  } else {
    x = rhs;
    Matrix term = rhs;
    // term norm shrinks at least geometrically with ratio `bound`
    for (int iter = 0; term.norm() >= 1e-12; ++iter) {
      require(iter < 1000000, "fixed-point series failed to truncate");
      term = spmm(m_star, term);
      x += term;
    }
  }

  if (residual_out != nullptr) {
    const Matrix r = (x - spmm(m_star, x)) - rhs;
    const Real rhs_norm = rhs.norm();
    *residual_out = r.norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
  }
  return x;
}

Real reg_loss(const std::vector<SpMat>& m_sequence, Real threshold) {
  Real total = 0.0;
  for (const SpMat& m : m_sequence)
    total += std::max(0.0, op_norm_bound(m) - threshold);
  return total;
}

}  // namespace godnf
