#include "godnf/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "godnf/blend.hpp"
#include "godnf/rng.hpp"

namespace godnf {

namespace {

Real sigmoid(Real z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

Real softplus(Real z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Real sign_sub(Real v) {  // subgradient of |.|, 0 at the kink
  if (v > 0.0) return 1.0;
  if (v < 0.0) return -1.0;
  return 0.0;
}

}  // namespace

Index WPattern::slot(Index i, Index j) const {
  const auto begin = cols.begin() + row_begin(i);
  const auto end = cols.begin() + row_end(i);
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<Index>(it - cols.begin());
}

WPattern build_w_pattern(const Graph& g) {
  WPattern pat;
  pat.n = g.n;
  pat.offsets.resize(static_cast<std::size_t>(g.n) + 1, 0);
  pat.cols.reserve(g.neighbors.size() + static_cast<std::size_t>(g.n));
  for (Index i = 0; i < g.n; ++i) {
    bool placed = false;
    for (Index j : g.adj(i)) {
      if (!placed && i < j) {
        pat.cols.push_back(i);
        placed = true;
      }
      pat.cols.push_back(j);
    }
    if (!placed) pat.cols.push_back(i);
    pat.offsets[static_cast<std::size_t>(i) + 1] =
        static_cast<Index>(pat.cols.size());
  }
  return pat;
}

SpMat pattern_matrix(const WPattern& pattern, const std::vector<Real>& values) {
  require(values.size() == pattern.cols.size(),
          "values must cover every pattern slot");
  Eigen::Map<const SpMat> view(pattern.n, pattern.n, pattern.slots(),
                               pattern.offsets.data(), pattern.cols.data(),
                               values.data());
  return SpMat(view);
}

Vector ModelParams::lambda() const {
  Vector out(lambda_logits.size());
  for (Index i = 0; i < lambda_logits.size(); ++i)
    out[i] = sigmoid(lambda_logits[i]);
  return out;
}

Real ModelParams::mu() const { return softplus(mu_logit); }

std::vector<Real> ModelParams::weight_values() const {
  std::vector<Real> vals(edge_logits.size());
  for (Index i = 0; i < pattern.n; ++i) {
    const Index b = pattern.row_begin(i), e = pattern.row_end(i);
    Real mx = -std::numeric_limits<Real>::infinity();
    for (Index s = b; s < e; ++s)
      mx = std::max(mx, edge_logits[static_cast<std::size_t>(s)]);
    Real sum = 0.0;
    for (Index s = b; s < e; ++s) {
      const Real v = std::exp(edge_logits[static_cast<std::size_t>(s)] - mx);
      vals[static_cast<std::size_t>(s)] = v;
      sum += v;
    }
    for (Index s = b; s < e; ++s) vals[static_cast<std::size_t>(s)] /= sum;
  }
  return vals;
}

void TrainConfig::validate() const {
  require(task == TaskKind::Regression || num_classes >= 2,
          "num_classes must be >= 2");
  require(latent_dim >= 1, "latent_dim must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(lr > 0.0, "lr must be positive");
  require(steps >= 1, "steps must be >= 1");
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  require(train_frac > 0.0 && val_frac > 0.0 &&
              train_frac + val_frac < 1.0,
          "split fractions must be positive and leave room for a test split");
  require(rho > 0.0, "rho must be positive");
  require(max_delta_norm > 0.0, "max_delta_norm must be positive");
}

ModelParams init_params(const Graph& g, Index feature_dim,
                        const TrainConfig& cfg) {
  cfg.validate();
  require(feature_dim >= 1, "feature_dim must be >= 1");
  const Index d = cfg.latent_dim;
  const Index c = cfg.task == TaskKind::Classification ? cfg.num_classes : 1;

  ModelParams p;
  p.pattern = build_w_pattern(g);
  p.alpha = cfg.alpha;
  std::mt19937_64 eng(derive_seed(cfg.seed, 2));
  auto glorot = [&eng](Index rows, Index cols) {
    const Real a = std::sqrt(6.0 / static_cast<Real>(rows + cols));
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j)
        m(i, j) = (2.0 * uniform01(eng) - 1.0) * a;
    return m;
  };
  p.f_w = glorot(feature_dim, d);
  p.f_b = RowVector::Zero(d);
  p.r_w = glorot(d, c);
  p.r_b = RowVector::Zero(c);
  p.lambda_logits = Vector::Zero(g.n);  // lambda = 0.5
  p.mu_logit = -4.6;                    // mu ~ 0.01
  p.edge_logits.assign(static_cast<std::size_t>(p.pattern.slots()), 0.0);
  return p;
}

namespace {

// Laplacian entries gathered onto the trainable pattern (a superset of the
// Laplacian support).
std::vector<Real> lap_on_pattern(const WPattern& pat, const SpMat& lg) {
  std::vector<Real> vals(static_cast<std::size_t>(pat.slots()), 0.0);
  for (Index i = 0; i < pat.n; ++i)
    for (SpMat::InnerIterator it(lg, i); it; ++it) {
      const Index s = pat.slot(i, it.col());
      require(s >= 0, "laplacian entry outside the trainable pattern");
      vals[static_cast<std::size_t>(s)] = it.value();
    }
  return vals;
}

std::pair<Real, Real> pattern_norms_1_inf(const WPattern& pat,
                                          const std::vector<Real>& vals) {
  std::vector<Real> col(static_cast<std::size_t>(pat.n), 0.0);
  Real ninf = 0.0;
  for (Index i = 0; i < pat.n; ++i) {
    Real row = 0.0;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const Real a = std::abs(vals[static_cast<std::size_t>(s)]);
      row += a;
      col[static_cast<std::size_t>(pat.cols[static_cast<std::size_t>(s)])] += a;
    }
    ninf = std::max(ninf, row);
  }
  const Real n1 = col.empty() ? 0.0 : *std::max_element(col.begin(), col.end());
  return {n1, ninf};
}

bool row_touched(const WPattern& pat, const std::vector<Real>& delta,
                 Index i) {
  for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
    if (delta[static_cast<std::size_t>(s)] != 0.0) return true;
  return false;
}

Real flat_norm(const std::vector<Real>& v) {
  Real acc = 0.0;
  for (Real x : v) acc += x * x;
  return std::sqrt(acc);
}

// mirrors evolve_weights on slot values; rows without a nonzero delta entry
// pass through bit-identically
std::vector<Real> evolve_flat(const WPattern& pat, const std::vector<Real>& w,
                              const std::vector<Real>& delta, int t, Real k) {
  std::vector<Real> next = w;
  const Real dnorm = flat_norm(delta);
  if (dnorm == 0.0) return next;
  const Real scale = dnorm > k ? k / dnorm : 1.0;
  const Real eta = 1.0 / (1.0 + static_cast<Real>(t));

  for (Index i = 0; i < pat.n; ++i) {
    if (!row_touched(pat, delta, i)) continue;
    Real sum = 0.0;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      auto& v = next[static_cast<std::size_t>(s)];
      v += eta * scale * delta[static_cast<std::size_t>(s)];
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    require(sum > 0.0, "weight row " + std::to_string(i) +
                           " lost all mass after the update");
    const Real inv = 1.0 / sum;  // same op order as the sparse-matrix path
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
      next[static_cast<std::size_t>(s)] *= inv;
  }

  Real moved = 0.0;
  for (std::size_t s = 0; s < next.size(); ++s) {
    const Real d = next[s] - w[s];
    moved += d * d;
  }
  moved = std::sqrt(moved);
  const Real cap = eta * k;
  if (moved > cap) {
    const Real c = cap / moved;
    for (std::size_t s = 0; s < next.size(); ++s)
      next[s] = w[s] + c * (next[s] - w[s]);
  }
  return next;
}

// adjoint of evolve_flat: accumulates d/dW(t) into dw given the upstream
// gradient du on W(t+1)
void evolve_flat_backward(const WPattern& pat, const std::vector<Real>& w,
                          const std::vector<Real>& delta, int t, Real k,
                          const std::vector<Real>& du, std::vector<Real>& dw) {
  const std::size_t slots = w.size();
  const Real dnorm = flat_norm(delta);
  if (dnorm == 0.0) {
    for (std::size_t s = 0; s < slots; ++s) dw[s] += du[s];
    return;
  }
  const Real scale = dnorm > k ? k / dnorm : 1.0;
  const Real eta = 1.0 / (1.0 + static_cast<Real>(t));

  // recompute the forward intermediates
  std::vector<char> touched(static_cast<std::size_t>(pat.n), 0);
  std::vector<Real> u(w), r(w), srow(static_cast<std::size_t>(pat.n), 1.0);
  for (Index i = 0; i < pat.n; ++i) {
    if (!row_touched(pat, delta, i)) continue;
    touched[static_cast<std::size_t>(i)] = 1;
    Real sum = 0.0;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      auto& v = u[static_cast<std::size_t>(s)];
      v += eta * scale * delta[static_cast<std::size_t>(s)];
      const Real clamped = v > 0.0 ? v : 0.0;
      r[static_cast<std::size_t>(s)] = clamped;
      sum += clamped;
    }
    srow[static_cast<std::size_t>(i)] = sum;
    const Real inv = 1.0 / sum;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
      r[static_cast<std::size_t>(s)] *= inv;
  }
  std::vector<Real> bigd(slots, 0.0);
  Real moved = 0.0;
  for (Index i = 0; i < pat.n; ++i) {
    if (!touched[static_cast<std::size_t>(i)]) continue;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const Real d = r[static_cast<std::size_t>(s)] -
                     w[static_cast<std::size_t>(s)];
      bigd[static_cast<std::size_t>(s)] = d;
      moved += d * d;
    }
  }
  moved = std::sqrt(moved);
  const Real cap = eta * k;

  // W(t+1) = W + c(D) * D with D = R(W) - W
  std::vector<Real> gd(slots, 0.0);
  if (moved > cap) {
    const Real c = cap / moved;
    Real inner = 0.0;
    for (std::size_t s = 0; s < slots; ++s) inner += du[s] * bigd[s];
    const Real kfac = c * inner / (moved * moved);
    for (std::size_t s = 0; s < slots; ++s)
      gd[s] = c * du[s] - kfac * bigd[s];
  } else {
    gd = du;
  }
  for (Index i = 0; i < pat.n; ++i) {
    if (!touched[static_cast<std::size_t>(i)]) {
      for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
        dw[static_cast<std::size_t>(s)] += du[static_cast<std::size_t>(s)];
      continue;
    }
    // direct term du - gD, then gD through the renormalized row
    Real dot = 0.0;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
      dot += gd[static_cast<std::size_t>(s)] * r[static_cast<std::size_t>(s)];
    const Real inv = 1.0 / srow[static_cast<std::size_t>(i)];
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const auto si = static_cast<std::size_t>(s);
      dw[si] += du[si] - gd[si];
      const Real dv = (gd[si] - dot) * inv;
      if (u[si] > 0.0) dw[si] += dv;  // clamp kink uses subgradient 0
    }
  }
}

Matrix readout(const Matrix& x, const ModelParams& params) {
  Matrix preds = x * params.r_w;
  preds.rowwise() += params.r_b;
  return preds;
}

Real metric_from_preds(const Matrix& preds, const Targets& targets,
                       const std::vector<Index>& mask,
                       const TrainConfig& cfg) {
  require(!mask.empty(), "mask must be nonempty");
  if (cfg.task == TaskKind::Classification) {
    Index hits = 0;
    for (Index i : mask) {
      Index best = 0;
      preds.row(i).maxCoeff(&best);
      if (best == targets.labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<Real>(hits) / static_cast<Real>(mask.size());
  }
  Real acc = 0.0;
  for (Index i : mask) {
    const Real p =
        cfg.sigmoid_readout ? sigmoid(preds(i, 0)) : preds(i, 0);
    acc += std::abs(p - targets.values[i]);
  }
  return acc / static_cast<Real>(mask.size());
}

}  // namespace

ForwardCache forward(const Graph& g, const Matrix& h,
                     const ModelParams& params, const TrainConfig& cfg,
                     const std::vector<std::vector<Real>>& deltas) {
  cfg.validate();
  require(h.rows() == g.n, "features must have one row per node");
  require(h.cols() == params.f_w.rows(),
          "feature width must match the input transform");
  const int T = cfg.steps;
  const WPattern& pat = params.pattern;

  ForwardCache cache;
  cache.lambda = params.lambda();
  cache.mu = params.mu();
  cache.lap_vals = lap_on_pattern(pat, normalized_laplacian(g));

  Matrix z = h * params.f_w;
  z.rowwise() += params.f_b;
  cache.x0 = z.array().tanh();

  cache.w_sched.reserve(static_cast<std::size_t>(T));
  cache.w_sched.push_back(params.weight_values());
  const bool dynamic = cfg.mode == WeightMode::Dynamic;
  if (dynamic) {
    for (int t = 0; t + 1 < T; ++t) {
      const bool has_delta =
          static_cast<std::size_t>(t) < deltas.size() && !deltas[t].empty();
      if (!has_delta) {
        cache.w_sched.push_back(cache.w_sched.back());
        continue;
      }
      require(deltas[t].size() == static_cast<std::size_t>(pat.slots()),
              "delta must cover every pattern slot");
      cache.w_sched.push_back(evolve_flat(pat, cache.w_sched.back(), deltas[t],
                                          t, cfg.max_delta_norm));
    }
  }

  auto kernel_vals = [&](const std::vector<Real>& w_vals) {
    std::vector<Real> k(w_vals.size());
    for (std::size_t s = 0; s < k.size(); ++s)
      k[s] = w_vals[s] - cache.mu * cache.lap_vals[s];
    return k;
  };

  cache.xs.reserve(static_cast<std::size_t>(T) + 1);
  cache.xs.push_back(cache.x0);
  cache.ps.reserve(static_cast<std::size_t>(T));

  SpMat kmat;
  if (!dynamic) {
    const std::vector<Real> k = kernel_vals(cache.w_sched[0]);
    kmat = pattern_matrix(pat, k);
    std::vector<Real> m(k);
    for (Index i = 0; i < pat.n; ++i)
      for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
        m[static_cast<std::size_t>(s)] *= 1.0 - cache.lambda[i];
    const auto [n1, ninf] = pattern_norms_1_inf(pat, m);
    cache.bounds.push_back(std::sqrt(n1 * ninf));
  }

  for (int t = 0; t < T; ++t) {
    const std::vector<Real>& w_vals =
        cache.w_sched[dynamic ? static_cast<std::size_t>(t) : 0];
    if (dynamic) {
      const std::vector<Real> k = kernel_vals(w_vals);
      kmat = pattern_matrix(pat, k);
      std::vector<Real> m(k);
      for (Index i = 0; i < pat.n; ++i)
        for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
          m[static_cast<std::size_t>(s)] *= 1.0 - cache.lambda[i];
      const auto [n1, ninf] = pattern_norms_1_inf(pat, m);
      cache.bounds.push_back(std::sqrt(n1 * ninf));
    }
    cache.ps.push_back(spmm(kmat, cache.xs.back()));
    Matrix y = cache.ps.back();
    attachment_blend_inplace(cache.lambda, cache.x0, y);
    Matrix x_next = retention_blend(params.alpha, cache.xs.back(),
                                    std::move(y));
    if (!all_finite(x_next))
      throw DivergenceError(
          t + 1, "non-finite activations at step " + std::to_string(t + 1));
    cache.xs.push_back(std::move(x_next));
  }

  cache.preds = readout(cache.xs.back(), params);
  return cache;
}

TrainLoss compute_loss(const Matrix& preds, const Targets& targets,
                       const std::vector<Index>& mask, const TrainConfig& cfg,
                       const std::vector<Real>& bounds) {
  require(!mask.empty(), "mask must be nonempty");
  TrainLoss out;
  const auto msize = static_cast<Real>(mask.size());
  if (cfg.task == TaskKind::Classification) {
    require(static_cast<Index>(targets.labels.size()) >= preds.rows(),
            "labels must cover every node");
    for (Index i : mask) {
      const int y = targets.labels[static_cast<std::size_t>(i)];
      require(y >= 0 && y < cfg.num_classes, "label out of range");
      const Real mx = preds.row(i).maxCoeff();
      const Real lse =
          mx + std::log((preds.row(i).array() - mx).exp().sum());
      out.task_loss += lse - preds(i, y);
    }
    out.task_loss /= msize;
  } else {
    require(targets.values.size() >= preds.rows(),
            "targets must cover every node");
    for (Index i : mask) {
      const Real p =
          cfg.sigmoid_readout ? sigmoid(preds(i, 0)) : preds(i, 0);
      out.task_loss += std::abs(p - targets.values[i]);
    }
    out.task_loss /= msize;
  }
  for (Real b : bounds) out.reg_loss += std::max(0.0, b - cfg.rho);
  out.total = out.task_loss + out.reg_loss;
  return out;
}

namespace {

// hinge-active norm-bound adjoint for one scheduled matrix; accumulates into
// the slot gradient, dmu and dlambda
void reg_term_backward(const WPattern& pat, const std::vector<Real>& w_vals,
                       const std::vector<Real>& lap_vals, const Vector& lambda,
                       Real mu, Real rho, std::vector<Real>& dw, Real& dmu,
                       Vector& dlambda) {
  std::vector<Real> m(w_vals.size());
  for (Index i = 0; i < pat.n; ++i)
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const auto si = static_cast<std::size_t>(s);
      m[si] = (1.0 - lambda[i]) * (w_vals[si] - mu * lap_vals[si]);
    }
  std::vector<Real> col(static_cast<std::size_t>(pat.n), 0.0);
  std::vector<Real> row(static_cast<std::size_t>(pat.n), 0.0);
  for (Index i = 0; i < pat.n; ++i)
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const Real a = std::abs(m[static_cast<std::size_t>(s)]);
      row[static_cast<std::size_t>(i)] += a;
      col[static_cast<std::size_t>(pat.cols[static_cast<std::size_t>(s)])] += a;
    }
  const auto jstar = static_cast<Index>(
      std::max_element(col.begin(), col.end()) - col.begin());
  const auto istar = static_cast<Index>(
      std::max_element(row.begin(), row.end()) - row.begin());
  const Real n1 = col[static_cast<std::size_t>(jstar)];
  const Real ninf = row[static_cast<std::size_t>(istar)];
  if (std::sqrt(n1 * ninf) <= rho) return;  // hinge inactive (kink -> 0)

  const Real db_dn1 = 0.5 * std::sqrt(ninf / n1);
  const Real db_dninf = 0.5 * std::sqrt(n1 / ninf);
  auto add_dm = [&](Index i, Index s, Real dm) {
    const auto si = static_cast<std::size_t>(s);
    const Real k = w_vals[si] - mu * lap_vals[si];
    dw[si] += (1.0 - lambda[i]) * dm;
    dmu += (1.0 - lambda[i]) * (-lap_vals[si]) * dm;
    dlambda[i] += -k * dm;
  };
  for (Index i = 0; i < pat.n; ++i)
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const auto si = static_cast<std::size_t>(s);
      Real dm = 0.0;
      if (pat.cols[si] == jstar) dm += db_dn1 * sign_sub(m[si]);
      if (i == istar) dm += db_dninf * sign_sub(m[si]);
      if (dm != 0.0) add_dm(i, s, dm);
    }
}

}  // namespace

ParamGrads backward(const Graph& g, const Matrix& h, const ModelParams& params,
                    const TrainConfig& cfg, const ForwardCache& cache,
                    const Targets& targets, const std::vector<Index>& mask,
                    const std::vector<std::vector<Real>>& deltas) {
  require(!cache.xs.empty(), "forward cache is missing");
  require(!mask.empty(), "mask must be nonempty");
  const Index n = g.n;
  const Index d = cache.x0.cols();
  const Index c = cache.preds.cols();
  const int T = cfg.steps;
  const WPattern& pat = params.pattern;
  const bool dynamic = cfg.mode == WeightMode::Dynamic;
  const auto msize = static_cast<Real>(mask.size());

  Matrix dpreds = Matrix::Zero(n, c);
  if (cfg.task == TaskKind::Classification) {
    for (Index i : mask) {
      const Real mx = cache.preds.row(i).maxCoeff();
      Eigen::Array<Real, 1, Eigen::Dynamic> e =
          (cache.preds.row(i).array() - mx).exp();
      dpreds.row(i) = (e / e.sum()).matrix() / msize;
      dpreds(i, targets.labels[static_cast<std::size_t>(i)]) -= 1.0 / msize;
    }
  } else {
    for (Index i : mask) {
      const Real p = cache.preds(i, 0);
      if (cfg.sigmoid_readout) {
        const Real q = sigmoid(p);
        dpreds(i, 0) =
            sign_sub(q - targets.values[i]) * q * (1.0 - q) / msize;
      } else {
        dpreds(i, 0) = sign_sub(p - targets.values[i]) / msize;
      }
    }
  }

  ParamGrads grads;
  grads.r_w = cache.xs.back().transpose() * dpreds;
  grads.r_b = dpreds.colwise().sum();
  grads.lambda_logits = Vector::Zero(n);
  Vector dlambda = Vector::Zero(n);
  Real dmu = 0.0;

  Matrix gmat = dpreds * params.r_w.transpose();  // dL/dX(T)
  Matrix dx0 = Matrix::Zero(n, d);
  std::vector<std::vector<Real>> dw_sched(
      static_cast<std::size_t>(T),
      std::vector<Real>(static_cast<std::size_t>(pat.slots()), 0.0));

  std::vector<Real> k_static;
  if (!dynamic) {
    k_static.resize(cache.w_sched[0].size());
    for (std::size_t s = 0; s < k_static.size(); ++s)
      k_static[s] = cache.w_sched[0][s] - cache.mu * cache.lap_vals[s];
  }

  for (int t = T - 1; t >= 0; --t) {
    const std::vector<Real>& w_vals =
        cache.w_sched[dynamic ? static_cast<std::size_t>(t) : 0];
    std::vector<Real> k_local;
    const std::vector<Real>* k_vals = &k_static;
    if (dynamic) {
      k_local.resize(w_vals.size());
      for (std::size_t s = 0; s < k_local.size(); ++s)
        k_local[s] = w_vals[s] - cache.mu * cache.lap_vals[s];
      k_vals = &k_local;
    }
    const Matrix& xt = cache.xs[static_cast<std::size_t>(t)];
    const Real one_minus_alpha = 1.0 - params.alpha;

    Matrix smat = gmat;
    for (Index i = 0; i < n; ++i)
      smat.row(i) *= one_minus_alpha * (1.0 - cache.lambda[i]);

    auto& dwt = dw_sched[static_cast<std::size_t>(dynamic ? t : 0)];
    Matrix gnext = params.alpha == 0.0 ? Matrix::Zero(n, d).eval()
                                       : (params.alpha * gmat).eval();
    for (Index i = 0; i < n; ++i) {
      for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
        const auto si = static_cast<std::size_t>(s);
        const Index j = pat.cols[si];
        const Real dk = smat.row(i).dot(xt.row(j));
        dwt[si] += dk;
        dmu += dk * (-cache.lap_vals[si]);
        gnext.row(j) += (*k_vals)[si] * smat.row(i);
      }
      dlambda[i] +=
          one_minus_alpha *
          gmat.row(i).dot(cache.x0.row(i) -
                          cache.ps[static_cast<std::size_t>(t)].row(i));
      dx0.row(i) += one_minus_alpha * cache.lambda[i] * gmat.row(i);
    }
    gmat = std::move(gnext);
  }
  dx0 += gmat;  // X(0) is the anchor itself

  // norm-bound penalty terms
  if (dynamic) {
    for (int t = 0; t < T; ++t)
      reg_term_backward(pat, cache.w_sched[static_cast<std::size_t>(t)],
                        cache.lap_vals, cache.lambda, cache.mu, cfg.rho,
                        dw_sched[static_cast<std::size_t>(t)], dmu, dlambda);
  } else {
    reg_term_backward(pat, cache.w_sched[0], cache.lap_vals, cache.lambda,
                      cache.mu, cfg.rho, dw_sched[0], dmu, dlambda);
  }

  // chain through the projected weight evolution back to W(0)
  if (dynamic && !cfg.freeze_schedule) {
    for (int t = T - 1; t >= 1; --t) {
      const bool has_delta = static_cast<std::size_t>(t - 1) < deltas.size() &&
                             !deltas[static_cast<std::size_t>(t - 1)].empty();
      if (!has_delta) {
        auto& src = dw_sched[static_cast<std::size_t>(t)];
        auto& dst = dw_sched[static_cast<std::size_t>(t - 1)];
        for (std::size_t s = 0; s < src.size(); ++s) dst[s] += src[s];
        continue;
      }
      evolve_flat_backward(pat, cache.w_sched[static_cast<std::size_t>(t - 1)],
                           deltas[static_cast<std::size_t>(t - 1)], t - 1,
                           cfg.max_delta_norm,
                           dw_sched[static_cast<std::size_t>(t)],
                           dw_sched[static_cast<std::size_t>(t - 1)]);
    }
  }

  // softmax rows: d logits from d W(0)
  grads.edge_logits.assign(static_cast<std::size_t>(pat.slots()), 0.0);
  const std::vector<Real>& w0 = cache.w_sched[0];
  const std::vector<Real>& dw0 = dw_sched[0];
  for (Index i = 0; i < n; ++i) {
    Real dot = 0.0;
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s)
      dot += w0[static_cast<std::size_t>(s)] * dw0[static_cast<std::size_t>(s)];
    for (Index s = pat.row_begin(i); s < pat.row_end(i); ++s) {
      const auto si = static_cast<std::size_t>(s);
      grads.edge_logits[si] = w0[si] * (dw0[si] - dot);
    }
  }

  for (Index i = 0; i < n; ++i)
    grads.lambda_logits[i] =
        dlambda[i] * cache.lambda[i] * (1.0 - cache.lambda[i]);
  grads.mu_logit = dmu * sigmoid(params.mu_logit);

  Matrix dz = dx0.array() * (1.0 - cache.x0.array().square());
  grads.f_w = h.transpose() * dz;
  grads.f_b = dz.colwise().sum();
  grads.sched = std::move(dw_sched);
  return grads;
}

void split_nodes(Index n, const TrainConfig& cfg, std::vector<Index>& train,
                 std::vector<Index>& val, std::vector<Index>& test) {
  require(n >= 3, "need at least 3 nodes to split");
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::mt19937_64 eng(derive_seed(cfg.seed, 1));
  std::shuffle(ids.begin(), ids.end(), eng);
  auto n_train = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(cfg.train_frac * static_cast<Real>(n))));
  auto n_val = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(cfg.val_frac * static_cast<Real>(n))));
  n_train = std::min(n_train, static_cast<std::size_t>(n) - 2);
  n_val = std::min(n_val, static_cast<std::size_t>(n) - n_train - 1);
  train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  val.assign(ids.begin() + static_cast<long>(n_train),
             ids.begin() + static_cast<long>(n_train + n_val));
  test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
}

TrainResult train(const Graph& g, const Matrix& h, const Targets& targets,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.task == TaskKind::Classification)
    require(static_cast<Index>(targets.labels.size()) == g.n,
            "labels must cover every node");
  else
    require(targets.values.size() == g.n, "targets must cover every node");

  TrainResult result;
  split_nodes(g.n, cfg, result.train_nodes, result.val_nodes,
              result.test_nodes);
  ModelParams params = init_params(g, h.cols(), cfg);

  const bool dynamic = cfg.mode == WeightMode::Dynamic;
  const bool maximize = cfg.task == TaskKind::Classification;
  Real best = maximize ? -std::numeric_limits<Real>::infinity()
                       : std::numeric_limits<Real>::infinity();
  std::vector<std::vector<Real>> deltas;  // epoch 0 runs the flat schedule

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    ForwardCache cache;
    try {
      cache = forward(g, h, params, cfg, deltas);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), "training diverged at epoch " +
                                          std::to_string(epoch) + ": " +
                                          e.what());
    }
    const TrainLoss train_loss =
        compute_loss(cache.preds, targets, result.train_nodes, cfg,
                     cache.bounds);
    if (!std::isfinite(train_loss.total))
      throw DivergenceError(epoch, "training diverged at epoch " +
                                       std::to_string(epoch));
    const TrainLoss val_loss = compute_loss(cache.preds, targets,
                                            result.val_nodes, cfg,
                                            cache.bounds);
    const Real val_metric =
        metric_from_preds(cache.preds, targets, result.val_nodes, cfg);
    result.history.push_back({epoch, train_loss.total, val_loss.total,
                              val_metric, train_loss.reg_loss});

    if ((maximize && val_metric > best) || (!maximize && val_metric < best)) {
      best = val_metric;
      result.params = params;
    }

    ParamGrads grads = backward(g, h, params, cfg, cache, targets,
                                result.train_nodes, deltas);
    if (dynamic) {
      deltas.assign(static_cast<std::size_t>(std::max(0, cfg.steps - 1)), {});
      for (std::size_t t = 0; t < deltas.size(); ++t) {
        deltas[t] = grads.sched[t];
        for (Real& v : deltas[t]) v = -v;
      }
    }

    params.f_w -= cfg.lr * grads.f_w;
    params.f_b -= cfg.lr * grads.f_b;
    params.r_w -= cfg.lr * grads.r_w;
    params.r_b -= cfg.lr * grads.r_b;
    params.lambda_logits -= cfg.lr * grads.lambda_logits;
    params.mu_logit -= cfg.lr * grads.mu_logit;
    for (std::size_t s = 0; s < params.edge_logits.size(); ++s)
      params.edge_logits[s] -= cfg.lr * grads.edge_logits[s];
  }
  return result;
}

Real evaluate(const ModelParams& params, const Graph& g, const Matrix& h,
              const Targets& targets, const std::vector<Index>& mask,
              const TrainConfig& cfg) {
  const ForwardCache cache = forward(g, h, params, cfg);
  return metric_from_preds(cache.preds, targets, mask, cfg);
}

Real baseline_mae(const Vector& y, const std::vector<Index>& train_mask,
                  const std::vector<Index>& eval_mask) {
  require(!train_mask.empty() && !eval_mask.empty(),
          "masks must be nonempty");
  Real mean = 0.0;
  for (Index i : train_mask) mean += y[i];
  mean /= static_cast<Real>(train_mask.size());
  Real mae = 0.0;
  for (Index i : eval_mask) mae += std::abs(mean - y[i]);
  return mae / static_cast<Real>(eval_mask.size());
}

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

void save_checkpoint(const ModelParams& params, const TrainConfig& cfg,
                     const std::string& path) {
  nlohmann::ordered_json header;
  header["format"] = "godnf-checkpoint-v1";
  header["n"] = params.pattern.n;
  header["f"] = params.f_w.rows();
  header["d"] = params.f_w.cols();
  header["c"] = params.r_w.cols();
  header["slots"] = params.pattern.slots();
  header["alpha"] = params.alpha;
  header["config"] = {
      {"task", cfg.task == TaskKind::Classification ? "classification"
                                                    : "regression"},
      {"steps", cfg.steps},
      {"mode", cfg.mode == WeightMode::Static ? "static" : "dynamic"},
      {"seed", cfg.seed},
      {"latent_dim", cfg.latent_dim},
      {"num_classes", cfg.num_classes},
  };

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open checkpoint file for writing: " + path);
  out << header.dump() << '\n';
  auto dump = [&out](const Real* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(Real)));
  };
  dump(params.f_w.data(), static_cast<std::size_t>(params.f_w.size()));
  dump(params.f_b.data(), static_cast<std::size_t>(params.f_b.size()));
  dump(params.r_w.data(), static_cast<std::size_t>(params.r_w.size()));
  dump(params.r_b.data(), static_cast<std::size_t>(params.r_b.size()));
  dump(params.lambda_logits.data(),
       static_cast<std::size_t>(params.lambda_logits.size()));
  dump(&params.mu_logit, 1);
  dump(params.edge_logits.data(), params.edge_logits.size());
  require(out.good(), "checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path, const Graph& g) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open checkpoint file: " + path);
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  require(header.value("format", "") == "godnf-checkpoint-v1",
          "unrecognized checkpoint format");

  ModelParams p;
  p.pattern = build_w_pattern(g);
  require(header.at("n").get<Index>() == g.n,
          "checkpoint was written for a different node count");
  require(header.at("slots").get<Index>() == p.pattern.slots(),
          "checkpoint was written for a different sparsity pattern");
  const auto f = header.at("f").get<Index>();
  const auto d = header.at("d").get<Index>();
  const auto c = header.at("c").get<Index>();
  p.alpha = header.at("alpha").get<Real>();

  p.f_w.resize(f, d);
  p.f_b.resize(d);
  p.r_w.resize(d, c);
  p.r_b.resize(c);
  p.lambda_logits.resize(g.n);
  p.edge_logits.resize(static_cast<std::size_t>(p.pattern.slots()));
  auto slurp = [&in, &path](Real* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(count * sizeof(Real)));
    require(in.good(), "checkpoint truncated: " + path);
  };
  slurp(p.f_w.data(), static_cast<std::size_t>(p.f_w.size()));
  slurp(p.f_b.data(), static_cast<std::size_t>(p.f_b.size()));
  slurp(p.r_w.data(), static_cast<std::size_t>(p.r_w.size()));
  slurp(p.r_b.data(), static_cast<std::size_t>(p.r_b.size()));
  slurp(p.lambda_logits.data(),
        static_cast<std::size_t>(p.lambda_logits.size()));
  slurp(&p.mu_logit, 1);
  slurp(p.edge_logits.data(), p.edge_logits.size());
  return p;
}

}  // namespace godnf
