#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "godnf/diffusion.hpp"
#include "godnf/graph.hpp"
#include "godnf/types.hpp"

namespace godnf {

/// Sparsity pattern of the trainable influence matrix: per row, the sorted
/// neighbors plus the diagonal. The graph Laplacian lives on a subset of the
/// same slots.
struct WPattern {
  Index n = 0;
  std::vector<Index> offsets;  // n + 1
  std::vector<Index> cols;     // sorted within each row

  Index slots() const { return static_cast<Index>(cols.size()); }
  Index row_begin(Index i) const { return offsets[static_cast<std::size_t>(i)]; }
  Index row_end(Index i) const {
    return offsets[static_cast<std::size_t>(i) + 1];
  }
  /// Slot index of (i, j), or -1 when outside the pattern.
  Index slot(Index i, Index j) const;
};

WPattern build_w_pattern(const Graph& g);

/// Values laid out on a WPattern, materialized as a sparse matrix.
SpMat pattern_matrix(const WPattern& pattern, const std::vector<Real>& values);

/// Trainable carriers. The invariant-bearing quantities are derived:
/// lambda_i = sigmoid(lambda_logits_i), mu = softplus(mu_logit), and each
/// influence row is the softmax of its logit slots, so stubbornness stays in
/// (0, 1), mu stays positive and rows sum to 1 by construction.
struct ModelParams {
  Matrix f_w;                     // input transform, f x d
  RowVector f_b;                  // 1 x d
  Matrix r_w;                     // readout, d x c
  RowVector r_b;                  // 1 x c
  Vector lambda_logits;           // n
  Real mu_logit = 0.0;
  std::vector<Real> edge_logits;  // one per pattern slot
  Real alpha = 0.0;               // fixed, not trained
  WPattern pattern;

  Vector lambda() const;
  Real mu() const;
  std::vector<Real> weight_values() const;  // row-softmax of edge_logits
};

enum class TaskKind { Classification, Regression };

struct TrainConfig {
  TaskKind task = TaskKind::Classification;
  int num_classes = 2;  // classification only
  int latent_dim = 8;
  int epochs = 200;
  Real lr = 1e-2;
  int steps = 8;  // diffusion depth T
  Real alpha = 0.0;
  WeightMode mode = WeightMode::Static;
  std::uint64_t seed = 0;
  Real train_frac = 0.6;
  Real val_frac = 0.2;  // test gets the rest
  Real rho = 0.99;      // norm-bound hinge margin
  Real max_delta_norm = 1.0;
  bool sigmoid_readout = true;   // regression only
  bool freeze_schedule = false;  // stop gradients at the weight evolution

  void validate() const;
};

struct Targets {
  std::vector<int> labels;  // classification
  Vector values;            // regression
};

struct TrainLoss {
  Real task_loss = 0.0;
  Real reg_loss = 0.0;
  Real total = 0.0;
};

struct ForwardCache {
  Matrix x0;                      // post-tanh initial state
  std::vector<Matrix> xs;         // X(0..T)
  std::vector<Matrix> ps;         // (W(t) - mu L) X(t) per step
  std::vector<std::vector<Real>> w_sched;  // W(t) slot values, t = 0..T-1
  std::vector<Real> lap_vals;     // Laplacian on the pattern slots
  Vector lambda;
  Real mu = 0.0;
  std::vector<Real> bounds;       // norm bounds of the penalized M(t)
  Matrix preds;                   // readout logits, n x c
};

struct ParamGrads {
  Matrix f_w;
  RowVector f_b;
  Matrix r_w;
  RowVector r_b;
  Vector lambda_logits;
  Real mu_logit = 0.0;
  std::vector<Real> edge_logits;
  // d L_total / d W(t) on the pattern, t = 0..T-1; feeds the next epoch's
  // schedule deltas in Dynamic mode
  std::vector<std::vector<Real>> sched;
};

ModelParams init_params(const Graph& g, Index feature_dim,
                        const TrainConfig& cfg);

/// Unrolls T update steps from X(0) = tanh(H f_w + f_b). Dynamic mode feeds
/// deltas[t] (slot values, may be empty for zero) through the projected
/// weight evolution between steps. Everything backward needs is cached.
ForwardCache forward(const Graph& g, const Matrix& h, const ModelParams& params,
                     const TrainConfig& cfg,
                     const std::vector<std::vector<Real>>& deltas = {});

/// Task loss over the masked nodes plus the norm-bound hinge; the total is
/// the exact sum of the two parts.
TrainLoss compute_loss(const Matrix& preds, const Targets& targets,
                       const std::vector<Index>& mask, const TrainConfig& cfg,
                       const std::vector<Real>& bounds);

/// Reverse-mode gradients of the total loss through the unrolled steps, the
/// readout, the reparameterizations and the input transform. Hinge and
/// absolute-value kinks use subgradient 0.
ParamGrads backward(const Graph& g, const Matrix& h, const ModelParams& params,
                    const TrainConfig& cfg, const ForwardCache& cache,
                    const Targets& targets, const std::vector<Index>& mask,
                    const std::vector<std::vector<Real>>& deltas = {});

struct HistoryRow {
  int epoch = 0;
  Real train_loss = 0.0;
  Real val_loss = 0.0;
  Real val_metric = 0.0;
  Real reg_loss = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation snapshot
  std::vector<HistoryRow> history;
  std::vector<Index> train_nodes, val_nodes, test_nodes;
};

/// Shuffled split into train/val/test by the configured fractions.
void split_nodes(Index n, const TrainConfig& cfg, std::vector<Index>& train,
                 std::vector<Index>& val, std::vector<Index>& test);

/// Full-batch gradient descent. Dynamic mode evolves the influence weights
/// inside each forward unroll using the previous epoch's per-step gradients
/// as (negated) deltas. Throws on non-finite loss, naming the epoch.
TrainResult train(const Graph& g, const Matrix& h, const Targets& targets,
                  const TrainConfig& cfg);

/// Accuracy (classification) or mean absolute error (regression) over mask.
Real evaluate(const ModelParams& params, const Graph& g, const Matrix& h,
              const Targets& targets, const std::vector<Index>& mask,
              const TrainConfig& cfg);

/// MAE on eval_mask of the constant predictor fitted to the train_mask mean.
Real baseline_mae(const Vector& y, const std::vector<Index>& train_mask,
                  const std::vector<Index>& eval_mask);

void save_checkpoint(const ModelParams& params, const TrainConfig& cfg,
                     const std::string& path);
ModelParams load_checkpoint(const std::string& path, const Graph& g);

}  // namespace godnf
