#pragma once

#include <cstdint>
#include <vector>

#include "godnf/graph.hpp"
#include "godnf/types.hpp"

namespace godnf {

enum class CascadeModel { IC, LT, SIS };

/// Monte Carlo cascade settings. ic_p < 0 selects the weighted-cascade rule
/// p(u, v) = 1 / deg(v); a value in [0, 1] uses that constant probability on
/// every edge.
struct CascadeConfig {
  CascadeModel model = CascadeModel::IC;
  int runs = 10000;
  std::vector<Index> seed_set;
  std::uint64_t rng_seed = 0;
  Real ic_p = -1.0;
  Real beta = 0.1;
  Real gamma = 0.05;
  int horizon = 30;
  bool sis_final_step = false;  // report infected-at-horizon, not ever-infected
  int threads = 1;

  void validate(Index n) const;
};

/// Independent cascade: each run samples a live-edge subgraph (every directed
/// edge flips its own coin) and activates everything reachable from the seed
/// set. Returns the per-node activation frequency.
Vector simulate_ic(const Graph& g, const CascadeConfig& cfg);

/// Linear threshold: per run, node thresholds are Uniform[0,1] and each
/// in-edge of v weighs 1/deg(v); nodes activate once the active-neighbor
/// weight reaches their threshold, progressively to a fixpoint.
Vector simulate_lt(const Graph& g, const CascadeConfig& cfg);

/// Susceptible-infected-susceptible for `horizon` steps: infection attempts
/// with probability beta along infected-susceptible edges, then recovery with
/// probability gamma for every currently infected node. Reports the
/// ever-infected frequency (or the final-step state behind the flag).
Vector simulate_sis(const Graph& g, const CascadeConfig& cfg);

/// Dispatches on cfg.model.
Vector simulate(const Graph& g, const CascadeConfig& cfg);

/// Sorted uniform sample of max(1, round(fraction * n)) distinct nodes.
std::vector<Index> sample_seed_set(Index n, Real fraction, std::uint64_t seed);

}  // namespace godnf
