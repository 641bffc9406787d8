#pragma once

#include <string>
#include <vector>

#include "godnf/diffusion.hpp"
#include "godnf/types.hpp"

namespace godnf {

enum class ConsensusKind { Single, Multi, Individualized, NotConverged };

std::string to_string(ConsensusKind kind);

/// Partition of the limit state into value clusters.
struct ConsensusReport {
  ConsensusKind kind = ConsensusKind::NotConverged;
  int k = 0;
  std::vector<int> cluster_assignments;  // per node, ids ordered by first member
  Matrix cluster_values;                 // k x d, one representative per cluster
  Real tolerance = 0.0;

  std::vector<std::vector<Index>> clusters() const;
};

/// Groups nodes whose final rows chain together within tol (Euclidean,
/// transitive closure) and names the regime: one cluster, n clusters, or
/// anything in between.
ConsensusReport classify_convergence(const Matrix& final_state, Real tol = 1e-5);

/// Connected components of the symmetrized nonzero pattern of m. Stored
/// zeros do not connect.
std::vector<std::vector<Index>> detect_blocks(const SpMat& m);

struct RegimeCheck {
  bool satisfied = false;
  ConsensusKind expected = ConsensusKind::NotConverged;
  int expected_k = 0;  // cluster count implied when expected == Multi
};

/// Checks the sufficient conditions for the three convergence regimes on a
/// stabilized schedule: plain lazy averaging on a connected graph (single),
/// a block-decoupled combined matrix with blocks that differ in anchors or
/// stubbornness (multi), and near-total stubbornness with pairwise distinct
/// anchors (individualized). Unsatisfied hypotheses are reported, not raised.
std::vector<RegimeCheck> verify_regime_conditions(
    const DiffusionParams& params, const WeightSchedule& schedule,
    const SpMat& lg, const Matrix& x0, Real lambda_threshold = 0.95);

/// {kind, k, clusters, values} as a JSON document.
std::string to_json_string(const ConsensusReport& report);

}  // namespace godnf
