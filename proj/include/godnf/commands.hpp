#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace godnf {

using Json = nlohmann::json;

/// Bad or missing configuration; the CLI maps it to exit code 2. Raised
/// before any output file is written.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Each command validates its config, computes everything in memory, then
// writes its artifacts into out_dir atomically. Return value is the process
// exit code: 0 success, 4 when a produced result fails its built-in check.

/// Runs the diffusion on a supplied or generated graph; writes
/// trajectory.csv, report.json and final/periodic state snapshots.
int cmd_diffuse(const Json& cfg, const std::string& out_dir);

/// Builds the four 50-node demonstration scenarios (single, five-block,
/// two-faction heterophily, fully individualized), runs each to its limit
/// and classifies it; writes one JSON per scenario plus summary.json.
/// Returns 4 naming the scenario if any classification misses its target.
int cmd_consensus_demo(const Json& cfg, const std::string& out_dir);

/// Monte Carlo cascade ground truth; writes ground_truth.csv and a
/// config.json sidecar echoing every resolved setting.
int cmd_simulate(const Json& cfg, const std::string& out_dir);

/// Ground truth + feature construction + regression training; writes
/// ground_truth.csv, history.csv, checkpoint.bin and report.json with model
/// and mean-baseline MAE on the test split.
int cmd_influence(const Json& cfg, const std::string& out_dir);

/// Node-classification training; writes history.csv, checkpoint.bin and
/// report.json with the best-validation and test accuracy.
int cmd_train_nc(const Json& cfg, const std::string& out_dir);

/// Times one update step across a ladder of graphs with doubling edge
/// counts; writes bench.csv with (m, ns_per_step) rows.
int cmd_bench(const Json& cfg, const std::string& out_dir);

}  // namespace godnf
