#include "godnf/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "godnf/consensus.hpp"
#include "godnf/diffusion.hpp"
#include "godnf/graph.hpp"
#include "godnf/influence.hpp"
#include "godnf/io.hpp"
#include "godnf/rng.hpp"
#include "godnf/sbm.hpp"
#include "godnf/train.hpp"

namespace godnf {

namespace {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

void require_cfg(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

template <typename T>
T field_or(const Json& j, const std::string& name, T def) {
  if (!j.contains(name)) return def;
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("config field '" + name + "' has the wrong type");
  }
}

Real real_field(const Json& j, const std::string& name, Real def) {
  return field_or<Real>(j, name, def);
}
int int_field(const Json& j, const std::string& name, int def) {
  return field_or<int>(j, name, def);
}
std::uint64_t u64_field(const Json& j, const std::string& name,
                        std::uint64_t def) {
  return field_or<std::uint64_t>(j, name, def);
}
bool bool_field(const Json& j, const std::string& name, bool def) {
  return field_or<bool>(j, name, def);
}

std::string str_field(const Json& j, const std::string& name) {
  require_cfg(j.contains(name), "config field '" + name + "' is required");
  try {
    return j.at(name).get<std::string>();
  } catch (const Json::exception&) {
    throw ConfigError("config field '" + name + "' must be a string");
  }
}

// input-file problems are config errors (exit 2), not generic failures
template <typename Fn>
auto load_input(Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require_cfg(!ec && fs::is_directory(out_dir),
              "cannot create output directory: " + out_dir);
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_json(const std::string& path, const OJson& j) {
  atomic_write_text(path, j.dump(2) + "\n");
}

struct LoadedGraph {
  Graph graph;
  std::vector<int> labels;
};

LoadedGraph load_graph(const Json& cfg, std::uint64_t default_seed) {
  if (cfg.contains("graph")) {
    LoadedGraph out;
    out.graph = load_input([&] { return read_edge_list(str_field(cfg, "graph")); });
    return out;
  }
  require_cfg(cfg.contains("sbm"),
              "config needs either 'graph' (edge list path) or 'sbm'");
  const Json& s = cfg.at("sbm");
  auto r = generate_sbm(int_field(s, "n", 50), int_field(s, "k", 5),
                        real_field(s, "p_in", 0.5),
                        real_field(s, "p_out", 0.02),
                        u64_field(s, "seed", default_seed));
  return {std::move(r.graph), std::move(r.labels)};
}

Vector lambda_from_cfg(const Json& cfg, Index n) {
  if (cfg.contains("lambda_csv"))
    return load_input([&] { return read_value_csv(str_field(cfg, "lambda_csv")); });
  return Vector::Constant(n, real_field(cfg, "lambda", 0.5));
}

Matrix features_from_cfg(const Json& cfg, Index n, std::uint64_t seed) {
  if (cfg.contains("features") && cfg.at("features").is_string()) {
    Matrix h = load_input([&] { return read_csv_matrix(str_field(cfg, "features")); });
    require_cfg(h.rows() == n, "feature file must have one row per node");
    return h;
  }
  int dim = 1;
  Real scale = 1.0;
  if (cfg.contains("features")) {
    const Json& f = cfg.at("features");
    require_cfg(f.is_object(), "config field 'features' must be a path or "
                               "an object with 'dim'/'scale'");
    dim = int_field(f, "dim", 1);
    scale = real_field(f, "scale", 1.0);
  }
  require_cfg(dim >= 1, "config field 'features.dim' must be >= 1");
  std::mt19937_64 eng(derive_seed(seed, 3));
  Matrix h(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j)
      h(i, j) = (2.0 * uniform01(eng) - 1.0) * scale;
  return h;
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::string out = "epoch,train_loss,val_loss,val_metric,reg_loss\n";
  for (const HistoryRow& r : history) {
    out += std::to_string(r.epoch);
    out += ',';
    out += format_real(r.train_loss);
    out += ',';
    out += format_real(r.val_loss);
    out += ',';
    out += format_real(r.val_metric);
    out += ',';
    out += format_real(r.reg_loss);
    out += '\n';
  }
  return out;
}

void save_checkpoint_atomic(const ModelParams& params, const TrainConfig& cfg,
                            const std::string& path) {
  save_checkpoint(params, cfg, path + ".tmp");
  fs::rename(path + ".tmp", path);
}

WeightMode mode_from_cfg(const Json& cfg) {
  const std::string mode = field_or<std::string>(cfg, "mode", "static");
  if (mode == "static") return WeightMode::Static;
  if (mode == "dynamic") return WeightMode::Dynamic;
  throw ConfigError("config field 'mode' must be 'static' or 'dynamic'");
}

}  // namespace

int cmd_diffuse(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  const LoadedGraph loaded = load_graph(cfg, seed);
  const Graph& g = loaded.graph;

  DiffusionParams params;
  params.alpha = real_field(cfg, "alpha", 0.0);
  params.mu = real_field(cfg, "mu", 0.0);
  params.steps = int_field(cfg, "steps", 100);
  params.lambda = lambda_from_cfg(cfg, g.n);
  const Matrix x0 = features_from_cfg(cfg, g.n, seed);

  WeightSchedule schedule;
  schedule.base = uniform_row_stochastic(g, real_field(cfg, "self_weight", 0.5));
  RunOptions opts;
  opts.tol = real_field(cfg, "tol", 1e-6);
  opts.solve_fixed_point = bool_field(cfg, "solve_fixed_point", false);
  try {
    params.validate(g.n);
    schedule.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const auto [traj, report] = run_diffusion(x0, g, params, schedule, opts);

  std::string tcsv = "step,relative_delta,op_norm_bound\n";
  for (std::size_t t = 0; t < traj.step_deltas.size(); ++t) {
    tcsv += std::to_string(t + 1);
    tcsv += ',';
    tcsv += format_real(traj.step_deltas[t]);
    tcsv += ',';
    tcsv += format_real(report.bound_per_step[t]);
    tcsv += '\n';
  }
  atomic_write_text(join(out_dir, "trajectory.csv"), tcsv);

  OJson rj;
  rj["converged"] = report.converged;
  rj["steps"] = params.steps;
  rj["final_delta"] = report.final_delta;
  rj["contraction_beta"] = report.contraction_beta;
  rj["max_bound"] = *std::max_element(report.bound_per_step.begin(),
                                      report.bound_per_step.end());
  if (std::isfinite(report.fixed_point_residual))
    rj["fixed_point_residual"] = report.fixed_point_residual;
  write_json(join(out_dir, "report.json"), rj);

  atomic_write_text(join(out_dir, "state_final.csv"),
                    csv_from_matrix(traj.snapshots.back()));
  const int every = int_field(cfg, "snapshot_every", 0);
  if (every > 0) {
    for (std::size_t t = 0; t < traj.snapshots.size();
         t += static_cast<std::size_t>(every)) {
      char name[32];
      std::snprintf(name, sizeof(name), "snapshot_%06zu.csv", t);
      atomic_write_text(join(out_dir, name),
                        csv_from_matrix(traj.snapshots[t]));
    }
  }
  return 0;
}

namespace {

CascadeConfig cascade_from_cfg(const Json& cfg, const Graph& g,
                               std::uint64_t seed) {
  CascadeConfig cc;
  const std::string model = field_or<std::string>(cfg, "model", "ic");
  if (model == "ic")
    cc.model = CascadeModel::IC;
  else if (model == "lt")
    cc.model = CascadeModel::LT;
  else if (model == "sis")
    cc.model = CascadeModel::SIS;
  else
    throw ConfigError("config field 'model' must be 'ic', 'lt' or 'sis'");
  cc.runs = int_field(cfg, "runs", 10000);
  cc.rng_seed = seed;
  cc.ic_p = real_field(cfg, "p", -1.0);
  cc.beta = real_field(cfg, "beta", 0.1);
  cc.gamma = real_field(cfg, "gamma", 0.05);
  cc.horizon = int_field(cfg, "horizon", 30);
  cc.sis_final_step = bool_field(cfg, "sis_final_step", false);
  cc.threads = int_field(cfg, "threads", 1);
  if (cfg.contains("seed_set")) {
    try {
      cc.seed_set = cfg.at("seed_set").get<std::vector<Index>>();
    } catch (const Json::exception&) {
      throw ConfigError("config field 'seed_set' must be a list of node ids");
    }
  } else {
    cc.seed_set = sample_seed_set(
        g.n, real_field(cfg, "seed_fraction", 0.1), derive_seed(seed, 4));
  }
  try {
    cc.validate(g.n);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cc;
}

OJson cascade_echo(const CascadeConfig& cc, const Graph& g,
                   std::uint64_t seed) {
  OJson j;
  switch (cc.model) {
    case CascadeModel::IC: j["model"] = "ic"; break;
    case CascadeModel::LT: j["model"] = "lt"; break;
    case CascadeModel::SIS: j["model"] = "sis"; break;
  }
  j["runs"] = cc.runs;
  j["seed"] = seed;
  j["threads"] = cc.threads;
  j["p"] = cc.ic_p;
  j["beta"] = cc.beta;
  j["gamma"] = cc.gamma;
  j["horizon"] = cc.horizon;
  j["sis_final_step"] = cc.sis_final_step;
  j["seed_set"] = cc.seed_set;
  j["graph"] = {{"n", g.n}, {"m", g.num_edges()}};
  return j;
}

std::string ground_truth_csv(const Vector& prob) {
  std::string out = "node,probability\n";
  for (Index v = 0; v < prob.size(); ++v) {
    out += std::to_string(v);
    out += ',';
    out += format_real(prob[v]);
    out += '\n';
  }
  return out;
}

}  // namespace

int cmd_simulate(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  const LoadedGraph loaded = load_graph(cfg, seed);
  const CascadeConfig cc = cascade_from_cfg(cfg, loaded.graph, seed);
  const Vector prob = simulate(loaded.graph, cc);
  atomic_write_text(join(out_dir, "ground_truth.csv"), ground_truth_csv(prob));
  write_json(join(out_dir, "config.json"),
             cascade_echo(cc, loaded.graph, seed));
  return 0;
}

namespace {

TrainConfig train_cfg_from_json(const Json& cfg, TaskKind task,
                                std::uint64_t seed) {
  TrainConfig tc;
  tc.task = task;
  tc.latent_dim = int_field(cfg, "latent_dim", 8);
  tc.epochs = int_field(cfg, "epochs",
                        task == TaskKind::Classification ? 300 : 1600);
  tc.lr = real_field(cfg, "lr",
                     task == TaskKind::Classification ? 0.05 : 0.1);
  tc.steps = int_field(cfg, "train_steps", int_field(cfg, "steps", 8));
  tc.alpha = real_field(cfg, "alpha", 0.0);
  tc.mode = mode_from_cfg(cfg);
  tc.seed = seed;
  tc.rho = real_field(cfg, "rho", 0.99);
  tc.max_delta_norm = real_field(cfg, "max_delta_norm", 1.0);
  tc.sigmoid_readout = bool_field(cfg, "sigmoid_readout", true);
  tc.freeze_schedule = bool_field(cfg, "freeze_schedule", false);
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return tc;
}

// seed indicator, normalized degree, and closeness to the seed set
Matrix influence_features(const Graph& g, const std::vector<Index>& seeds) {
  Matrix h = Matrix::Zero(g.n, 3);
  const Real max_deg = static_cast<Real>(std::max<Index>(
      1, *std::max_element(g.degrees.begin(), g.degrees.end())));
  std::vector<int> dist(static_cast<std::size_t>(g.n), -1);
  std::deque<Index> queue;
  for (Index s : seeds) {
    dist[static_cast<std::size_t>(s)] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const Index u = queue.front();
    queue.pop_front();
    for (Index v : g.adj(u))
      if (dist[static_cast<std::size_t>(v)] < 0) {
        dist[static_cast<std::size_t>(v)] = dist[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
  }
  for (Index v = 0; v < g.n; ++v) {
    const int dv = dist[static_cast<std::size_t>(v)];
    h(v, 0) = dv == 0 ? 1.0 : 0.0;
    h(v, 1) = static_cast<Real>(g.degrees[static_cast<std::size_t>(v)]) /
              max_deg;
    h(v, 2) = dv < 0 ? 0.0 : 1.0 / (1.0 + static_cast<Real>(dv));
  }
  return h;
}

template <typename Fn>
auto stage(const char* tag, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.step(), std::string(tag) + ": " + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(tag) + ": " + e.what());
  }
}

}  // namespace

int cmd_influence(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  const LoadedGraph loaded = load_graph(cfg, seed);
  const Graph& g = loaded.graph;

  const CascadeConfig cc = cascade_from_cfg(cfg, g, seed);
  const Vector prob =
      stage("simulate", [&] { return simulate(g, cc); });

  const Matrix h = influence_features(g, cc.seed_set);
  TrainConfig tc = train_cfg_from_json(cfg, TaskKind::Regression, seed);
  Targets targets;
  targets.values = prob;
  const TrainResult result =
      stage("train", [&] { return train(g, h, targets, tc); });

  const Real model_mae =
      evaluate(result.params, g, h, targets, result.test_nodes, tc);
  const Real base_mae = baseline_mae(prob, result.train_nodes,
                                     result.test_nodes);
  const Real train_model_mae =
      evaluate(result.params, g, h, targets, result.train_nodes, tc);
  const Real train_base_mae = baseline_mae(prob, result.train_nodes,
                                           result.train_nodes);

  atomic_write_text(join(out_dir, "ground_truth.csv"), ground_truth_csv(prob));
  atomic_write_text(join(out_dir, "history.csv"), history_csv(result.history));
  save_checkpoint_atomic(result.params, tc, join(out_dir, "checkpoint.bin"));

  OJson rj;
  rj["task"] = "influence_regression";
  rj["model_mae"] = model_mae;
  rj["baseline_mae"] = base_mae;
  rj["relative_improvement"] =
      base_mae > 0.0 ? (base_mae - model_mae) / base_mae : 0.0;
  rj["train_model_mae"] = train_model_mae;
  rj["train_baseline_mae"] = train_base_mae;
  rj["splits"] = {{"train", result.train_nodes.size()},
                  {"val", result.val_nodes.size()},
                  {"test", result.test_nodes.size()}};
  rj["cascade"] = cascade_echo(cc, g, seed);
  write_json(join(out_dir, "report.json"), rj);
  return 0;
}

int cmd_train_nc(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  const LoadedGraph loaded = load_graph(cfg, seed);
  const Graph& g = loaded.graph;

  std::vector<int> labels = loaded.labels;
  if (cfg.contains("labels"))
    labels = load_input([&] { return read_label_csv(str_field(cfg, "labels")); });
  require_cfg(static_cast<Index>(labels.size()) == g.n,
              "labels must cover every node; pass 'labels' or use 'sbm'");
  const int max_label = *std::max_element(labels.begin(), labels.end());

  TrainConfig tc = train_cfg_from_json(cfg, TaskKind::Classification, seed);
  tc.num_classes = int_field(cfg, "num_classes", max_label + 1);
  require_cfg(tc.num_classes > max_label, "num_classes must exceed the "
                                          "largest label");

  Matrix h;
  if (cfg.contains("features") && cfg.at("features").is_string()) {
    h = load_input([&] { return read_csv_matrix(str_field(cfg, "features")); });
    require_cfg(h.rows() == g.n, "feature file must have one row per node");
  } else {
    // community indicator plus bounded noise; linearly separable by design
    const Real noise = real_field(cfg, "feature_noise", 0.3);
    std::mt19937_64 eng(derive_seed(seed, 5));
    h = Matrix::Zero(g.n, tc.num_classes);
    for (Index i = 0; i < g.n; ++i)
      for (int c = 0; c < tc.num_classes; ++c)
        h(i, c) = (labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0) +
                  (2.0 * uniform01(eng) - 1.0) * noise;
  }

  Targets targets;
  targets.labels = labels;
  const TrainResult result =
      stage("train", [&] { return train(g, h, targets, tc); });

  const Real val_acc =
      evaluate(result.params, g, h, targets, result.val_nodes, tc);
  const Real test_acc =
      evaluate(result.params, g, h, targets, result.test_nodes, tc);

  atomic_write_text(join(out_dir, "history.csv"), history_csv(result.history));
  save_checkpoint_atomic(result.params, tc, join(out_dir, "checkpoint.bin"));

  OJson rj;
  rj["task"] = "node_classification";
  rj["num_classes"] = tc.num_classes;
  rj["epochs"] = tc.epochs;
  rj["val_accuracy"] = val_acc;
  rj["test_accuracy"] = test_acc;
  rj["splits"] = {{"train", result.train_nodes.size()},
                  {"val", result.val_nodes.size()},
                  {"test", result.test_nodes.size()}};
  write_json(join(out_dir, "report.json"), rj);
  return 0;
}

namespace {

struct Scenario {
  std::string name;
  ConsensusKind expected = ConsensusKind::Single;
  int expected_k = 0;  // 0 = any
  ConsensusReport report;
  bool converged = false;
  Real final_delta = 0.0;
  std::vector<RegimeCheck> checks;

  bool ok() const {
    return report.kind == expected &&
           (expected_k == 0 || report.k == expected_k);
  }
};

Scenario run_scenario(const std::string& name, const Graph& g,
                      const SpMat& weights, const DiffusionParams& params,
                      const Matrix& x0, Real tol, ConsensusKind expected,
                      int expected_k) {
  Scenario s;
  s.name = name;
  s.expected = expected;
  s.expected_k = expected_k;
  WeightSchedule schedule;
  schedule.base = weights;
  const auto [traj, report] = run_diffusion(x0, g, params, schedule);
  s.report = classify_convergence(traj.snapshots.back(), tol);
  if (!report.converged) s.report.kind = ConsensusKind::NotConverged;
  s.converged = report.converged;
  s.final_delta = report.final_delta;
  s.checks = verify_regime_conditions(params, schedule,
                                      normalized_laplacian(g), x0);
  return s;
}

Scenario scenario_single(std::uint64_t seed, Real tol) {
  auto sbm = generate_sbm(50, 5, 0.5, 0.1, derive_seed(seed, 10));
  const Graph g = ensure_connected(sbm.graph);
  DiffusionParams params;
  params.alpha = 0.0;
  params.mu = 0.0;
  params.lambda = Vector::Zero(g.n);
  params.steps = 5000;
  std::mt19937_64 eng(derive_seed(seed, 11));
  Matrix x0(g.n, 1);
  for (Index i = 0; i < g.n; ++i) x0(i, 0) = 2.0 * uniform01(eng) - 1.0;
  return run_scenario("single", g, uniform_row_stochastic(g, 0.5), params, x0,
                      tol, ConsensusKind::Single, 1);
}

Scenario scenario_multi_homophily(std::uint64_t seed, Real tol) {
  auto sbm = generate_sbm(50, 5, 0.5, 0.0, derive_seed(seed, 12));
  const Graph g = ensure_blocks_connected(sbm.graph, sbm.labels);
  DiffusionParams params;
  params.alpha = 0.0;
  params.mu = 0.0;
  params.lambda = Vector::Zero(g.n);
  params.steps = 3000;
  std::mt19937_64 eng(derive_seed(seed, 13));
  Matrix x0(g.n, 1);
  for (Index i = 0; i < g.n; ++i)
    x0(i, 0) = static_cast<Real>(sbm.labels[static_cast<std::size_t>(i)]) +
               (2.0 * uniform01(eng) - 1.0) * 0.05;
  return run_scenario("multi_homophily", g, uniform_row_stochastic(g, 0.5),
                      params, x0, tol, ConsensusKind::Multi, 5);
}

Scenario scenario_multi_heterophily(std::uint64_t seed, Real tol) {
  auto sbm = generate_sbm(50, 5, 0.5, 0.0, derive_seed(seed, 14));
  Graph g = ensure_blocks_connected(sbm.graph, sbm.labels);
  const auto& labels = sbm.labels;

  // alternate a 2-coloring inside each community
  std::vector<Index> start(6, 0);
  std::vector<int> color(static_cast<std::size_t>(g.n), 0);
  {
    std::vector<Index> local(6, 0);
    for (Index i = 0; i < g.n; ++i) {
      const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      color[static_cast<std::size_t>(i)] = static_cast<int>(local[c] % 2);
      ++local[c];
    }
  }

  // every node needs an opposite-color neighbor inside its community
  auto edges = g.edges;
  bool patched = false;
  for (Index i = 0; i < g.n; ++i) {
    bool has_cross = false;
    for (Index j : g.adj(i))
      if (labels[static_cast<std::size_t>(j)] ==
              labels[static_cast<std::size_t>(i)] &&
          color[static_cast<std::size_t>(j)] !=
              color[static_cast<std::size_t>(i)]) {
        has_cross = true;
        break;
      }
    if (has_cross) continue;
    for (Index j = 0; j < g.n; ++j)
      if (j != i &&
          labels[static_cast<std::size_t>(j)] ==
              labels[static_cast<std::size_t>(i)] &&
          color[static_cast<std::size_t>(j)] !=
              color[static_cast<std::size_t>(i)]) {
        edges.emplace_back(std::min(i, j), std::max(i, j));
        patched = true;
        break;
      }
  }
  if (patched) g = build_graph(edges, g.n);

  // influence only across the color split: self weight plus an even share
  // over opposite-color neighbors
  const Real self_w = 0.2;
  std::vector<Eigen::Triplet<Real, Index>> trips;
  for (Index i = 0; i < g.n; ++i) {
    std::vector<Index> cross;
    for (Index j : g.adj(i))
      if (color[static_cast<std::size_t>(j)] !=
          color[static_cast<std::size_t>(i)])
        cross.push_back(j);
    trips.emplace_back(i, i, self_w);
    for (Index j : cross)
      trips.emplace_back(i, j, (1.0 - self_w) / static_cast<Real>(cross.size()));
  }
  SpMat w(g.n, g.n);
  w.setFromTriplets(trips.begin(), trips.end());
  w.makeCompressed();

  DiffusionParams params;
  params.alpha = 0.0;
  params.mu = 0.0;
  params.lambda = Vector::Constant(g.n, 0.8);
  params.steps = 500;
  Matrix x0(g.n, 1);
  for (Index i = 0; i < g.n; ++i)
    x0(i, 0) = color[static_cast<std::size_t>(i)] == 0 ? 1.0 : -1.0;
  return run_scenario("multi_heterophily", g, w, params, x0, tol,
                      ConsensusKind::Multi, 2);
}

Scenario scenario_individualized(std::uint64_t seed, Real tol) {
  auto sbm = generate_sbm(50, 5, 0.5, 0.1, derive_seed(seed, 16));
  const Graph g = ensure_connected(sbm.graph);
  DiffusionParams params;
  params.alpha = 0.0;
  params.mu = 0.0;
  params.lambda = Vector::Constant(g.n, 0.99);
  params.steps = 200;
  Matrix x0(g.n, 2);
  const Real two_pi = 2.0 * std::acos(-1.0);
  for (Index i = 0; i < g.n; ++i) {
    const Real angle = two_pi * static_cast<Real>(i) / static_cast<Real>(g.n);
    x0(i, 0) = 5.0 * std::cos(angle);
    x0(i, 1) = 5.0 * std::sin(angle);
  }
  return run_scenario("individualized", g, uniform_row_stochastic(g, 0.5),
                      params, x0, tol, ConsensusKind::Individualized, 50);
}

OJson scenario_json(const Scenario& s) {
  OJson j;
  j["scenario"] = s.name;
  j["expected_kind"] = to_string(s.expected);
  j["converged"] = s.converged;
  j["final_delta"] = s.final_delta;
  j["report"] = Json::parse(to_json_string(s.report));
  auto checks = OJson::array();
  for (const RegimeCheck& c : s.checks)
    checks.push_back({{"regime", to_string(c.expected)},
                      {"satisfied", c.satisfied},
                      {"expected_k", c.expected_k}});
  j["regime_checks"] = std::move(checks);
  return j;
}

}  // namespace

int cmd_consensus_demo(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  const Real tol = real_field(cfg, "tol", 1e-5);

  std::vector<Scenario> scenarios;
  scenarios.push_back(scenario_single(seed, tol));
  scenarios.push_back(scenario_multi_homophily(seed, tol));
  scenarios.push_back(scenario_multi_heterophily(seed, tol));
  scenarios.push_back(scenario_individualized(seed, tol));

  OJson summary;
  summary["seed"] = seed;
  summary["tol"] = tol;
  auto rows = OJson::array();
  int code = 0;
  for (const Scenario& s : scenarios) {
    write_json(join(out_dir, "consensus_" + s.name + ".json"),
               scenario_json(s));
    rows.push_back({{"scenario", s.name},
                    {"expected", to_string(s.expected)},
                    {"kind", to_string(s.report.kind)},
                    {"k", s.report.k},
                    {"ok", s.ok()}});
    if (!s.ok()) {
      std::cerr << "consensus demo: scenario '" << s.name << "' produced "
                << to_string(s.report.kind) << " (k=" << s.report.k
                << "), expected " << to_string(s.expected);
      if (s.expected_k != 0) std::cerr << " (k=" << s.expected_k << ")";
      std::cerr << "\n";
      code = 4;
    }
  }
  summary["scenarios"] = std::move(rows);
  write_json(join(out_dir, "summary.json"), summary);
  return code;
}

int cmd_bench(const Json& cfg, const std::string& out_dir) {
  ensure_out_dir(out_dir);
  const Index n = int_field(cfg, "n", 10000);
  const Index m0 = int_field(cfg, "m0", 100000);
  const int doublings = int_field(cfg, "doublings", 4);
  const int d = int_field(cfg, "d", 4);
  const int reps = int_field(cfg, "reps", 7);
  const int steps = int_field(cfg, "steps", 10);
  const std::uint64_t seed = u64_field(cfg, "seed", 0);
  require_cfg(n >= 2 && m0 >= 1 && doublings >= 0 && d >= 1 && reps >= 1 &&
                  steps >= 1,
              "bench config fields must be positive");

  DiffusionParams params;
  params.alpha = real_field(cfg, "alpha", 0.5);
  params.mu = real_field(cfg, "mu", 0.01);
  params.lambda = Vector::Constant(n, 0.5);
  params.steps = steps;
  RunOptions opts;
  opts.tol = 0.0;  // always run the full unroll

  std::mt19937_64 feng(derive_seed(seed, 20));
  Matrix x0(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) x0(i, j) = 2.0 * uniform01(feng) - 1.0;

  std::string csv = "m,ns_per_step\n";
  volatile Real sink = 0.0;
  for (int level = 0; level <= doublings; ++level) {
    const long long m = static_cast<long long>(m0) << level;
    require_cfg(m <= static_cast<long long>(n) * (n - 1) / 2,
                "edge count exceeds the complete graph");
    std::mt19937_64 eng(derive_seed(seed, 21 + static_cast<std::uint64_t>(level)));
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(static_cast<std::size_t>(m) * 2);
    std::vector<std::pair<Index, Index>> edges;
    edges.reserve(static_cast<std::size_t>(m));
    while (static_cast<long long>(edges.size()) < m) {
      const auto u = static_cast<Index>(eng() % static_cast<std::uint64_t>(n));
      const auto v = static_cast<Index>(eng() % static_cast<std::uint64_t>(n));
      if (u == v) continue;
      const Index a = std::min(u, v), b = std::max(u, v);
      const std::uint64_t key =
          static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(n) +
          static_cast<std::uint64_t>(b);
      if (seen.insert(key).second) edges.emplace_back(a, b);
    }
    const Graph g = build_graph(edges, n);
    WeightSchedule schedule;
    schedule.base = uniform_row_stochastic(g, 0.5);

    sink = sink + run_diffusion(x0, g, params, schedule, opts)
                      .first.snapshots.back()(0, 0);  // warmup
    std::vector<Real> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto [traj, report] = run_diffusion(x0, g, params, schedule, opts);
      const auto t1 = std::chrono::steady_clock::now();
      sink = sink + traj.snapshots.back()(0, 0);
      times.push_back(static_cast<Real>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
              .count()) /
                      static_cast<Real>(steps));
    }
    std::nth_element(times.begin(), times.begin() + times.size() / 2,
                     times.end());
    csv += std::to_string(m);
    csv += ',';
    csv += format_real(times[times.size() / 2]);
    csv += '\n';
  }
  atomic_write_text(join(out_dir, "bench.csv"), csv);
  return 0;
}

}  // namespace godnf
