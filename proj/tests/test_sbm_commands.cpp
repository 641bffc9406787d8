#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "godnf/commands.hpp"
#include "godnf/graph.hpp"
#include "godnf/io.hpp"
#include "godnf/sbm.hpp"
#include "godnf/train.hpp"
#include "oracles.hpp"

using namespace godnf;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("godnf_cmd_" + tag);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_file(const fs::path& p) { return Json::parse(slurp(p)); }

fs::path spit(const std::string& name, const std::string& content) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
  return p;
}

bool label_connected(const Graph& g, const std::vector<int>& labels,
                     int label) {
  std::vector<Index> nodes;
  for (Index v = 0; v < g.n; ++v)
    if (labels[static_cast<std::size_t>(v)] == label) nodes.push_back(v);
  if (nodes.empty()) return true;
  std::set<Index> seen{nodes[0]};
  std::vector<Index> stack{nodes[0]};
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index v : g.adj(u))
      if (labels[static_cast<std::size_t>(v)] == label && !seen.count(v)) {
        seen.insert(v);
        stack.push_back(v);
      }
  }
  return seen.size() == nodes.size();
}

}  // namespace

TEST_CASE("certain intra-community edges form cliques") {
  SbmResult r = generate_sbm(4, 2, 1.0, 0.0, 7);
  CHECK(r.labels == std::vector<int>{0, 0, 1, 1});
  CHECK(r.graph.edges ==
        std::vector<std::pair<Index, Index>>{{0, 1}, {2, 3}});
}

TEST_CASE("zero probabilities give an empty graph with balanced labels") {
  SbmResult r = generate_sbm(10, 3, 0.0, 0.0, 1);
  CHECK(r.graph.num_edges() == 0);
  CHECK(std::count(r.labels.begin(), r.labels.end(), 0) == 4);
  CHECK(std::count(r.labels.begin(), r.labels.end(), 1) == 3);
  CHECK(std::count(r.labels.begin(), r.labels.end(), 2) == 3);
  CHECK(std::is_sorted(r.labels.begin(), r.labels.end()));
}

TEST_CASE("intra-community edge counts follow the binomial rate") {
  long long total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SbmResult r = generate_sbm(20, 2, 0.5, 0.0, seed);
    for (const auto& [u, v] : r.graph.edges)
      CHECK(r.labels[static_cast<std::size_t>(u)] ==
            r.labels[static_cast<std::size_t>(v)]);
    total += r.graph.num_edges();
  }
  // 9000 pair draws at p = 0.5: mean 4500, sigma ~ 47.4
  CHECK(std::abs(static_cast<double>(total) - 4500.0) < 150.0);
}

TEST_CASE("generation is deterministic in the seed") {
  SbmResult a = generate_sbm(20, 2, 0.5, 0.1, 9);
  SbmResult b = generate_sbm(20, 2, 0.5, 0.1, 9);
  CHECK(a.graph.edges == b.graph.edges);
  SbmResult c = generate_sbm(20, 2, 0.5, 0.1, 10);
  CHECK(a.graph.edges != c.graph.edges);
}

TEST_CASE("generator rejects impossible settings") {
  CHECK_THROWS_AS(generate_sbm(0, 1, 0.5, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_sbm(10, 0, 0.5, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_sbm(10, 11, 0.5, 0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_sbm(10, 2, 0.1, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_sbm(10, 2, 1.5, 0.1, 0), std::invalid_argument);
}

TEST_CASE("bridges make a fragmented graph connected") {
  Graph g = build_graph({{0, 1}, {3, 4}}, 6);
  REQUIRE_FALSE(g.connected());
  Graph fixed = ensure_connected(g);
  CHECK(fixed.connected());
  CHECK(fixed.num_edges() == 5);
  auto has = [&](Index u, Index v) {
    return std::find(fixed.edges.begin(), fixed.edges.end(),
                     std::make_pair(u, v)) != fixed.edges.end();
  };
  CHECK(has(0, 2));
  CHECK(has(2, 3));
  CHECK(has(3, 5));

  Graph path = oracle::path_graph(5);
  CHECK(ensure_connected(path).edges == path.edges);
}

TEST_CASE("block repair connects labels without crossing them") {
  Graph g = build_graph({{0, 1}, {3, 4}}, 6);
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  Graph fixed = ensure_blocks_connected(g, labels);
  for (const auto& [u, v] : fixed.edges)
    CHECK(labels[static_cast<std::size_t>(u)] ==
          labels[static_cast<std::size_t>(v)]);
  CHECK(label_connected(fixed, labels, 0));
  CHECK(label_connected(fixed, labels, 1));
  CHECK_FALSE(fixed.connected());  // the label split itself stays

  CHECK_THROWS_WITH_AS(ensure_blocks_connected(g, {0, 1}),
                       doctest::Contains("every node"), std::invalid_argument);
}

TEST_CASE("csv matrices round trip exactly") {
  Matrix m(3, 3);
  m << 1.0 / 3.0, -2.5e-17, 1e300, 0.0, -1.0, 3.141592653589793, 7.0,
      -0.0625, 5e-324;
  const fs::path p = spit("godnf_io_roundtrip.csv", csv_from_matrix(m));
  Matrix back = read_csv_matrix(p.string());
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 3);
  CHECK((back.array() == m.array()).all());
  fs::remove(p);
}

TEST_CASE("csv readers flag malformed input with line numbers") {
  const fs::path ragged = spit("godnf_io_ragged.csv", "1,2\n3\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(ragged.string()),
                       doctest::Contains("different column count"),
                       std::invalid_argument);
  const fs::path junk = spit("godnf_io_junk.csv", "1,x\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(junk.string()),
                       doctest::Contains(":1: not a number"),
                       std::invalid_argument);
  const fs::path empty = spit("godnf_io_empty.csv", "# only a comment\n\n");
  CHECK_THROWS_WITH_AS(read_csv_matrix(empty.string()),
                       doctest::Contains("no data rows"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(read_csv_matrix("/nonexistent/file.csv"),
                       doctest::Contains("cannot open"),
                       std::invalid_argument);

  const fs::path wide = spit("godnf_io_wide.csv", "1,2\n");
  CHECK_THROWS_WITH_AS(read_label_csv(wide.string()),
                       doctest::Contains("single label"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(read_value_csv(wide.string()),
                       doctest::Contains("single value"),
                       std::invalid_argument);

  const fs::path labels =
      spit("godnf_io_labels.csv", "# header comment\n0\n\n2\n1\n");
  CHECK(read_label_csv(labels.string()) == std::vector<int>{0, 2, 1});
  for (const auto& p : {ragged, junk, empty, wide, labels}) fs::remove(p);
}

TEST_CASE("atomic writes replace previous content without leftovers") {
  const fs::path p = fs::temp_directory_path() / "godnf_io_atomic.txt";
  atomic_write_text(p.string(), "first\n");
  atomic_write_text(p.string(), "second\n");
  CHECK(slurp(p) == "second\n");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
  fs::remove(p);
}

TEST_CASE("diffusion command writes its artifacts reproducibly") {
  Json cfg = {{"sbm", {{"n", 12}, {"k", 2}, {"p_in", 0.6}, {"p_out", 0.2},
                       {"seed", 3}}},
              {"alpha", 0.2},
              {"mu", 0.05},
              {"steps", 40},
              {"lambda", 0.3},
              {"solve_fixed_point", true},
              {"snapshot_every", 10}};
  const fs::path a = fresh_dir("diffuse_a");
  REQUIRE(cmd_diffuse(cfg, a.string()) == 0);
  for (const char* name :
       {"trajectory.csv", "report.json", "state_final.csv",
        "snapshot_000000.csv", "snapshot_000040.csv"})
    CHECK(fs::exists(a / name));

  Json report = parse_file(a / "report.json");
  CHECK(report.at("steps") == 40);
  CHECK(report.at("converged").is_boolean());
  CHECK(report.at("max_bound").get<double>() < 1.0);
  CHECK(report.at("fixed_point_residual").get<double>() < 1e-8);

  // 40 steps: header plus one row each
  const std::string traj = slurp(a / "trajectory.csv");
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 41);

  const fs::path b = fresh_dir("diffuse_b");
  REQUIRE(cmd_diffuse(cfg, b.string()) == 0);
  CHECK(slurp(b / "trajectory.csv") == traj);
  CHECK(slurp(b / "state_final.csv") == slurp(a / "state_final.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("diffusion command rejects bad settings before writing") {
  const fs::path dir = fresh_dir("diffuse_bad");
  Json cfg = {{"sbm", {{"n", 8}, {"k", 2}}}, {"alpha", 1.5}};
  CHECK_THROWS_AS(cmd_diffuse(cfg, dir.string()), ConfigError);
  CHECK_FALSE(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / "trajectory.csv"));

  CHECK_THROWS_WITH_AS(
      cmd_diffuse({{"graph", "/nonexistent/edges.txt"}}, dir.string()),
      doctest::Contains("cannot open"), ConfigError);
  CHECK_THROWS_WITH_AS(cmd_diffuse(Json::object(), dir.string()),
                       doctest::Contains("needs either"), ConfigError);
  CHECK_THROWS_WITH_AS(
      cmd_diffuse({{"sbm", {{"n", 8}, {"k", 2}}}, {"alpha", "high"}},
                  dir.string()),
      doctest::Contains("wrong type"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("simulation command echoes the resolved configuration") {
  Json cfg = {{"sbm", {{"n", 15}, {"k", 2}, {"p_in", 0.6}, {"p_out", 0.2},
                       {"seed", 4}}},
              {"model", "ic"},
              {"p", 0.4},
              {"runs", 500},
              {"seed_set", {0, 1}}};
  const fs::path dir = fresh_dir("simulate");
  REQUIRE(cmd_simulate(cfg, dir.string()) == 0);

  Json echo = parse_file(dir / "config.json");
  CHECK(echo.at("model") == "ic");
  CHECK(echo.at("runs") == 500);
  CHECK(echo.at("p") == 0.4);
  CHECK(echo.at("seed_set") == Json({0, 1}));
  CHECK(echo.at("graph").at("n") == 15);

  const std::string csv = slurp(dir / "ground_truth.csv");
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "node,probability");
  int rows = 0;
  while (std::getline(ss, line)) {
    const auto comma = line.find(',');
    const double p = std::stod(line.substr(comma + 1));
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    if (rows < 2) CHECK(p == 1.0);  // the seeds themselves
    ++rows;
  }
  CHECK(rows == 15);
  fs::remove_all(dir);
}

TEST_CASE("simulation command validates model and seeds") {
  const fs::path dir = fresh_dir("simulate_bad");
  Json base = {{"sbm", {{"n", 15}, {"k", 2}}}};
  Json bad_model = base;
  bad_model["model"] = "foo";
  CHECK_THROWS_WITH_AS(cmd_simulate(bad_model, dir.string()),
                       doctest::Contains("'ic', 'lt' or 'sis'"), ConfigError);
  Json bad_seed = base;
  bad_seed["seed_set"] = {999};
  CHECK_THROWS_WITH_AS(cmd_simulate(bad_seed, dir.string()),
                       doctest::Contains("out of range"), ConfigError);
  CHECK_FALSE(fs::exists(dir / "ground_truth.csv"));
  fs::remove_all(dir);
}

TEST_CASE("classification command reaches high validation accuracy") {
  Json cfg = {{"sbm", {{"n", 30}, {"k", 2}, {"p_in", 0.6}, {"p_out", 0.05},
                       {"seed", 1}}},
              {"epochs", 120},
              {"steps", 4},
              {"latent_dim", 4},
              {"lr", 0.1}};
  const fs::path dir = fresh_dir("train_nc");
  REQUIRE(cmd_train_nc(cfg, dir.string()) == 0);

  Json report = parse_file(dir / "report.json");
  CHECK(report.at("task") == "node_classification");
  CHECK(report.at("num_classes") == 2);
  CHECK(report.at("val_accuracy").get<double>() >= 0.8);
  CHECK(report.at("splits").at("train").get<int>() == 18);

  const std::string hist = slurp(dir / "history.csv");
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 121);

  // checkpoint must load against the same generated graph
  Graph g = generate_sbm(30, 2, 0.6, 0.05, 1).graph;
  ModelParams p = load_checkpoint((dir / "checkpoint.bin").string(), g);
  CHECK(p.lambda_logits.size() == 30);
  fs::remove_all(dir);
}

TEST_CASE("classification command validates labels and mode") {
  const fs::path dir = fresh_dir("train_nc_bad");
  Json small = {{"sbm", {{"n", 20}, {"k", 5}}}, {"num_classes", 3}};
  CHECK_THROWS_WITH_AS(cmd_train_nc(small, dir.string()),
                       doctest::Contains("num_classes"), ConfigError);

  Json bad_mode = {{"sbm", {{"n", 20}, {"k", 2}}}, {"mode", "banana"}};
  CHECK_THROWS_WITH_AS(cmd_train_nc(bad_mode, dir.string()),
                       doctest::Contains("'static' or 'dynamic'"),
                       ConfigError);

  const fs::path edges = spit("godnf_nc_edges.txt", "0 1\n1 2\n");
  const fs::path labels = spit("godnf_nc_labels.csv", "0\n1\n");
  Json short_labels = {{"graph", edges.string()},
                       {"labels", labels.string()}};
  CHECK_THROWS_WITH_AS(cmd_train_nc(short_labels, dir.string()),
                       doctest::Contains("labels must cover"), ConfigError);
  fs::remove(edges);
  fs::remove(labels);
  fs::remove_all(dir);
}

TEST_CASE("influence command beats the mean baseline in training") {
  Json cfg = {{"sbm", {{"n", 25}, {"k", 2}, {"p_in", 0.5}, {"p_out", 0.1},
                       {"seed", 2}}},
              {"model", "ic"},
              {"p", 0.3},
              {"runs", 2000},
              {"seed_fraction", 0.15},
              {"steps", 4}};
  const fs::path dir = fresh_dir("influence");
  REQUIRE(cmd_influence(cfg, dir.string()) == 0);

  Json report = parse_file(dir / "report.json");
  CHECK(report.at("task") == "influence_regression");
  CHECK(report.at("train_model_mae").get<double>() <=
        report.at("train_baseline_mae").get<double>() + 1e-9);
  CHECK(report.at("cascade").at("model") == "ic");
  CHECK(fs::exists(dir / "ground_truth.csv"));
  CHECK(fs::exists(dir / "history.csv"));
  CHECK(fs::exists(dir / "checkpoint.bin"));
  fs::remove_all(dir);
}

TEST_CASE("influence command learns a saturated cascade") {
  std::string edges;
  for (int i = 0; i + 1 < 12; ++i)
    edges += std::to_string(i) + " " + std::to_string(i + 1) + "\n";
  const fs::path gpath = spit("godnf_inf_path.txt", edges);
  Json cfg = {{"graph", gpath.string()},
              {"model", "ic"},
              {"p", 0.5},
              {"runs", 200},
              {"seed_set", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}},
              {"epochs", 2500},
              {"steps", 4}};
  const fs::path dir = fresh_dir("influence_sat");
  REQUIRE(cmd_influence(cfg, dir.string()) == 0);
  Json report = parse_file(dir / "report.json");
  // every node is a seed, so the target is constant one
  CHECK(report.at("baseline_mae").get<double>() == 0.0);
  CHECK(report.at("relative_improvement").get<double>() == 0.0);
  CHECK(report.at("model_mae").get<double>() < 0.01);
  fs::remove(gpath);
  fs::remove_all(dir);
}

TEST_CASE("influence command learns a dead cascade from the seed flag") {
  std::string edges;
  for (int i = 0; i + 1 < 20; ++i)
    edges += std::to_string(i) + " " + std::to_string(i + 1) + "\n";
  const fs::path gpath = spit("godnf_inf_dead.txt", edges);
  // seeds spread out so every split holds positives to learn from
  Json cfg = {{"graph", gpath.string()},
              {"model", "ic"},
              {"p", 0.0},
              {"runs", 100},
              {"seed_set", {0, 2, 5, 8, 11, 14, 17, 19}},
              {"epochs", 2000},
              {"lr", 0.1},
              {"steps", 4},
              {"seed", 1}};
  const fs::path dir = fresh_dir("influence_dead");
  REQUIRE(cmd_influence(cfg, dir.string()) == 0);
  Json report = parse_file(dir / "report.json");
  // the target is the seed indicator; the mean predictor sits near 0.5
  CHECK(report.at("model_mae").get<double>() < 0.1);
  CHECK(report.at("baseline_mae").get<double>() > 0.4);
  fs::remove(gpath);
  fs::remove_all(dir);
}

TEST_CASE("consensus demo passes its own scenario checks") {
  const fs::path dir = fresh_dir("demo");
  REQUIRE(cmd_consensus_demo({{"seed", 0}}, dir.string()) == 0);
  for (const char* name :
       {"consensus_single.json", "consensus_multi_homophily.json",
        "consensus_multi_heterophily.json", "consensus_individualized.json",
        "summary.json"})
    CHECK(fs::exists(dir / name));
  Json summary = parse_file(dir / "summary.json");
  REQUIRE(summary.at("scenarios").size() == 4);
  for (const auto& row : summary.at("scenarios"))
    CHECK(row.at("ok") == true);
  fs::remove_all(dir);
}

TEST_CASE("bench command writes one row per ladder level") {
  Json cfg = {{"n", 60}, {"m0", 40}, {"doublings", 1},
              {"d", 2},  {"reps", 2}, {"steps", 3}};
  const fs::path dir = fresh_dir("bench");
  REQUIRE(cmd_bench(cfg, dir.string()) == 0);
  std::stringstream ss(slurp(dir / "bench.csv"));
  std::string line;
  std::getline(ss, line);
  CHECK(line == "m,ns_per_step");
  std::vector<long long> ms;
  while (std::getline(ss, line)) {
    const auto comma = line.find(',');
    ms.push_back(std::stoll(line.substr(0, comma)));
    CHECK(std::stod(line.substr(comma + 1)) > 0.0);
  }
  CHECK(ms == std::vector<long long>{40, 80});

  Json impossible = {{"n", 10}, {"m0", 100}, {"doublings", 0}};
  CHECK_THROWS_WITH_AS(cmd_bench(impossible, dir.string()),
                       doctest::Contains("complete graph"), ConfigError);
  fs::remove_all(dir);
}
