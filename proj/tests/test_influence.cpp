#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "godnf/graph.hpp"
#include "godnf/influence.hpp"
#include "oracles.hpp"

using namespace godnf;

namespace {

// Exact IC activation probabilities by enumerating every live-edge subset.
// p_const < 0 selects the weighted-cascade rule 1/deg(target), matching the
// simulator. Only usable for a handful of edges.
Vector ic_exact(const Graph& g, const std::vector<Index>& seeds, Real p_const) {
  struct DirEdge {
    Index u, v;
    Real p;
  };
  std::vector<DirEdge> edges;
  for (Index u = 0; u < g.n; ++u)
    for (Index v : g.adj(u))
      edges.push_back({u, v,
                       p_const >= 0.0
                           ? p_const
                           : 1.0 / static_cast<Real>(g.degrees[v])});
  const auto m = edges.size();
  REQUIRE(m <= 20);

  Vector prob = Vector::Zero(g.n);
  std::vector<char> active(static_cast<std::size_t>(g.n));
  std::vector<Index> stack;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    Real weight = 1.0;
    for (std::size_t e = 0; e < m; ++e)
      weight *= (mask >> e & 1) ? edges[e].p : 1.0 - edges[e].p;
    if (weight == 0.0) continue;

    std::fill(active.begin(), active.end(), 0);
    stack.assign(seeds.begin(), seeds.end());
    for (Index s : seeds) active[static_cast<std::size_t>(s)] = 1;
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (std::size_t e = 0; e < m; ++e)
        if (edges[e].u == u && (mask >> e & 1) &&
            !active[static_cast<std::size_t>(edges[e].v)]) {
          active[static_cast<std::size_t>(edges[e].v)] = 1;
          stack.push_back(edges[e].v);
        }
    }
    for (Index v = 0; v < g.n; ++v)
      if (active[static_cast<std::size_t>(v)]) prob[v] += weight;
  }
  return prob;
}

Real three_sigma(Real p, int runs) {
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<Real>(runs));
}

}  // namespace

TEST_CASE("certain edges saturate the seed component") {
  Graph g = build_graph({{0, 1}, {1, 2}}, 4);  // node 3 isolated
  CascadeConfig cfg;
  cfg.ic_p = 1.0;
  cfg.runs = 500;
  cfg.seed_set = {0};
  Vector p = simulate_ic(g, cfg);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 1.0);
  CHECK(p[2] == 1.0);
  CHECK(p[3] == 0.0);
}

TEST_CASE("dead edges keep the cascade at the seeds") {
  Graph g = build_graph({{0, 1}, {1, 2}}, 4);
  CascadeConfig cfg;
  cfg.ic_p = 0.0;
  cfg.runs = 500;
  cfg.seed_set = {0, 2};
  Vector p = simulate_ic(g, cfg);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == 0.0);
  CHECK(p[2] == 1.0);
  CHECK(p[3] == 0.0);
}

TEST_CASE("single-edge activation matches the coin bias") {
  Graph g = build_graph({{0, 1}}, 2);
  CascadeConfig cfg;
  cfg.ic_p = 0.5;
  cfg.runs = 20000;
  cfg.seed_set = {0};
  cfg.rng_seed = 9;
  Vector p = simulate_ic(g, cfg);
  CHECK(p[0] == 1.0);
  CHECK(std::abs(p[1] - 0.5) < three_sigma(0.5, cfg.runs));
}

TEST_CASE("monte carlo tracks the exhaustive live-edge average") {
  Graph tri = oracle::complete_graph(3);
  CascadeConfig cfg;
  cfg.ic_p = 0.3;
  cfg.runs = 100000;
  cfg.seed_set = {0};
  cfg.rng_seed = 4;
  Vector exact = ic_exact(tri, cfg.seed_set, cfg.ic_p);
  Vector mc = simulate_ic(tri, cfg);
  CHECK(exact[0] == doctest::Approx(1.0));
  for (Index v = 0; v < 3; ++v)
    CHECK(std::abs(mc[v] - exact[v]) <
          three_sigma(exact[v], cfg.runs) + 1e-12);
}

TEST_CASE("weighted-cascade probabilities follow the target degree") {
  Graph star = oracle::star_graph(3);  // center 0, leaves 1..3
  CascadeConfig cfg;
  cfg.ic_p = -1.0;
  cfg.runs = 100000;
  cfg.seed_set = {1};
  cfg.rng_seed = 6;
  Vector exact = ic_exact(star, cfg.seed_set, cfg.ic_p);
  // leaf -> center has probability 1/3, center -> leaf is certain
  CHECK(exact[0] == doctest::Approx(1.0 / 3.0));
  CHECK(exact[2] == doctest::Approx(1.0 / 3.0));
  Vector mc = simulate_ic(star, cfg);
  for (Index v = 0; v < 4; ++v)
    CHECK(std::abs(mc[v] - exact[v]) <
          three_sigma(exact[v], cfg.runs) + 1e-12);
}

TEST_CASE("coupled cascades are monotone in the edge probability") {
  std::mt19937_64 eng(27);
  Graph g = oracle::random_connected_graph(12, 0.3, eng);
  CascadeConfig lo;
  lo.ic_p = 0.3;
  lo.runs = 2000;
  lo.seed_set = {0};
  lo.rng_seed = 14;
  CascadeConfig hi = lo;
  hi.ic_p = 0.6;
  Vector plo = simulate_ic(g, lo);
  Vector phi = simulate_ic(g, hi);
  // identical coin streams: every live edge at 0.3 is live at 0.6
  CHECK((phi - plo).minCoeff() >= 0.0);
  CHECK(phi.sum() > plo.sum());
}

TEST_CASE("threshold cascade always descends from a seeded hub") {
  Graph star = oracle::star_graph(4);
  CascadeConfig cfg;
  cfg.model = CascadeModel::LT;
  cfg.runs = 200;
  cfg.seed_set = {0};
  Vector p = simulate_lt(star, cfg);
  // each leaf has a single in-edge of weight 1, above any threshold in [0,1)
  for (Index v = 0; v < 5; ++v) CHECK(p[v] == 1.0);
}

TEST_CASE("threshold cascade crosses the hub at rate one over degree") {
  Graph star = oracle::star_graph(4);
  CascadeConfig cfg;
  cfg.model = CascadeModel::LT;
  cfg.runs = 60000;
  cfg.seed_set = {1};
  cfg.rng_seed = 3;
  Vector p = simulate_lt(star, cfg);
  CHECK(p[1] == 1.0);
  CHECK(std::abs(p[0] - 0.25) < three_sigma(0.25, cfg.runs));
  // once the center fires every other leaf follows, run by run
  CHECK(p[2] == p[0]);
  CHECK(p[3] == p[0]);
  CHECK(p[4] == p[0]);
}

TEST_CASE("threshold cascade never reaches an isolated node") {
  Graph g = build_graph({{0, 1}}, 3);
  CascadeConfig cfg;
  cfg.model = CascadeModel::LT;
  cfg.runs = 300;
  cfg.seed_set = {0};
  Vector p = simulate_lt(g, cfg);
  CHECK(p[0] == 1.0);
  CHECK(p[2] == 0.0);
}

TEST_CASE("epidemic without transmission stays on the seeds") {
  Graph g = build_graph({{0, 1}, {1, 2}, {2, 3}}, 4);
  CascadeConfig cfg;
  cfg.model = CascadeModel::SIS;
  cfg.beta = 0.0;
  cfg.gamma = 0.0;
  cfg.runs = 300;
  cfg.horizon = 10;
  cfg.seed_set = {1};
  Vector ever = simulate_sis(g, cfg);
  CHECK(ever[0] == 0.0);
  CHECK(ever[1] == 1.0);
  CHECK(ever[2] == 0.0);

  cfg.sis_final_step = true;
  Vector final_state = simulate_sis(g, cfg);
  CHECK(final_state[1] == 1.0);
  CHECK(final_state[0] == 0.0);
}

TEST_CASE("one-step epidemic infects the neighbor at rate beta") {
  Graph g = build_graph({{0, 1}}, 2);
  CascadeConfig cfg;
  cfg.model = CascadeModel::SIS;
  cfg.beta = 0.7;
  cfg.gamma = 1.0;
  cfg.horizon = 1;
  cfg.runs = 50000;
  cfg.seed_set = {0};
  cfg.rng_seed = 8;
  Vector ever = simulate_sis(g, cfg);
  CHECK(ever[0] == 1.0);
  CHECK(std::abs(ever[1] - 0.7) < three_sigma(0.7, cfg.runs));
}

TEST_CASE("final-step accounting applies same-step recovery") {
  Graph g = build_graph({{0, 1}}, 2);
  CascadeConfig cfg;
  cfg.model = CascadeModel::SIS;
  cfg.beta = 0.6;
  cfg.gamma = 0.3;
  cfg.horizon = 1;
  cfg.runs = 50000;
  cfg.sis_final_step = true;
  cfg.seed_set = {0};
  cfg.rng_seed = 15;
  Vector final_state = simulate_sis(g, cfg);
  // seed survives recovery; neighbor needs the infection and then survival
  CHECK(std::abs(final_state[0] - 0.7) < three_sigma(0.7, cfg.runs));
  CHECK(std::abs(final_state[1] - 0.42) < three_sigma(0.42, cfg.runs));
}

TEST_CASE("estimates are reproducible and thread-count invariant") {
  Graph g = build_graph({{0, 1}, {1, 2}, {0, 2}, {2, 3}}, 5);
  for (CascadeModel model :
       {CascadeModel::IC, CascadeModel::LT, CascadeModel::SIS}) {
    CascadeConfig cfg;
    cfg.model = model;
    cfg.ic_p = 0.4;
    cfg.runs = 997;
    cfg.seed_set = {0, 3};
    cfg.rng_seed = 77;
    Vector once = simulate(g, cfg);
    Vector again = simulate(g, cfg);
    CHECK((once.array() == again.array()).all());
    for (int threads : {2, 4}) {
      CascadeConfig par = cfg;
      par.threads = threads;
      Vector striped = simulate(g, par);
      CHECK((striped.array() == once.array()).all());
    }
  }
}

TEST_CASE("dispatch selects the configured model") {
  Graph g = build_graph({{0, 1}, {1, 2}}, 3);
  CascadeConfig cfg;
  cfg.model = CascadeModel::LT;
  cfg.runs = 400;
  cfg.seed_set = {1};
  cfg.rng_seed = 5;
  Vector direct = simulate_lt(g, cfg);
  Vector dispatched = simulate(g, cfg);
  CHECK((direct.array() == dispatched.array()).all());
}

TEST_CASE("seed sampling is sized, sorted and reproducible") {
  auto tiny = sample_seed_set(10, 0.05, 1);
  CHECK(tiny.size() == 1);

  auto quarter = sample_seed_set(10, 0.25, 1);
  CHECK(quarter.size() == 3);  // round(2.5) away from zero
  CHECK(std::is_sorted(quarter.begin(), quarter.end()));
  CHECK(std::set<Index>(quarter.begin(), quarter.end()).size() == 3);
  CHECK(quarter == sample_seed_set(10, 0.25, 1));

  auto all = sample_seed_set(4, 1.0, 9);
  CHECK(all == std::vector<Index>{0, 1, 2, 3});

  CHECK(sample_seed_set(1, 0.3, 2) == std::vector<Index>{0});
  CHECK_THROWS_AS(sample_seed_set(5, 0.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_seed_set(5, 1.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_seed_set(0, 0.5, 0), std::invalid_argument);
}

TEST_CASE("cascade settings are validated") {
  Graph g = build_graph({{0, 1}}, 2);
  CascadeConfig cfg;
  cfg.seed_set = {0};

  CascadeConfig bad = cfg;
  bad.runs = 0;
  CHECK_THROWS_WITH_AS(simulate(g, bad), doctest::Contains(">= 1"),
                       std::invalid_argument);
  bad = cfg;
  bad.seed_set.clear();
  CHECK_THROWS_WITH_AS(simulate(g, bad), doctest::Contains("nonempty"),
                       std::invalid_argument);
  bad = cfg;
  bad.seed_set = {5};
  CHECK_THROWS_WITH_AS(simulate(g, bad), doctest::Contains("out of range"),
                       std::invalid_argument);
  bad = cfg;
  bad.ic_p = 1.5;
  CHECK_THROWS_AS(simulate(g, bad), std::invalid_argument);
  bad = cfg;
  bad.beta = 1.5;
  CHECK_THROWS_AS(simulate(g, bad), std::invalid_argument);
  bad = cfg;
  bad.gamma = -0.1;
  CHECK_THROWS_AS(simulate(g, bad), std::invalid_argument);
  bad = cfg;
  bad.horizon = 0;
  CHECK_THROWS_AS(simulate(g, bad), std::invalid_argument);
  bad = cfg;
  bad.threads = 0;
  CHECK_THROWS_AS(simulate(g, bad), std::invalid_argument);

  CascadeConfig lt = cfg;
  lt.model = CascadeModel::LT;
  CHECK_THROWS_WITH_AS(simulate_ic(g, lt), doctest::Contains("IC config"),
                       std::invalid_argument);
}
