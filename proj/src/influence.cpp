#include "godnf/influence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <thread>
#include <utility>

#include "godnf/rng.hpp"

namespace godnf {

void CascadeConfig::validate(Index n) const {
  require(runs >= 1, "runs must be >= 1");
  require(!seed_set.empty(), "seed set must be nonempty");
  for (Index v : seed_set)
    require(v >= 0 && v < n,
            "seed node " + std::to_string(v) + " is out of range");
  require(ic_p <= 1.0, "edge probability must be <= 1");
  require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(horizon >= 1, "horizon must be >= 1");
  require(threads >= 1, "threads must be >= 1");
}

namespace {

std::vector<char> seed_mask(Index n, const std::vector<Index>& seeds) {
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  for (Index v : seeds) mask[static_cast<std::size_t>(v)] = 1;
  return mask;
}

// Shared Monte Carlo loop. make_runner() builds one closure per worker
// thread (each with private scratch); runs are striped over threads, each
// run draws from its own derived stream, and per-thread integer counts are
// reduced in thread order so the result is independent of the thread count.
template <typename Factory>
Vector monte_carlo(const Graph& g, const CascadeConfig& cfg,
                   Factory make_runner) {
  cfg.validate(g.n);
  const auto n = static_cast<std::size_t>(g.n);
  const int threads = std::min(cfg.threads, cfg.runs);
  std::vector<std::vector<std::int64_t>> counts(
      static_cast<std::size_t>(threads), std::vector<std::int64_t>(n, 0));
  const std::vector<char> seeds = seed_mask(g.n, cfg.seed_set);

  auto worker = [&](int tid) {
    auto runner = make_runner();
    std::vector<char> state(n, 0);
    auto& local = counts[static_cast<std::size_t>(tid)];
    for (int run = tid; run < cfg.runs; run += threads) {
      std::mt19937_64 eng(
          derive_seed(cfg.rng_seed, static_cast<std::uint64_t>(run)));
      runner(eng, seeds, state);
      for (std::size_t v = 0; v < n; ++v) local[v] += state[v];
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int tid = 0; tid < threads; ++tid) pool.emplace_back(worker, tid);
    for (auto& th : pool) th.join();
  }

  Vector prob = Vector::Zero(g.n);
  for (std::size_t v = 0; v < n; ++v) {
    std::int64_t total = 0;
    for (int tid = 0; tid < threads; ++tid)
      total += counts[static_cast<std::size_t>(tid)][v];
    prob[static_cast<Index>(v)] =
        static_cast<Real>(total) / static_cast<Real>(cfg.runs);
  }
  return prob;
}

}  // namespace

Vector simulate_ic(const Graph& g, const CascadeConfig& cfg) {
  require(cfg.model == CascadeModel::IC, "config is not an IC config");
  return monte_carlo(g, cfg, [&g, &cfg] {
    // One run: sample every directed edge's coin, then walk the live part
    // from the seeds. Coins are drawn before looking at the seed set, so
    // coupled seed sets share an identical live-edge world per run.
    return [&g, &cfg, live = std::vector<char>(g.neighbors.size(), 0),
            stack = std::vector<Index>()](
               std::mt19937_64& eng, const std::vector<char>& seeds,
               std::vector<char>& active) mutable {
      const Index n = g.n;
      for (Index u = 0; u < n; ++u) {
        const auto adj = g.adj(u);
        for (std::size_t s = 0; s < adj.size(); ++s) {
          const Real p = cfg.ic_p >= 0.0
                             ? cfg.ic_p
                             : 1.0 / static_cast<Real>(g.degrees[adj[s]]);
          live[static_cast<std::size_t>(g.offsets[u]) + s] =
              uniform01(eng) < p;
        }
      }
      std::copy(seeds.begin(), seeds.end(), active.begin());
      stack.clear();
      for (Index v = 0; v < n; ++v)
        if (seeds[static_cast<std::size_t>(v)]) stack.push_back(v);
      while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        const auto adj = g.adj(u);
        for (std::size_t s = 0; s < adj.size(); ++s) {
          const Index v = adj[s];
          if (!active[static_cast<std::size_t>(v)] &&
              live[static_cast<std::size_t>(g.offsets[u]) + s]) {
            active[static_cast<std::size_t>(v)] = 1;
            stack.push_back(v);
          }
        }
      }
    };
  });
}

Vector simulate_lt(const Graph& g, const CascadeConfig& cfg) {
  require(cfg.model == CascadeModel::LT, "config is not an LT config");
  const auto n = static_cast<std::size_t>(g.n);
  return monte_carlo(g, cfg, [&g, n] {
    return [&g, threshold = std::vector<Real>(n, 0.0),
            acc = std::vector<Real>(n, 0.0), stack = std::vector<Index>()](
               std::mt19937_64& eng, const std::vector<char>& seeds,
               std::vector<char>& active) mutable {
      for (auto& th : threshold) th = uniform01(eng);
      std::fill(acc.begin(), acc.end(), 0.0);
      std::copy(seeds.begin(), seeds.end(), active.begin());
      stack.clear();
      for (Index v = 0; v < g.n; ++v)
        if (seeds[static_cast<std::size_t>(v)]) stack.push_back(v);
      while (!stack.empty()) {
        const Index u = stack.back();
        stack.pop_back();
        for (Index v : g.adj(u)) {
          const auto vi = static_cast<std::size_t>(v);
          if (active[vi]) continue;
          acc[vi] += 1.0 / static_cast<Real>(g.degrees[v]);
          if (acc[vi] >= threshold[vi]) {
            active[vi] = 1;
            stack.push_back(v);
          }
        }
      }
    };
  });
}

Vector simulate_sis(const Graph& g, const CascadeConfig& cfg) {
  require(cfg.model == CascadeModel::SIS, "config is not an SIS config");
  const auto n = static_cast<std::size_t>(g.n);
  return monte_carlo(g, cfg, [&g, &cfg, n] {
    return [&g, &cfg, infected = std::vector<char>(n, 0),
            newly = std::vector<char>(n, 0)](std::mt19937_64& eng,
                                             const std::vector<char>& seeds,
                                             std::vector<char>& ever) mutable {
      std::copy(seeds.begin(), seeds.end(), infected.begin());
      std::copy(seeds.begin(), seeds.end(), ever.begin());
      for (int step = 0; step < cfg.horizon; ++step) {
        std::fill(newly.begin(), newly.end(), 0);
        for (Index u = 0; u < g.n; ++u) {
          if (!infected[static_cast<std::size_t>(u)]) continue;
          for (Index v : g.adj(u)) {
            const auto vi = static_cast<std::size_t>(v);
            if (infected[vi] || newly[vi]) continue;
            if (uniform01(eng) < cfg.beta) newly[vi] = 1;
          }
        }
        for (std::size_t vi = 0; vi < newly.size(); ++vi)
          if (newly[vi]) {
            infected[vi] = 1;
            ever[vi] = 1;
          }
        // recovery also covers nodes infected this very step
        for (std::size_t vi = 0; vi < infected.size(); ++vi)
          if (infected[vi] && uniform01(eng) < cfg.gamma) infected[vi] = 0;
      }
      if (cfg.sis_final_step)
        std::copy(infected.begin(), infected.end(), ever.begin());
    };
  });
}

Vector simulate(const Graph& g, const CascadeConfig& cfg) {
  switch (cfg.model) {
    case CascadeModel::IC: return simulate_ic(g, cfg);
    case CascadeModel::LT: return simulate_lt(g, cfg);
    case CascadeModel::SIS: return simulate_sis(g, cfg);
  }
  throw std::invalid_argument("unknown cascade model");
}

std::vector<Index> sample_seed_set(Index n, Real fraction, std::uint64_t seed) {
  require(n > 0, "graph must be nonempty");
  require(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
  auto count = static_cast<Index>(
      std::max<long long>(1, std::llround(fraction * static_cast<Real>(n))));
  count = std::min(count, n);
  std::vector<Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::mt19937_64 eng(derive_seed(seed, 0));
  for (Index i = 0; i < count; ++i) {
    // partial Fisher-Yates: the prefix is a uniform size-`count` subset
    const auto j =
        i + static_cast<Index>(eng() % static_cast<std::uint64_t>(n - i));
    std::swap(ids[static_cast<std::size_t>(i)],
              ids[static_cast<std::size_t>(j)]);
  }
  ids.resize(static_cast<std::size_t>(count));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace godnf
