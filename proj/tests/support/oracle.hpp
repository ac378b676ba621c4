#pragma once

// Brute-force references for tests.  Nothing here touches the flow solver:
// assignments are enumerated over permutations and max flow uses BFS
// augmenting paths on a dense residual matrix.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// One row per unit atom of mu, one column per unit atom of nu.
template <class Cost>
struct AtomizedInstance {
  std::vector<std::size_t> source_points;
  std::vector<std::size_t> target_points;
  std::vector<std::vector<Cost>> cost;  // cost[a][b]

  std::size_t size() const { return source_points.size(); }
};

inline std::vector<std::size_t> expand_units(const std::vector<std::int64_t>& units) {
  std::vector<std::size_t> atoms;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (units[i] < 0) throw std::invalid_argument("negative units");
    for (std::int64_t k = 0; k < units[i]; ++k) atoms.push_back(i);
  }
  return atoms;
}

// Dense unit vectors in, atomized instance with cost(i, j) per atom pair out.
template <class CostFn>
auto atomize(const std::vector<std::int64_t>& mu_units, const std::vector<std::int64_t>& nu_units, CostFn cost) {
  using Cost = decltype(cost(std::size_t{0}, std::size_t{0}));
  AtomizedInstance<Cost> inst;
  inst.source_points = expand_units(mu_units);
  inst.target_points = expand_units(nu_units);
  if (inst.source_points.size() != inst.target_points.size()) throw std::invalid_argument("unit totals differ");
  for (std::size_t a : inst.source_points) {
    std::vector<Cost> row;
    for (std::size_t b : inst.target_points) row.push_back(cost(a, b));
    inst.cost.push_back(std::move(row));
  }
  return inst;
}

template <class Cost, class Combine>
Cost best_over_permutations(const AtomizedInstance<Cost>& inst, Combine combine, Cost empty) {
  const std::size_t n = inst.size();
  if (n > 8) throw std::invalid_argument("brute force refuses more than 8 atoms per side");
  if (n == 0) return empty;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  bool first = true;
  Cost best{};
  do {
    Cost acc = empty;
    for (std::size_t a = 0; a < n; ++a) acc = combine(acc, inst.cost[a][perm[a]]);
    if (first || acc < best) best = acc;
    first = false;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// min over matchings of the max matched cost.
template <class Cost>
Cost bottleneck_bruteforce(const AtomizedInstance<Cost>& inst) {
  return best_over_permutations(inst, [](Cost a, Cost b) { return std::max(a, b); }, Cost{0});
}

// min over matchings of the summed matched cost (in atom units).
template <class Cost>
Cost transport_bruteforce(const AtomizedInstance<Cost>& inst) {
  return best_over_permutations(inst, [](Cost a, Cost b) { return a + b; }, Cost{0});
}

// max over matchings of the summed gain of matched pairs that are allowed;
// disallowed pairs contribute nothing (partial matchings extend to permutations).
template <class Gain, class Allowed>
Gain partial_assignment_bruteforce(const AtomizedInstance<Gain>& inst, Allowed allowed) {
  const std::size_t n = inst.size();
  if (n > 8) throw std::invalid_argument("brute force refuses more than 8 atoms per side");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Gain best{0};
  do {
    Gain acc{0};
    for (std::size_t a = 0; a < n; ++a) {
      if (allowed(a, perm[a])) acc += inst.cost[a][perm[a]];
    }
    if (acc > best) best = acc;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct UnitEdge {
  std::size_t source;
  std::size_t target;
};

// Edmonds-Karp on a dense matrix: source s, points as left and right copies, sink t.
inline std::int64_t maxflow_independent(const std::vector<UnitEdge>& edges, const std::vector<std::int64_t>& mu,
                                        const std::vector<std::int64_t>& nu) {
  const std::size_t n = mu.size();
  const std::size_t nodes = 2 * n + 2;
  const std::size_t s = 2 * n;
  const std::size_t t = 2 * n + 1;
  const std::int64_t big = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::vector<std::int64_t>> cap(nodes, std::vector<std::int64_t>(nodes, 0));
  for (std::size_t i = 0; i < n; ++i) {
    cap[s][i] = mu[i];
    cap[n + i][t] = nu[i];
  }
  for (const auto& e : edges) cap[e.source][n + e.target] = big;
  std::int64_t total = 0;
  for (;;) {
    std::vector<std::ptrdiff_t> parent(nodes, -1);
    parent[s] = static_cast<std::ptrdiff_t>(s);
    std::queue<std::size_t> q;
    q.push(s);
    while (!q.empty() && parent[t] < 0) {
      std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < nodes; ++v) {
        if (parent[v] < 0 && cap[u][v] > 0) {
          parent[v] = static_cast<std::ptrdiff_t>(u);
          q.push(v);
        }
      }
    }
    if (parent[t] < 0) return total;
    std::int64_t push = big;
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(parent[v])) {
      push = std::min(push, cap[static_cast<std::size_t>(parent[v])][v]);
    }
    for (std::size_t v = t; v != s; v = static_cast<std::size_t>(parent[v])) {
      auto u = static_cast<std::size_t>(parent[v]);
      cap[u][v] -= push;
      cap[v][u] += push;
    }
    total += push;
  }
}

// Random split of `total` units over `slots` slots.
inline std::vector<std::int64_t> random_units(std::mt19937_64& rng, std::size_t slots, std::int64_t total) {
  std::vector<std::int64_t> u(slots, 0);
  std::uniform_int_distribution<std::size_t> pick(0, slots - 1);
  for (std::int64_t k = 0; k < total; ++k) ++u[pick(rng)];
  return u;
}

}  // namespace oracle
