#pragma once

// Distances: W_p through the transportation LP, W_inf (and W_c,inf for custom
// tables) through climbing with constant utility, truncated W_p^(t), and the
// a-posteriori bound on W_1 - W_1^(t) from an unsaturated nearby flow.

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "otclimb/climbing.hpp"
#include "otclimb/exact.hpp"
#include "otclimb/flow_solver.hpp"
#include "otclimb/geometry.hpp"
#include "otclimb/measures.hpp"
#include "otclimb/nearby_flow.hpp"

namespace otclimb {

enum class Method { transport_lp, climbing };

// exact_rational: the objective is the exact rational sum of c^p pi.
// exact_key: the value is a cost identified by its exact key (W_inf).
// scaled_integer: costs were rounded up to integers at scale 2^exponent.
enum class Exactness { exact_rational, exact_key, scaled_integer };

inline const char* to_string(Method m) { return m == Method::transport_lp ? "transport-lp" : "climbing"; }

inline const char* to_string(Exactness e) {
  switch (e) {
    case Exactness::exact_rational: return "exact-rational";
    case Exactness::exact_key: return "exact-key";
    case Exactness::scaled_integer: return "scaled-integer";
  }
  return "";
}

struct DistanceResult {
  double value = 0;
  double p = 1;  // +inf for W_inf
  Method method = Method::transport_lp;
  Exactness exactness = Exactness::exact_rational;
  // LP methods: sum c^p pi (of the scaled costs when not exact).
  Rational objective = 0;
  BigInt scaled_objective = 0;
  int exponent = 0;
  // Climbing: the saturating threshold key, which equals the witness bottleneck.
  std::optional<double> threshold_key;
  TransportPlan plan;
  double runtime_ms = 0;
  std::size_t rungs = 0;
  std::vector<RungRecord> trace;
  std::int64_t pivots = 0;
};

namespace detail {

inline void require_probability_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  if (!same_ground(mu.ground_ptr(), nu.ground_ptr())) throw InputError("measures live on different point sets");
  if (mu.total_mass() != nu.total_mass()) throw InputError("mass mismatch: marginals differ");
  if (!mu.is_probability()) throw InputError("distances need probability measures");
}

inline double nth_root(const Rational& x, double p) {
  double v = exact::to_double(x);
  if (v <= 0) return 0;
  if (p == 1) return v;
  if (p == 2) return std::sqrt(v);
  return std::pow(v, 1.0 / p);
}

inline DistanceResult from_transport(const TransportSolution& sol, double p, double started_ms) {
  DistanceResult r;
  r.p = p;
  r.method = Method::transport_lp;
  r.exactness = sol.exact ? Exactness::exact_rational : Exactness::scaled_integer;
  r.scaled_objective = sol.objective;
  r.exponent = sol.exponent;
  r.objective = sol.objective_real();
  r.value = nth_root(r.objective, p);
  r.plan = sol.plan;
  r.pivots = sol.stats.pivots;
  r.runtime_ms = started_ms;
  return r;
}

inline double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace detail

// Largest cost key carrying positive flow; -1 for an empty plan.
inline double bottleneck_key(const std::vector<FlowEdge>& edges, const CostOracle& oracle) {
  double worst = -1;
  for (const auto& e : edges) {
    if (e.units > 0) worst = std::max(worst, oracle.key(e.source, e.target));
  }
  return worst;
}

// W_inf for geometric oracles and W_c,inf for custom tables.
inline DistanceResult w_infinity(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                                 const ClimbConfig& cfg = {}) {
  detail::require_probability_pair(mu, nu);
  double start = detail::now_ms();
  auto lad = ladder(oracle, mu.support(), nu.support());
  auto climbed = climb(mu, nu, oracle, UtilityFamily::constant, lad, cfg);
  DistanceResult r;
  r.p = std::numeric_limits<double>::infinity();
  r.method = Method::climbing;
  r.exactness = Exactness::exact_key;
  r.threshold_key = climbed.tau_key;
  r.value = climbed.tau;
  r.plan.edges = climbed.saturating_flow.flow.edges;
  r.plan.unit_scale = climbed.saturating_flow.flow.unit_scale;
  if (bottleneck_key(r.plan.edges, oracle) != climbed.tau_key) {
    throw std::logic_error("W_inf witness bottleneck differs from the saturation threshold");
  }
  r.rungs = climbed.rungs_solved;
  r.trace = std::move(climbed.trace);
  r.runtime_ms = detail::now_ms() - start;
  return r;
}

namespace detail {

// Plain scaled costs when they are exact; otherwise costs clamped above the
// W_inf bottleneck so the scale resolves the part of the cost range an
// optimal plan can use.
inline std::shared_ptr<const ScaledCosts> transport_costs(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                                          const CostOracle& oracle, double p) {
  auto costs = scaled_costs_for(oracle, mu, nu, p);
  if (p == 1 || costs->exact()) return costs;
  auto bottleneck = w_infinity(mu, nu, oracle);
  Units total = reconcile(mu, nu).first.total_units();
  return scaled_costs_for(oracle, mu, nu, p, {}, CostClamp{*bottleneck.threshold_key, total});
}

}  // namespace detail

inline DistanceResult w_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle, int p) {
  if (p < 1) throw InputError("p must be a positive integer");
  detail::require_probability_pair(mu, nu);
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  double start = detail::now_ms();
  auto costs = detail::transport_costs(mu, nu, oracle, p);
  auto sol = detail::solve_transport_impl(mu, nu, *costs, std::nullopt);
  return detail::from_transport(sol, p, detail::now_ms() - start);
}

// Real exponent; costs are evaluated in long double, so the result is
// approximate (about 1e-12 relative per cost).
inline DistanceResult w_p_approx(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                                 double p) {
  if (!(p >= 1) || !std::isfinite(p)) throw InputError("p must be a finite real >= 1");
  if (p == std::floor(p) && p <= 4096) return w_p(mu, nu, oracle, static_cast<int>(p));
  detail::require_probability_pair(mu, nu);
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  double start = detail::now_ms();
  auto costs = detail::transport_costs(mu, nu, oracle, p);
  auto sol = detail::solve_transport_impl(mu, nu, *costs, std::nullopt);
  auto r = detail::from_transport(sol, p, detail::now_ms() - start);
  r.exactness = Exactness::scaled_integer;
  return r;
}

// t * |mu| - max sum s^(t) eta with s = t - c, in scaled units times flow units.
inline BigInt truncated_w1_from_flow(const NearbyFlow& eta, const ScaledCosts& costs, Units source_units) {
  return BigInt(costs.at(eta.threshold_key)) * source_units - eta.utility;
}

// W_1^(t) through one max nearby flow with complementary utility; the result
// is in the same scaled units as solve_truncated(..., 1, t).objective.
inline BigInt w1_truncated_via_mnf(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                                   double threshold_key) {
  threshold_key = std::min(threshold_key, oracle.diameter_key());
  auto costs = scaled_costs_for(oracle, mu, nu, 1.0, {threshold_key});
  auto nearby = nearby_set(oracle, mu.support(), nu.support(), threshold_key);
  auto sol = solve_mnf(mu, nu, nearby, Utility::complementary(costs), TieBreak::max_mass);
  return truncated_w1_from_flow(sol.flow, *costs, sol.source_units);
}

inline DistanceResult w_p_truncated(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                                    int p, double threshold_key) {
  if (p < 1) throw InputError("p must be a positive integer");
  if (threshold_key < 0) throw InputError("truncation threshold must be nonnegative");
  detail::require_probability_pair(mu, nu);
  double start = detail::now_ms();
  auto sol = solve_truncated(mu, nu, oracle, p, threshold_key);
#ifndef NDEBUG
  if (p == 1 && w1_truncated_via_mnf(mu, nu, oracle, threshold_key) != sol.objective) {
    throw std::logic_error("truncated W_1 disagrees with its nearby-flow identity");
  }
#endif
  auto r = detail::from_transport(sol, p, detail::now_ms() - start);
  r.threshold_key = threshold_key;
  return r;
}

struct PlanEntry {
  std::size_t source;
  std::size_t target;
  Rational mass;
};

struct ErrorBound {
  double threshold_key = 0;
  double threshold = 0;
  Rational absolute_bound = 0;
  // +inf when W_1^(t) = 0.
  double relative_bound = 0;
  Rational truncated_w1 = 0;
  DiscreteMeasure source_residual;
  DiscreteMeasure target_residual;
  std::vector<PlanEntry> completion_plan;  // empty unless requested
};

// Bound on W_1 - W_1^(t) from an optimal unsaturated complementary-utility
// flow eta at threshold t.  The completion plan spreads the leftover mass as
// the normalized product of the residual marginals.
inline ErrorBound error_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                              const MnfSolution& eta, bool build_plan = true) {
  detail::require_probability_pair(mu, nu);
  if (eta.is_saturated) throw InputError("bound undefined at saturation; W1^(t) = W1 exactly");
  const double tkey = eta.flow.threshold_key;
  auto costs = scaled_costs_for(oracle, mu, nu, 1.0, {tkey});
  const std::int64_t t_scaled = costs->at(tkey);
  auto mres = residual(mu, eta.flow, Side::source);
  auto nres = residual(nu, eta.flow, Side::target);
  const Rational& unit = eta.flow.unit_scale;
  if (mres.unit_scale() != unit || nres.unit_scale() != unit) {
    throw std::logic_error("residual units differ from the flow units");
  }
  const Units leftover = eta.source_units - eta.flow.total_units;

  BigInt numerator = 0;
  for (const auto& a : mres.atoms()) {
    for (const auto& b : nres.atoms()) {
      std::int64_t excess = costs->at(oracle.key(a.index, b.index)) - t_scaled;
      if (excess > 0) numerator += BigInt(excess) * a.units * b.units;
    }
  }
  ErrorBound out{tkey, oracle.value(tkey), 0, 0, 0, mres, nres, {}};
  const Rational scale = exact::pow2_rational(-costs->exponent());
  out.absolute_bound = Rational(numerator) * unit * scale / leftover;
  out.truncated_w1 = Rational(truncated_w1_from_flow(eta.flow, *costs, eta.source_units)) * unit * scale;
  out.relative_bound = out.truncated_w1 == 0
                           ? std::numeric_limits<double>::infinity()
                           : exact::to_double(out.absolute_bound / out.truncated_w1);
  if (build_plan) {
    std::vector<PlanEntry> plan;
    for (const auto& e : eta.flow.edges) plan.push_back({e.source, e.target, unit * e.units});
    for (const auto& a : mres.atoms()) {
      for (const auto& b : nres.atoms()) {
        plan.push_back({a.index, b.index, Rational(BigInt(a.units) * b.units) * unit / leftover});
      }
    }
    std::sort(plan.begin(), plan.end(), [](const PlanEntry& x, const PlanEntry& y) {
      return x.source != y.source ? x.source < y.source : x.target < y.target;
    });
    for (const auto& e : plan) {
      if (!out.completion_plan.empty() && out.completion_plan.back().source == e.source &&
          out.completion_plan.back().target == e.target) {
        out.completion_plan.back().mass += e.mass;
      } else {
        out.completion_plan.push_back(e);
      }
    }
  }
  return out;
}

inline bool is_transport_plan(const std::vector<PlanEntry>& plan, const DiscreteMeasure& mu,
                              const DiscreteMeasure& nu) {
  std::vector<Rational> rows(mu.ground().size(), 0);
  std::vector<Rational> cols(nu.ground().size(), 0);
  for (const auto& e : plan) {
    if (e.mass < 0) return false;
    rows[e.source] += e.mass;
    cols[e.target] += e.mass;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] != mu.mass_at(i)) return false;
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] != nu.mass_at(j)) return false;
  }
  return true;
}

}  // namespace otclimb
