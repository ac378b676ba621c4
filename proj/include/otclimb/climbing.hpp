#pragma once

// Climbing over a threshold ladder: solve MNF rung by rung and stop at the
// first rung whose optimal (max-mass) nearby flow carries all of mu.  With the
// full cost image as ladder this returns the minimal saturation threshold.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "otclimb/exact.hpp"
#include "otclimb/flow_solver.hpp"
#include "otclimb/geometry.hpp"
#include "otclimb/measures.hpp"

namespace otclimb {

enum class SearchStrategy { linear, bisection };

enum class UtilityFamily { constant, complementary };

struct ClimbConfig {
  SearchStrategy strategy = SearchStrategy::linear;
  // Mass tolerance on the deficit.  Measures here are integer-unit, so the
  // climb always runs with an effective tolerance of exactly 0.
  double delta = 0.0;
  std::optional<std::size_t> max_rungs;
  TieBreak tie_break = TieBreak::max_mass;
};

struct RungRecord {
  double threshold_key = 0;
  double threshold = 0;
  Rational utility = 0;
  Units deficit_units = 0;
  Rational deficit = 0;
  double millis = 0;

  bool same_outcome(const RungRecord& o) const {
    return threshold_key == o.threshold_key && utility == o.utility && deficit_units == o.deficit_units;
  }
};

struct ClimbResult {
  double tau_key = 0;
  double tau = 0;
  MnfSolution saturating_flow;
  // Linear strategy: one record per rung in ladder order.  Bisection: one
  // record per probe in probing order.
  std::vector<RungRecord> trace;
  std::size_t rungs_solved = 0;
};

inline Utility make_utility(UtilityFamily family, const CostOracle& oracle, const DiscreteMeasure& mu,
                            const DiscreteMeasure& nu, const ThresholdLadder& ladder) {
  if (family == UtilityFamily::constant) return Utility::constant();
  return Utility::complementary(scaled_costs_for(oracle, mu, nu, 1.0, ladder.keys));
}

namespace detail {

inline RungRecord record_rung(const CostOracle& oracle, const MnfSolution& sol, double key, double millis) {
  RungRecord r;
  r.threshold_key = key;
  r.threshold = oracle.value(key);
  r.utility = sol.flow.utility_value();
  r.deficit_units = sol.deficit_units();
  r.deficit = sol.flow.unit_scale * r.deficit_units;
  r.millis = millis;
  return r;
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

inline void check_budget(const ClimbConfig& cfg, std::size_t solved) {
  if (cfg.max_rungs && solved >= *cfg.max_rungs) {
    throw InfeasibleError("rung limit reached before saturation");
  }
}

}  // namespace detail

inline ClimbResult climb(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                         const Utility& utility, const ThresholdLadder& ladder, const ClimbConfig& cfg) {
  if (ladder.empty()) throw InputError("threshold ladder is empty");
  if (!(cfg.delta >= 0)) throw InputError("delta must be nonnegative");
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  const auto sa = mu.support();
  const auto sb = nu.support();
  ClimbResult result;

  if (cfg.strategy == SearchStrategy::linear) {
    MnfSolver solver(mu, nu, utility, cfg.tie_break);
    double previous = -1.0;
    for (double key : ladder.keys) {
      detail::check_budget(cfg, result.rungs_solved);
      auto start = std::chrono::steady_clock::now();
      auto shell = nearby_shell(oracle, sa, sb, previous, key);
      solver.admit(shell);
      previous = key;
      MnfSolution sol = solver.solve(key);
      ++result.rungs_solved;
      result.trace.push_back(detail::record_rung(oracle, sol, key, detail::elapsed_ms(start)));
      if (sol.is_saturated) {
        result.tau_key = key;
        result.tau = oracle.value(key);
        result.saturating_flow = std::move(sol);
        return result;
      }
    }
    throw InfeasibleError("no saturating threshold in ladder");
  }

  // Bisection: each probe is a cold solve at one rung.
  auto probe = [&](std::size_t idx) {
    detail::check_budget(cfg, result.rungs_solved);
    auto start = std::chrono::steady_clock::now();
    double key = ladder.keys[idx];
    MnfSolver solver(mu, nu, utility, cfg.tie_break);
    auto nearby = nearby_set(oracle, sa, sb, key);
    solver.admit(nearby.edges);
    MnfSolution sol = solver.solve(key);
    ++result.rungs_solved;
    result.trace.push_back(detail::record_rung(oracle, sol, key, detail::elapsed_ms(start)));
    return sol;
  };
  std::size_t lo = 0;
  std::size_t hi = ladder.size() - 1;
  MnfSolution best = probe(hi);
  if (!best.is_saturated) throw InfeasibleError("no saturating threshold in ladder");
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    MnfSolution sol = probe(mid);
    if (sol.is_saturated) {
      hi = mid;
      best = std::move(sol);
    } else {
      lo = mid + 1;
    }
  }
  result.tau_key = ladder.keys[hi];
  result.tau = oracle.value(result.tau_key);
  result.saturating_flow = std::move(best);
  return result;
}

inline ClimbResult climb(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostOracle& oracle,
                         UtilityFamily family, const ThresholdLadder& ladder, const ClimbConfig& cfg) {
  return climb(mu, nu, oracle, make_utility(family, oracle, mu, nu, ladder), ladder, cfg);
}

// Columns: t, utility, deficit, millis.
inline std::string trace_csv(const std::vector<RungRecord>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "t,utility,deficit,millis\n";
  for (const auto& r : trace) {
    out << r.threshold << ',' << exact::to_double(r.utility) << ',' << exact::to_double(r.deficit) << ','
        << r.millis << '\n';
  }
  return out.str();
}

}  // namespace otclimb
