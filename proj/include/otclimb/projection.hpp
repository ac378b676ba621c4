#pragma once

// Projections of a probability measure mu onto the cap set
// K_f = { probability rho : rho <= f pointwise }.  Both climb a nearby flow
// from mu into f (rows <= mu, columns <= f) until it carries all of mu; the
// projection is the flow's second marginal.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "otclimb/climbing.hpp"
#include "otclimb/exact.hpp"
#include "otclimb/flow_solver.hpp"
#include "otclimb/geometry.hpp"
#include "otclimb/measures.hpp"
#include "otclimb/nearby_flow.hpp"
#include "otclimb/wasserstein.hpp"

namespace otclimb {

enum class ProjectionNorm { w1, winf };

struct ProjectionResult {
  ProjectionNorm norm = ProjectionNorm::w1;
  DiscreteMeasure zeta;
  NearbyFlow witness;
  double tau_key = 0;
  double tau = 0;
  // W_1(mu, zeta) for w1 (sum of the scaled costs on the witness), tau for winf.
  double w_distance = 0;
  Rational w_distance_exact = 0;
  std::optional<Rational> theta{};
  std::size_t rungs = 0;
  std::vector<RungRecord> trace{};
  double runtime_ms = 0;
};

// Column sums of a flow, in the flow's units.
inline DiscreteMeasure second_marginal(const NearbyFlow& eta, PointSetPtr ground) {
  if (!ground) throw InputError("second marginal needs a ground point set");
  std::vector<Units> cols(ground->size(), 0);
  for (const auto& e : eta.edges) {
    if (e.target >= cols.size()) throw InputError("flow edge outside the point set");
    cols[e.target] += e.units;
  }
  Rational unit = eta.unit_scale > 0 ? eta.unit_scale : Rational(1);
  return DiscreteMeasure::dense(std::move(ground), cols, unit);
}

namespace detail {

inline void require_projectable(const DiscreteMeasure& mu, const DiscreteMeasure& cap, const CostOracle& oracle) {
  if (!mu.is_probability()) throw InputError("projection needs a probability measure");
  if (!same_ground(mu.ground_ptr(), cap.ground_ptr())) throw InputError("cap lives on another point set");
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  if (cap.total_mass() < 1) throw InfeasibleError("infeasible cap: |f| < 1");
}

inline ProjectionResult finish_projection(ProjectionNorm norm, const DiscreteMeasure& mu, ClimbResult&& climbed,
                                          const CostOracle& oracle) {
  const NearbyFlow& eta = climbed.saturating_flow.flow;
  ProjectionResult r{.norm = norm,
                     .zeta = second_marginal(eta, mu.ground_ptr()),
                     .witness = eta,
                     .tau_key = climbed.tau_key,
                     .tau = climbed.tau};
  r.rungs = climbed.rungs_solved;
  r.trace = std::move(climbed.trace);
  if (norm == ProjectionNorm::winf) {
    if (bottleneck_key(eta.edges, oracle) != climbed.tau_key) {
      throw std::logic_error("projection witness bottleneck differs from the saturation threshold");
    }
    r.w_distance = climbed.tau;
  } else {
    auto costs = std::make_shared<const ScaledCosts>(oracle, 1.0, std::vector<double>{});
    BigInt total = 0;
    for (const auto& e : eta.edges) total += BigInt(e.units) * costs->at(oracle.key(e.source, e.target));
    r.w_distance_exact = costs->to_real(total) * eta.unit_scale;
    r.w_distance = exact::to_double(r.w_distance_exact);
  }
  return r;
}

}  // namespace detail

// W_1 projection (W_c for a custom oracle), complementary utility.
inline ProjectionResult project_w1(const DiscreteMeasure& mu, const DiscreteMeasure& cap, const CostOracle& oracle,
                                   const ClimbConfig& cfg = {}) {
  detail::require_projectable(mu, cap, oracle);
  auto start = std::chrono::steady_clock::now();
  auto lad = ladder(oracle, mu.support(), cap.support());
  auto climbed = climb(mu, cap, oracle, UtilityFamily::complementary, lad, cfg);
  auto r = detail::finish_projection(ProjectionNorm::w1, mu, std::move(climbed), oracle);
  r.runtime_ms = detail::elapsed_ms(start);
  return r;
}

// W_inf projection: the saturation threshold against the cap is the smallest
// W_inf distance from mu to K_f.
inline ProjectionResult project_winf(const DiscreteMeasure& mu, const DiscreteMeasure& cap, const CostOracle& oracle,
                                     const ClimbConfig& cfg = {}) {
  detail::require_projectable(mu, cap, oracle);
  auto start = std::chrono::steady_clock::now();
  auto lad = ladder(oracle, mu.support(), cap.support());
  auto climbed = climb(mu, cap, oracle, UtilityFamily::constant, lad, cfg);
  auto r = detail::finish_projection(ProjectionNorm::winf, mu, std::move(climbed), oracle);
  r.runtime_ms = detail::elapsed_ms(start);
  return r;
}

// Pointwise zeta <= f, exact.
inline bool within_cap(const DiscreteMeasure& zeta, const DiscreteMeasure& cap) {
  for (const auto& a : zeta.atoms()) {
    if (zeta.unit_scale() * a.units > cap.mass_at(a.index)) return false;
  }
  return true;
}

}  // namespace otclimb
