#pragma once

// Maximum Nearby Flow and the transportation LP on top of NetworkSimplex.
//
// MNF network: super source S -> each source atom x (capacity mu_x), nearby
// edge x -> y (uncapacitated, cost -s(x, y)), each target atom y -> super sink
// T (capacity nu_y), plus a zero-cost bypass S -> T.  Exactly |mu| units leave
// S, and whatever the bypass carries is mass left unrouted.

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "otclimb/exact.hpp"
#include "otclimb/geometry.hpp"
#include "otclimb/measures.hpp"
#include "otclimb/nearby_flow.hpp"
#include "otclimb/network_simplex.hpp"

namespace otclimb {

enum class UtilityKind { constant, complementary, custom };

// Nonnegative integer edge weights s^(t), scaled by 2^-exponent().
class Utility {
 public:
  using Table = std::function<std::int64_t(const NearbyEdge&)>;

  // s = 1 on N_t.
  static Utility constant() { return Utility(UtilityKind::constant); }

  // s = t - c on N_t, with c the p = 1 scaled costs.
  static Utility complementary(std::shared_ptr<const ScaledCosts> costs) {
    if (!costs || costs->p() != 1) throw InputError("complementary utility needs p = 1 scaled costs");
    Utility u(UtilityKind::complementary);
    u.costs_ = std::move(costs);
    return u;
  }

  // Arbitrary nonnegative weights bounded by `bound`.
  static Utility custom(Table table, std::int64_t bound, int exponent = 0) {
    if (bound < 0) throw InputError("utility bound must be nonnegative");
    Utility u(UtilityKind::custom);
    u.table_ = std::move(table);
    u.bound_ = bound;
    u.exponent_ = exponent;
    return u;
  }

  UtilityKind kind() const { return kind_; }
  int exponent() const { return kind_ == UtilityKind::complementary ? costs_->exponent() : exponent_; }
  const std::shared_ptr<const ScaledCosts>& costs() const { return costs_; }

  std::int64_t bound() const {
    switch (kind_) {
      case UtilityKind::constant: return 1;
      case UtilityKind::complementary: return std::max<std::int64_t>(costs_->max_value(), 1);
      case UtilityKind::custom: return std::max<std::int64_t>(bound_, 1);
    }
    return 1;
  }

  std::int64_t at(const NearbyEdge& e, double threshold_key) const {
    switch (kind_) {
      case UtilityKind::constant: return 1;
      case UtilityKind::complementary: return costs_->at(threshold_key) - costs_->at(e.key);
      case UtilityKind::custom: {
        std::int64_t v = table_(e);
        if (v < 0 || v > bound_) throw InputError("custom utility outside [0, bound]");
        return v;
      }
    }
    return 0;
  }

 private:
  explicit Utility(UtilityKind kind) : kind_(kind) {}

  UtilityKind kind_;
  std::shared_ptr<const ScaledCosts> costs_;
  Table table_;
  std::int64_t bound_ = 1;
  int exponent_ = 0;
};

enum class TieBreak { none, max_mass };

struct SolverStats {
  std::int64_t pivots = 0;
  std::size_t edge_count = 0;
  int cost_scale_exponent = 0;
};

struct MnfSolution {
  NearbyFlow flow;
  bool is_saturated = false;
  Units source_units = 0;  // |mu| in flow units
  SolverStats stats;

  Units deficit_units() const { return source_units - flow.total_units; }
};

class MnfSolver {
 public:
  MnfSolver(const DiscreteMeasure& mu, const DiscreteMeasure& nu, Utility utility,
            TieBreak tie_break = TieBreak::max_mass)
      : utility_(std::move(utility)), tie_break_(tie_break) {
    auto [m, n] = reconcile(mu, nu);
    unit_scale_ = m.unit_scale();
    source_units_ = m.total_units();
    if (source_units_ == 0) throw InputError("source measure has zero mass");
    if (n.total_units() < source_units_) {
      throw InputError("target mass is smaller than source mass");
    }
    for (const auto& a : m.atoms()) sources_.push_back(a);
    for (const auto& a : n.atoms()) targets_.push_back(a);
    source_pos_.assign(m.ground().size(), -1);
    target_pos_.assign(m.ground().size(), -1);
    for (std::size_t k = 0; k < sources_.size(); ++k) source_pos_[sources_[k].index] = static_cast<int>(k);
    for (std::size_t k = 0; k < targets_.size(); ++k) target_pos_[targets_[k].index] = static_cast<int>(k);

    const std::size_t na = sources_.size();
    const std::size_t nb = targets_.size();
    sink_ = na + nb + 1;
    net_ = std::make_unique<NetworkSimplex>(na + nb + 2, utility_.bound());
    net_->set_supply(0, source_units_);
    net_->set_supply(sink_, -source_units_);
    for (std::size_t k = 0; k < na; ++k) net_->add_arc(0, 1 + k, sources_[k].units, 0);
    for (std::size_t k = 0; k < nb; ++k) net_->add_arc(1 + na + k, sink_, targets_[k].units, 0);
    bypass_ = net_->add_arc(0, sink_, source_units_, 0);
  }

  const Rational& unit_scale() const { return unit_scale_; }
  Units source_units() const { return source_units_; }
  std::size_t edge_count() const { return edges_.size(); }

  // Adds nearby edges; edges touching zero-mass points are ignored.
  void admit(std::span<const NearbyEdge> edges) {
    net_->unlock_face();
    for (const auto& e : edges) {
      if (e.source >= source_pos_.size() || e.target >= target_pos_.size()) {
        throw InputError("nearby edge outside the point set");
      }
      int a = source_pos_[e.source];
      int b = target_pos_[e.target];
      if (a < 0 || b < 0) continue;
      auto arc = net_->add_arc(1 + static_cast<std::size_t>(a), 1 + sources_.size() + static_cast<std::size_t>(b),
                               NetworkSimplex::kInfinite, 0);
      edges_.push_back(e);
      arcs_.push_back(arc);
      if (utility_.kind() == UtilityKind::constant) net_->set_cost(arc, -1);
    }
  }

  // Optimal nearby flow at threshold t over every admitted edge (all admitted
  // edges must satisfy key <= t).
  MnfSolution solve(double threshold_key) {
    net_->unlock_face();
    std::int64_t pivots_before = net_->pivot_count();
    utilities_.resize(edges_.size());
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      if (edges_[k].key > threshold_key) throw std::logic_error("admitted edge lies outside N_t");
      utilities_[k] = utility_.at(edges_[k], threshold_key);
      if (utility_.kind() != UtilityKind::constant || net_->cost(arcs_[k]) != -1) {
        net_->set_cost(arcs_[k], -utilities_[k]);
      }
    }
    net_->set_cost(bypass_, 0);
    run();
    assert(net_->certify_optimal());

    if (tie_break_ == TieBreak::max_mass && utility_.kind() != UtilityKind::constant) {
      // Utility is fixed on the optimal face; now push as much mass as possible.
      net_->lock_optimal_face();
      for (auto arc : arcs_) net_->set_cost(arc, 0);
      net_->set_cost(bypass_, 1);
      run();
      assert(net_->certify_optimal());
      net_->unlock_face();
    }

    MnfSolution sol;
    sol.source_units = source_units_;
    sol.flow.threshold_key = threshold_key;
    sol.flow.unit_scale = unit_scale_;
    sol.flow.utility_exponent = utility_.exponent();
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      Units f = net_->flow(arcs_[k]);
      if (f == 0) continue;
      sol.flow.edges.push_back({edges_[k].source, edges_[k].target, f});
      sol.flow.total_units += f;
      sol.flow.utility += BigInt(f) * utilities_[k];
    }
    std::sort(sol.flow.edges.begin(), sol.flow.edges.end(), [](const FlowEdge& a, const FlowEdge& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    sol.is_saturated = sol.flow.total_units == source_units_;
    sol.stats.pivots = net_->pivot_count() - pivots_before;
    sol.stats.edge_count = edges_.size();
    sol.stats.cost_scale_exponent = utility_.exponent();
    return sol;
  }

 private:
  void run() {
    auto status = net_->solve();
    if (status != NetworkSimplex::Status::optimal) {
      throw std::logic_error("nearby flow network reported an infeasible or unbounded model");
    }
  }

  Utility utility_;
  TieBreak tie_break_;
  Rational unit_scale_;
  Units source_units_ = 0;
  std::vector<Atom> sources_;
  std::vector<Atom> targets_;
  std::vector<int> source_pos_;
  std::vector<int> target_pos_;
  std::size_t sink_ = 0;
  std::unique_ptr<NetworkSimplex> net_;
  NetworkSimplex::ArcId bypass_ = 0;
  std::vector<NearbyEdge> edges_;
  std::vector<NetworkSimplex::ArcId> arcs_;
  std::vector<std::int64_t> utilities_;
};

inline MnfSolution solve_mnf(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const NearbySet& nearby,
                             const Utility& utility, TieBreak tie_break = TieBreak::max_mass) {
  MnfSolver solver(mu, nu, utility, tie_break);
  solver.admit(nearby.edges);
  return solver.solve(nearby.threshold_key);
}

struct TransportSolution {
  TransportPlan plan;
  BigInt objective = 0;  // sum of scaled cost * units
  int exponent = 0;      // scaled cost = ceil(c^p * 2^exponent)
  bool exact = true;     // every scaled cost was an exact integer
  SolverStats stats;

  // sum c^p pi in real mass units.
  Rational objective_real() const {
    return Rational(objective) * exact::pow2_rational(-exponent) * plan.unit_scale;
  }
};

namespace detail {

inline TransportSolution solve_transport_impl(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              const ScaledCosts& costs, std::optional<double> truncation_key) {
  auto [m, n] = reconcile(mu, nu);
  if (m.total_units() != n.total_units()) throw InputError("marginals differ");
  const CostOracle& oracle = costs.oracle();
  const auto na = m.atoms().size();
  const auto nb = n.atoms().size();
  std::int64_t cap_cost = truncation_key ? costs.at(*truncation_key) : std::numeric_limits<std::int64_t>::max();
  NetworkSimplex net(na + nb, std::max<std::int64_t>(costs.max_value(), 1));
  for (std::size_t k = 0; k < na; ++k) net.set_supply(k, m.atoms()[k].units);
  for (std::size_t k = 0; k < nb; ++k) net.set_supply(na + k, -n.atoms()[k].units);
  std::vector<std::int64_t> arc_cost;
  arc_cost.reserve(na * nb);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      std::int64_t c = std::min(costs.at(oracle.key(m.atoms()[a].index, n.atoms()[b].index)), cap_cost);
      net.add_arc(a, na + b, NetworkSimplex::kInfinite, c);
      arc_cost.push_back(c);
    }
  }
  if (net.solve() != NetworkSimplex::Status::optimal) {
    throw std::logic_error("transportation network reported an infeasible model");
  }
  assert(net.certify_optimal());
  TransportSolution sol;
  sol.plan.unit_scale = m.unit_scale();
  sol.exponent = costs.exponent();
  sol.exact = costs.exact();
  sol.stats.pivots = net.pivot_count();
  sol.stats.edge_count = na * nb;
  sol.stats.cost_scale_exponent = costs.exponent();
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      std::size_t arc = a * nb + b;
      Units f = net.flow(arc);
      if (f == 0) continue;
      sol.plan.edges.push_back({m.atoms()[a].index, n.atoms()[b].index, f});
      sol.objective += BigInt(f) * arc_cost[arc];
    }
  }
  return sol;
}

}  // namespace detail

// Scaled costs over every key between the two supports (plus extra keys).
inline std::shared_ptr<const ScaledCosts> scaled_costs_for(const CostOracle& oracle, const DiscreteMeasure& mu,
                                                           const DiscreteMeasure& nu, double p,
                                                           std::vector<double> extra_keys = {},
                                                           std::optional<CostClamp> clamp = std::nullopt) {
  auto sa = mu.support();
  auto sb = nu.support();
  std::vector<double> keys = extra_keys;
  if (!sa.empty() && !sb.empty()) {
    auto lad = ladder(oracle, sa, sb);
    keys.insert(keys.end(), lad.keys.begin(), lad.keys.end());
  }
  return std::make_shared<const ScaledCosts>(oracle, p, std::move(keys), clamp);
}

// Optimal plan for sum c^p pi (Hitchcock-Koopmans transportation problem).
inline TransportSolution solve_transport(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const CostOracle& oracle, double p) {
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  auto costs = scaled_costs_for(oracle, mu, nu, p);
  return detail::solve_transport_impl(mu, nu, *costs, std::nullopt);
}

// Optimal plan for sum min(c, t)^p pi.
inline TransportSolution solve_truncated(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const CostOracle& oracle, double p, double threshold_key) {
  if (threshold_key < 0) throw InputError("truncation threshold must be nonnegative");
  if (!same_ground(mu.ground_ptr(), oracle.ground_ptr())) throw InputError("cost oracle is on another point set");
  // Past the diameter nothing is truncated.
  threshold_key = std::min(threshold_key, oracle.diameter_key());
  auto costs = scaled_costs_for(oracle, mu, nu, p, {threshold_key});
  return detail::solve_transport_impl(mu, nu, *costs, threshold_key);
}

// Recomputes sum scaled-cost * units for any plan.
inline BigInt plan_objective(const TransportPlan& plan, const ScaledCosts& costs,
                             std::optional<double> truncation_key = std::nullopt) {
  BigInt total = 0;
  std::int64_t cap = truncation_key ? costs.at(*truncation_key) : std::numeric_limits<std::int64_t>::max();
  for (const auto& e : plan.edges) {
    total += BigInt(e.units) * std::min(costs.at(costs.oracle().key(e.source, e.target)), cap);
  }
  return total;
}

// Row and column sums of a flow against two measures, in the flow's units.
inline bool is_transport_plan(const std::vector<FlowEdge>& edges, const Rational& unit_scale,
                              const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<Rational> rows(mu.ground().size(), 0);
  std::vector<Rational> cols(nu.ground().size(), 0);
  for (const auto& e : edges) {
    if (e.units < 0) return false;
    rows[e.source] += unit_scale * e.units;
    cols[e.target] += unit_scale * e.units;
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
