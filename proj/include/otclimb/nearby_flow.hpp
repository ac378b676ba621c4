#pragma once

// Plain flow containers shared by the measure, solver and projection layers.

#include <cstddef>
#include <vector>

#include "otclimb/exact.hpp"

namespace otclimb {

struct FlowEdge {
  std::size_t source;  // ground index on the source side
  std::size_t target;  // ground index on the target side
  Units units;

  friend bool operator==(const FlowEdge&, const FlowEdge&) = default;
};

// A sub-coupling supported on a nearby set N_t: row sums bounded by the
// source marginal, column sums by the target marginal.  Only edges with
// positive flow are stored, sorted by (source, target).
struct NearbyFlow {
  double threshold_key = 0.0;
  std::vector<FlowEdge> edges;
  Rational unit_scale = 1;
  Units total_units = 0;
  // Sum of utility * units, utility in the solver's integer utility scale.
  BigInt utility = 0;
  // Utility values are integers times 2^-utility_exponent.
  int utility_exponent = 0;

  Rational total_mass() const { return unit_scale * total_units; }
  Rational utility_value() const {
    return Rational(utility) * unit_scale * exact::pow2_rational(-utility_exponent);
  }
};

// A coupling whose row sums equal mu and column sums equal nu, in units.
struct TransportPlan {
  std::vector<FlowEdge> edges;
  Rational unit_scale = 1;

  Units total_units() const {
    Units t = 0;
    for (const auto& e : edges) t += e.units;
    return t;
  }
};

}  // namespace otclimb
