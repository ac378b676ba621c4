#pragma once

// Ground costs, threshold ladders and nearby sets.
//
// Every cost c(i, j) is addressed through an exact ordering key: the squared
// distance for geometric costs (exact for lattice coordinates) and the raw
// value for custom tables.  Threshold tests c(i, j) <= t are key comparisons,
// so ladders deduplicate exactly and the closed inequality never misses a rung.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otclimb/exact.hpp"
#include "otclimb/measures.hpp"

namespace otclimb {

enum class CostKind { euclidean, scaled_pixel, custom };

class CostOracle {
 public:
  static CostOracle euclidean(PointSetPtr ground) {
    CostOracle o(CostKind::euclidean, std::move(ground));
    o.divisor_ = 1;
    o.init_diameter();
    return o;
  }

  // (1/N) * Euclidean distance between pixel centres of a grid.
  static CostOracle scaled_pixel(PointSetPtr grid, int divisor) {
    if (!grid || !grid->grid_shape()) throw InputError("scaled pixel cost needs a grid point set");
    if (divisor <= 0) throw InputError("cost divisor must be positive");
    CostOracle o(CostKind::scaled_pixel, std::move(grid));
    o.divisor_ = divisor;
    o.init_diameter();
    return o;
  }

  // Dense n x n table, row-major.  Must be symmetric, nonnegative, finite and
  // zero on the diagonal.
  static CostOracle custom(PointSetPtr ground, std::vector<double> table) {
    if (!ground) throw InputError("custom cost needs a point set");
    std::size_t n = ground->size();
    if (table.size() != n * n) throw InputError("cost table must be n x n");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double v = table[i * n + j];
        if (!std::isfinite(v) || v < 0) throw InputError("cost table entries must be finite and >= 0");
        if (v != table[j * n + i]) throw InputError("cost table must be symmetric");
      }
      if (table[i * n + i] != 0) throw InputError("cost table diagonal must be zero");
    }
    CostOracle o(CostKind::custom, std::move(ground));
    o.table_ = std::make_shared<const std::vector<double>>(std::move(table));
    o.init_diameter();
    return o;
  }

  CostKind kind() const { return kind_; }
  int divisor() const { return divisor_; }
  const PointSet& ground() const { return *ground_; }
  const PointSetPtr& ground_ptr() const { return ground_; }
  bool geometric() const { return kind_ != CostKind::custom; }

  double key(std::size_t i, std::size_t j) const {
    if (kind_ == CostKind::custom) return (*table_)[i * ground_->size() + j];
    auto a = ground_->point(i);
    auto b = ground_->point(j);
    double s = 0;
    for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return s;
  }

  double value(double key) const {
    switch (kind_) {
      case CostKind::euclidean: return std::sqrt(key);
      case CostKind::scaled_pixel: return std::sqrt(key) / divisor_;
      case CostKind::custom: return key;
    }
    return key;
  }

  double cost(std::size_t i, std::size_t j) const { return value(key(i, j)); }

  double key_for_value(double v) const {
    if (v < 0) throw InputError("thresholds must be nonnegative");
    if (kind_ == CostKind::custom) return v;
    double scaled = v * divisor_;
    return scaled * scaled;
  }

  double diameter_key() const { return diameter_key_; }

  // ceil(c^p * 2^e) computed exactly for integer p; `is_exact` reports
  // whether c^p * 2^e was already an integer.
  BigInt scaled_power(double key, int p, int e, bool* is_exact = nullptr) const {
    if (p < 1) throw InputError("cost exponent must be >= 1");
    BigInt result;
    bool ok = false;
    if (kind_ == CostKind::custom) {
      Rational r = exact::pow(exact::from_double(key), static_cast<unsigned>(p)) *
                   exact::pow2_rational(e);
      result = exact::ceil(r);
      ok = boost::multiprecision::denominator(r) == 1;
    } else {
      // c^p * 2^e = sqrt(key^p * 4^e / N^(2p)) = sqrt(num / den)
      Rational q = exact::pow(exact::from_double(key), static_cast<unsigned>(p)) *
                   exact::pow2_rational(2 * e) /
                   Rational(boost::multiprecision::pow(BigInt(divisor_), 2 * static_cast<unsigned>(p)));
      const BigInt& num = boost::multiprecision::numerator(q);
      const BigInt& den = boost::multiprecision::denominator(q);
      BigInt prod = num * den;
      BigInt root = exact::isqrt_ceil(prod);
      result = exact::ceil_div(root, den);
      ok = root * root == prod && root % den == 0;
    }
    if (is_exact) *is_exact = ok;
    return result;
  }

  // Floating variant for non-integer exponents.
  BigInt scaled_power_approx(double key, double p, int e) const {
    long double v = std::pow(static_cast<long double>(value(key)), static_cast<long double>(p));
    v = std::ldexp(v, e);
    return BigInt(std::ceil(v));
  }

 private:
  CostOracle(CostKind kind, PointSetPtr ground) : kind_(kind), ground_(std::move(ground)) {
    if (!ground_) throw InputError("cost oracle needs a point set");
  }

  void init_diameter() {
    const auto& g = *ground_;
    if (geometric() && g.grid_shape()) {
      double w = g.grid_shape()->width - 1;
      double h = g.grid_shape()->height - 1;
      diameter_key_ = w * w + h * h;
      return;
    }
    double best = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) best = std::max(best, key(i, j));
    }
    diameter_key_ = best;
  }

  CostKind kind_;
  PointSetPtr ground_;
  int divisor_ = 1;
  std::shared_ptr<const std::vector<double>> table_;
  double diameter_key_ = 0;
};

inline double truncated_cost(const CostOracle& oracle, std::size_t i, std::size_t j, double t) {
  if (t < 0) throw InputError("truncation threshold must be nonnegative");
  return std::min(oracle.cost(i, j), t);
}

// Integer costs ceil(c^p * 2^e) on a set of keys, with one exponent e per
// ground set so every problem over that ground shares the same scale.  For
// p = 1 the rounded cost is still a metric (ceil is subadditive).
//
// With a clamp, keys above a known bottleneck key b are priced at
// S(b) * total_units + 1, more than any plan confined to keys <= b can cost
// in total, so optimal plans never use them; the scale is then chosen for
// S(b) instead of the diameter, which keeps high powers resolvable.
struct CostClamp {
  double bottleneck_key = 0;
  std::int64_t total_units = 1;
};

class ScaledCosts {
 public:
  // Headroom: |cost| * (node count) stays below 2^58, so potentials and
  // reduced costs of the network simplex fit in int64.
  static constexpr int kHeadroomBits = 58;
  static constexpr int kMaxExponent = 48;

  ScaledCosts(const CostOracle& oracle, double p, std::vector<double> keys,
              std::optional<CostClamp> clamp = std::nullopt)
      : oracle_(&oracle), p_(p), keys_(std::move(keys)), clamp_(clamp) {
    if (!(p >= 1)) throw InputError("cost exponent must be >= 1");
    if (clamp_ && (clamp_->bottleneck_key < 0 || clamp_->total_units < 1)) throw InputError("invalid cost clamp");
    integral_p_ = p == std::floor(p) && p <= 4096;
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    node_bound_ = 2 * oracle.ground().size() + 4;
    exponent_ = clamp_ ? choose_clamped_exponent() : choose_exponent(oracle.diameter_key());
    values_.reserve(keys_.size());
    for (double k : keys_) {
      bool ok = false;
      values_.push_back(compute(k, &ok));
      if (!clamp_ || k <= clamp_->bottleneck_key) exact_ = exact_ && ok;
    }
  }

  int exponent() const { return exponent_; }
  double p() const { return p_; }
  // Every unclamped cost was an exact integer before rounding.
  bool exact() const { return exact_; }
  bool clamped() const { return clamp_.has_value(); }
  std::int64_t max_value() const { return max_value_; }
  const CostOracle& oracle() const { return *oracle_; }

  std::int64_t at(double key) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it != keys_.end() && *it == key) return values_[static_cast<std::size_t>(it - keys_.begin())];
    return compute(key, nullptr);
  }

  // Real cost c^p represented by a scaled integer.
  Rational to_real(const BigInt& scaled) const { return Rational(scaled) * exact::pow2_rational(-exponent_); }

 private:
  std::int64_t compute(double key, bool* ok) const {
    if (clamp_ && key > clamp_->bottleneck_key) {
      if (ok) *ok = false;
      return max_value_;
    }
    return exact::to_int64(raw(key, exponent_, ok), "scaled cost");
  }

  BigInt raw(double key, int e, bool* ok = nullptr) const {
    if (integral_p_) return oracle_->scaled_power(key, static_cast<int>(p_), e, ok);
    if (ok) *ok = false;
    return oracle_->scaled_power_approx(key, p_, e);
  }

  int initial_guess(double key) const {
    long double top = std::log2(static_cast<long double>(oracle_->value(key))) * p_;
    int e = static_cast<int>(std::floor(kHeadroomBits - std::log2(static_cast<long double>(node_bound_)) - top));
    return std::min(e + 1, kMaxExponent);
  }

  int choose_exponent(double diameter_key) {
    if (diameter_key <= 0) {
      max_value_ = 0;
      return kMaxExponent;
    }
    BigInt limit = exact::pow2(kHeadroomBits);
    for (int e = initial_guess(diameter_key);; --e) {
      BigInt v = raw(diameter_key, e);
      if (v * node_bound_ <= limit) {
        max_value_ = exact::to_int64(v, "scaled cost");
        return e;
      }
    }
  }

  int choose_clamped_exponent() {
    const double b = clamp_->bottleneck_key;
    BigInt limit = exact::pow2(kHeadroomBits);
    if (b <= 0) {
      max_value_ = 1;
      return kMaxExponent;
    }
    long double units_bits = std::log2(static_cast<long double>(clamp_->total_units));
    for (int e = initial_guess(b) - static_cast<int>(std::ceil(units_bits));; --e) {
      BigInt v = raw(b, e) * clamp_->total_units + 1;
      if (v * node_bound_ <= limit) {
        max_value_ = exact::to_int64(v, "scaled cost");
        return e;
      }
    }
  }

  const CostOracle* oracle_;
  double p_;
  bool integral_p_ = true;
  std::vector<double> keys_;
  std::optional<CostClamp> clamp_;
  std::vector<std::int64_t> values_;
  std::size_t node_bound_ = 0;
  int exponent_ = 0;
  std::int64_t max_value_ = 0;
  bool exact_ = true;
};

enum class LadderProvenance { cost_image, user_supplied };

// Strictly increasing candidate thresholds, stored as cost keys.
struct ThresholdLadder {
  std::vector<double> keys;
  LadderProvenance provenance = LadderProvenance::cost_image;

  std::size_t size() const { return keys.size(); }
  bool empty() const { return keys.empty(); }
};

namespace detail {

inline bool grid_fast_path(const CostOracle& oracle) {
  return oracle.geometric() && oracle.ground().grid_shape().has_value();
}

}  // namespace detail

// Sorted distinct values of c over support_a x support_b.
inline ThresholdLadder ladder(const CostOracle& oracle, std::span<const std::size_t> support_a,
                              std::span<const std::size_t> support_b) {
  if (support_a.empty() || support_b.empty()) throw InputError("ladder needs nonempty supports");
  ThresholdLadder out;
  if (detail::grid_fast_path(oracle)) {
    auto shape = *oracle.ground().grid_shape();
    auto max_key = static_cast<std::size_t>(oracle.diameter_key());
    std::vector<char> seen(max_key + 1, 0);
    for (std::size_t i : support_a) {
      long ri = static_cast<long>(i) / shape.width;
      long ci = static_cast<long>(i) % shape.width;
      for (std::size_t j : support_b) {
        long dr = static_cast<long>(j) / shape.width - ri;
        long dc = static_cast<long>(j) % shape.width - ci;
        seen[static_cast<std::size_t>(dr * dr + dc * dc)] = 1;
      }
    }
    for (std::size_t k = 0; k <= max_key; ++k) {
      if (seen[k]) out.keys.push_back(static_cast<double>(k));
    }
    return out;
  }
  out.keys.reserve(support_a.size() * support_b.size());
  for (std::size_t i : support_a) {
    for (std::size_t j : support_b) out.keys.push_back(oracle.key(i, j));
  }
  std::sort(out.keys.begin(), out.keys.end());
  out.keys.erase(std::unique(out.keys.begin(), out.keys.end()), out.keys.end());
  return out;
}

inline ThresholdLadder ladder_from_values(const CostOracle& oracle, const std::vector<double>& values) {
  ThresholdLadder out;
  out.provenance = LadderProvenance::user_supplied;
  for (double v : values) {
    double k = oracle.key_for_value(v);
    if (!out.keys.empty() && k <= out.keys.back()) {
      throw InputError("threshold ladder must be strictly increasing");
    }
    out.keys.push_back(k);
  }
  if (out.keys.empty()) throw InputError("threshold ladder is empty");
  return out;
}

struct NearbyEdge {
  std::size_t source;
  std::size_t target;
  double key;

  friend bool operator==(const NearbyEdge&, const NearbyEdge&) = default;
};

// N_t restricted to support_a x support_b, sorted by (source, target).
struct NearbySet {
  double threshold_key = 0;
  std::vector<NearbyEdge> edges;
};

// Pairs with lo < key <= hi (lo = -1 gives the full ball).
inline std::vector<NearbyEdge> nearby_shell(const CostOracle& oracle, std::span<const std::size_t> support_a,
                                            std::span<const std::size_t> support_b, double lo, double hi) {
  std::vector<NearbyEdge> edges;
  if (hi < 0) return edges;
  const PointSet& g = oracle.ground();
  if (detail::grid_fast_path(oracle)) {
    auto shape = *g.grid_shape();
    long radius = static_cast<long>(std::floor(std::sqrt(hi))) + 1;
    while (radius * radius > hi) --radius;
    long span_side = 2 * radius + 1;
    if (static_cast<std::size_t>(span_side * span_side) <= support_b.size() * 2) {
      std::vector<std::int32_t> present(g.size(), 0);
      for (std::size_t j : support_b) present[j] = 1;
      for (std::size_t i : support_a) {
        long r = static_cast<long>(i) / shape.width;
        long c = static_cast<long>(i) % shape.width;
        for (long dr = -radius; dr <= radius; ++dr) {
          long rr = r + dr;
          if (rr < 0 || rr >= shape.height) continue;
          for (long dc = -radius; dc <= radius; ++dc) {
            long cc = c + dc;
            if (cc < 0 || cc >= shape.width) continue;
            auto k = static_cast<double>(dr * dr + dc * dc);
            if (k > hi || k <= lo) continue;
            auto j = static_cast<std::size_t>(rr * shape.width + cc);
            if (present[j]) edges.push_back({i, j, k});
          }
        }
      }
      return edges;
    }
  }
  for (std::size_t i : support_a) {
    for (std::size_t j : support_b) {
      double k = oracle.key(i, j);
      if (k <= hi && k > lo) edges.push_back({i, j, k});
    }
  }
  return edges;
}

inline NearbySet nearby_set(const CostOracle& oracle, std::span<const std::size_t> support_a,
                            std::span<const std::size_t> support_b, double threshold_key) {
  if (threshold_key < 0) throw InputError("threshold must be nonnegative");
  return NearbySet{threshold_key, nearby_shell(oracle, support_a, support_b, -1.0, threshold_key)};
}

}  // namespace otclimb
