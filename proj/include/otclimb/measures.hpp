#pragma once

// Discrete measures on finite point sets, grid images, padding and caps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "otclimb/exact.hpp"
#include "otclimb/nearby_flow.hpp"

namespace otclimb {

struct GridShape {
  int width = 0;
  int height = 0;

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

// Finite point set X in R^dim.  Points are indexed 0..size-1.  Grid point sets
// store (row, col) for index row * width + col.
class PointSet {
 public:
  static PointSet grid(int width, int height) {
    if (width <= 0 || height <= 0) throw InputError("grid dimensions must be positive");
    PointSet ps;
    ps.dim_ = 2;
    ps.grid_ = GridShape{width, height};
    ps.coords_.reserve(static_cast<std::size_t>(width) * height * 2);
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        ps.coords_.push_back(r);
        ps.coords_.push_back(c);
      }
    }
    return ps;
  }

  static PointSet from_coordinates(const std::vector<std::vector<double>>& points) {
    if (points.empty()) throw InputError("point set is empty");
    PointSet ps;
    ps.dim_ = static_cast<int>(points.front().size());
    if (ps.dim_ <= 0) throw InputError("points must have positive dimension");
    for (const auto& p : points) {
      if (static_cast<int>(p.size()) != ps.dim_) throw InputError("points have mixed dimensions");
      for (double v : p) {
        if (!std::isfinite(v)) throw InputError("non-finite coordinate");
        ps.coords_.push_back(v);
      }
    }
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (points[order[k]] == points[order[k - 1]]) {
        throw InputError("duplicate point coordinates at indices " + std::to_string(order[k - 1]) +
                         " and " + std::to_string(order[k]));
      }
    }
    return ps;
  }

  // Points on the real line.
  static PointSet line(const std::vector<double>& xs) {
    std::vector<std::vector<double>> pts;
    pts.reserve(xs.size());
    for (double x : xs) pts.push_back({x});
    return from_coordinates(pts);
  }

  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dim_); }
  int dim() const { return dim_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  const std::optional<GridShape>& grid_shape() const { return grid_; }

  // Integer lattice coordinates: squared distances are computed exactly.
  bool integral() const {
    return std::all_of(coords_.begin(), coords_.end(), [](double v) {
      return v == std::floor(v) && std::fabs(v) < 67108864.0;  // 2^26
    });
  }

  friend bool operator==(const PointSet& a, const PointSet& b) {
    return a.dim_ == b.dim_ && a.grid_ == b.grid_ && a.coords_ == b.coords_;
  }

 private:
  PointSet() = default;

  int dim_ = 1;
  std::vector<double> coords_;
  std::optional<GridShape> grid_;
};

using PointSetPtr = std::shared_ptr<const PointSet>;

inline bool same_ground(const PointSetPtr& a, const PointSetPtr& b) {
  return a == b || (a && b && *a == *b);
}

struct Atom {
  std::size_t index;
  Units units;

  friend bool operator==(const Atom&, const Atom&) = default;
};

// Nonnegative measure over a ground point set.  Masses are integer units; the
// real mass at x is units(x) * unit_scale.  Zero-mass points are not stored, so
// atoms() is exactly the support.
class DiscreteMeasure {
 public:
  DiscreteMeasure(PointSetPtr ground, std::vector<Atom> atoms, Rational unit_scale)
      : ground_(std::move(ground)), unit_scale_(std::move(unit_scale)) {
    if (!ground_) throw InputError("measure needs a ground point set");
    if (unit_scale_ <= 0) throw InputError("unit scale must be positive");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.index < b.index; });
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      const Atom& a = atoms[k];
      if (a.index >= ground_->size()) throw InputError("atom index outside the point set");
      if (a.units < 0) throw InputError("negative mass");
      if (k > 0 && atoms[k - 1].index == a.index) throw InputError("repeated atom index");
      if (a.units > 0) {
        if (total_units_ > std::numeric_limits<Units>::max() - a.units) {
          throw InputError("total mass overflows 64-bit units");
        }
        total_units_ += a.units;
        atoms_.push_back(a);
      }
    }
  }

  // Dense constructor: one entry per ground point.
  static DiscreteMeasure dense(PointSetPtr ground, const std::vector<Units>& units,
                               Rational unit_scale) {
    if (!ground || units.size() != ground->size()) {
      throw InputError("dense mass vector does not match the point set");
    }
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < units.size(); ++i) atoms.push_back({i, units[i]});
    return DiscreteMeasure(std::move(ground), std::move(atoms), std::move(unit_scale));
  }

  const PointSet& ground() const { return *ground_; }
  const PointSetPtr& ground_ptr() const { return ground_; }
  std::span<const Atom> atoms() const { return atoms_; }
  Units total_units() const { return total_units_; }
  const Rational& unit_scale() const { return unit_scale_; }
  Rational total_mass() const { return unit_scale_ * total_units_; }
  bool is_probability() const { return total_mass() == 1; }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    s.reserve(atoms_.size());
    for (const auto& a : atoms_) s.push_back(a.index);
    return s;
  }

  Units units_at(std::size_t index) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), index,
                               [](const Atom& a, std::size_t i) { return a.index < i; });
    return it != atoms_.end() && it->index == index ? it->units : 0;
  }
  Rational mass_at(std::size_t index) const { return unit_scale_ * units_at(index); }

  std::vector<Units> dense_units() const {
    std::vector<Units> d(ground_->size(), 0);
    for (const auto& a : atoms_) d[a.index] = a.units;
    return d;
  }

  // Same measure expressed with a finer unit: unit_scale / factor.
  DiscreteMeasure refined(Units factor) const {
    if (factor <= 0) throw InputError("refinement factor must be positive");
    std::vector<Atom> atoms = atoms_;
    for (auto& a : atoms) {
      if (__builtin_mul_overflow(a.units, factor, &a.units)) {
        throw InputError("mass unit refinement overflows 64-bit units");
      }
    }
    return DiscreteMeasure(ground_, std::move(atoms), unit_scale_ / factor);
  }

  // Expresses this measure in units of `scale`, which must divide unit_scale.
  DiscreteMeasure in_units_of(const Rational& scale) const {
    Rational ratio = unit_scale_ / scale;
    if (boost::multiprecision::denominator(ratio) != 1) {
      throw InputError("unit scale is not a multiple of the requested unit");
    }
    return refined(exact::to_int64(boost::multiprecision::numerator(ratio), "unit ratio"));
  }

  // Exact equality of the represented measures (units may differ).
  friend bool same_measure(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    if (!same_ground(a.ground_, b.ground_) || a.atoms_.size() != b.atoms_.size()) return false;
    for (std::size_t k = 0; k < a.atoms_.size(); ++k) {
      if (a.atoms_[k].index != b.atoms_[k].index) return false;
      if (a.unit_scale_ * a.atoms_[k].units != b.unit_scale_ * b.atoms_[k].units) return false;
    }
    return true;
  }

 private:
  PointSetPtr ground_;
  std::vector<Atom> atoms_;
  Rational unit_scale_;
  Units total_units_ = 0;
};

// Largest unit s such that both scales are integer multiples of s.
inline Rational common_unit(const Rational& a, const Rational& b) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::gcd;
  using boost::multiprecision::lcm;
  using boost::multiprecision::numerator;
  return Rational(gcd(numerator(a), numerator(b)), lcm(denominator(a), denominator(b)));
}

// Both measures re-expressed over one common unit.
inline std::pair<DiscreteMeasure, DiscreteMeasure> reconcile(const DiscreteMeasure& a,
                                                             const DiscreteMeasure& b) {
  if (!same_ground(a.ground_ptr(), b.ground_ptr())) {
    throw InputError("measures live on different point sets");
  }
  Rational unit = common_unit(a.unit_scale(), b.unit_scale());
  return {a.in_units_of(unit), b.in_units_of(unit)};
}

// Row-major greyscale histogram.
struct GridImage {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> pixels;
  // N in the scaled pixel cost; padding keeps it.
  int resolution_tag = 0;

  std::int64_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
      throw InputError("pixel count does not match width x height");
    }
    for (auto v : pixels) {
      if (v < 0) throw InputError("negative pixel intensity");
    }
    if (resolution_tag <= 0) throw InputError("resolution tag must be positive");
  }

  friend bool operator==(const GridImage&, const GridImage&) = default;
};

inline GridImage make_image(int width, int height, std::vector<std::int64_t> pixels,
                            int resolution_tag = 0) {
  GridImage img{width, height, std::move(pixels), resolution_tag > 0 ? resolution_tag : width};
  img.validate();
  return img;
}

inline DiscreteMeasure from_grid(const GridImage& img, bool normalize) {
  img.validate();
  auto ground = std::make_shared<const PointSet>(PointSet::grid(img.width, img.height));
  std::vector<Atom> atoms;
  Units total = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    if (img.pixels[i] > 0) {
      atoms.push_back({i, img.pixels[i]});
      if (__builtin_add_overflow(total, img.pixels[i], &total)) {
        throw InputError("image intensity sum overflows 64-bit units");
      }
    }
  }
  if (normalize && total == 0) throw InputError("empty measure");
  Rational scale = normalize ? Rational(1, total) : Rational(1);
  return DiscreteMeasure(std::move(ground), std::move(atoms), scale);
}

inline GridImage pad(const GridImage& img, int margin) {
  img.validate();
  if (margin < 0) throw InputError("padding margin must be nonnegative");
  GridImage out;
  out.width = img.width + 2 * margin;
  out.height = img.height + 2 * margin;
  out.resolution_tag = img.resolution_tag;
  out.pixels.assign(static_cast<std::size_t>(out.width) * out.height, 0);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      out.pixels[static_cast<std::size_t>(r + margin) * out.width + (c + margin)] = img.at(r, c);
    }
  }
  return out;
}

// Constant cap f = theta * max(mu) on every ground point, zero-mass points
// included.  Throws InfeasibleError when |f| < 1.
inline DiscreteMeasure cap_from_theta(const DiscreteMeasure& mu, const Rational& theta) {
  if (theta <= 0 || theta >= 1) throw InputError("theta must lie strictly between 0 and 1");
  if (!mu.is_probability()) throw InputError("cap construction needs a probability measure");
  Units peak = 0;
  for (const auto& a : mu.atoms()) peak = std::max(peak, a.units);
  // f_x = (p/q) * peak * s  ==  (p * peak) units of s / q.
  BigInt per_point = boost::multiprecision::numerator(theta) * peak;
  Rational scale = mu.unit_scale() / Rational(boost::multiprecision::denominator(theta));
  std::vector<Units> units(mu.ground().size(), exact::to_int64(per_point, "cap units"));
  DiscreteMeasure f = DiscreteMeasure::dense(mu.ground_ptr(), units, scale);
  if (f.total_mass() < 1) throw InfeasibleError("cap too tight: no probability measure fits in K_f");
  return f;
}

enum class Side { source, target };

// Unmet marginal mu - (row sums of eta) or nu - (column sums of eta), in the
// common unit of mu and eta.
inline DiscreteMeasure residual(const DiscreteMeasure& mu, const NearbyFlow& eta, Side side) {
  Rational unit = common_unit(mu.unit_scale(), eta.unit_scale);
  DiscreteMeasure m = mu.in_units_of(unit);
  Rational ratio = eta.unit_scale / unit;
  Units eta_factor = exact::to_int64(boost::multiprecision::numerator(ratio), "flow unit ratio");
  std::vector<Units> left = m.dense_units();
  for (const auto& e : eta.edges) {
    std::size_t idx = side == Side::source ? e.source : e.target;
    if (idx >= left.size()) throw InputError("flow edge outside the point set");
    left[idx] -= e.units * eta_factor;
    if (left[idx] < 0) throw InputError("flow exceeds marginal");
  }
  return DiscreteMeasure::dense(m.ground_ptr(), left, unit);
}

}  // namespace otclimb
