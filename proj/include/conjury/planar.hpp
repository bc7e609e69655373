#pragma once

// Planar reduction: binary codes -> compactly supported diffeomorphisms of
// the plane built from rotation actuators on four families of discs that
// accumulate at two points a and b.

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "conjury/codes.hpp"

namespace conjury::planar {

using Point = Eigen::Vector2d;

enum class Family : std::uint8_t { CA, CB, ZA, ZB };

std::string family_name(Family f);
Family parse_family(const std::string& name);

/// Disc identifier: family plus layout index n >= 2.
struct RegionId {
  Family family = Family::CA;
  int n = 2;
  std::string str() const;
  static RegionId parse(const std::string& text);
  friend bool operator==(const RegionId&, const RegionId&) = default;
};

struct LayoutEntry {
  int n = 2;
  Point c_a, c_b, z_a, z_b;
  double radius = 0.0;   // n^-10
  std::int64_t m = 0;    // smallest odd integer > e^n
};

/// Smallest odd integer strictly greater than e^n.
std::int64_t rotation_order(int n);

/// Largest supported depth; m(n) must stay exactly representable and the
/// disc radii well above double resolution.
inline constexpr std::size_t kMaxDepth = 12;

class PlanarLayout {
 public:
  PlanarLayout() = default;

  /// Deterministic layout for n = 2..depth+1. depth == 0 gives an empty layout.
  static PlanarLayout build(std::size_t depth);

  std::size_t depth() const { return entries_.size(); }
  const Point& a() const { return a_; }
  const Point& b() const { return b_; }
  const std::vector<LayoutEntry>& entries() const { return entries_; }
  const LayoutEntry& entry(int n) const;
  Point center(const RegionId& id) const;
  /// Angular offset used for the four families; halved on disjointness failure.
  double angle_scale() const { return angle_scale_; }

  /// Pairwise disjointness of all 4*depth closed discs and avoidance of a, b.
  bool verify_disjoint() const;

 private:
  Point a_{0.0, 0.0};
  Point b_{0.5, 0.0};
  double angle_scale_ = 1.0;
  std::vector<LayoutEntry> entries_;
};

/// Rotation actuator psi(c, r, q): rotates by 2*pi*q*plateau(|p-c|/r) about c.
struct Actuator {
  RegionId id;
  Point center;
  double radius = 0.0;
  /// Rotation fraction as an exact rational numerator/denominator.
  std::int64_t numerator = 1;
  std::int64_t denominator = 1;

  double fraction() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  bool contains(const Point& p) const { return (p - center).norm() <= radius; }
  /// Applies the actuator to an offset from the center.
  Point apply_local(const Point& offset, bool inverse = false) const;
  /// Minimal period of points in the inner quarter-radius disc.
  std::int64_t inner_period() const;
};

class PlanarDiffeo {
 public:
  PlanarDiffeo() = default;
  PlanarDiffeo(PlanarLayout layout, BinaryCode code, std::vector<Actuator> actuators);

  const PlanarLayout& layout() const { return layout_; }
  const BinaryCode& code() const { return code_; }
  const std::vector<Actuator>& actuators() const { return actuators_; }
  const Actuator* actuator_at(const Point& p) const;
  const Actuator& actuator(const RegionId& id) const;

  Point eval(const Point& p) const;
  Point eval_inverse(const Point& p) const;

 private:
  PlanarLayout layout_;
  BinaryCode code_;
  std::vector<Actuator> actuators_;
};

/// Populates the actuator table: c_a gets q/8, c_b gets q/16, and the z pair
/// gets {q, q/2} with the assignment swapped when bit w_{n-1} is 1.
PlanarDiffeo build(const PlanarLayout& layout, const BinaryCode& code);

struct RegionPeriod {
  RegionId region;
  std::int64_t minimal_period = 0;
  friend bool operator==(const RegionPeriod&, const RegionPeriod&) = default;
};

/// One record per disc, ordered by n then family (c_a, c_b, z_a, z_b). The
/// analytic period of every disc is cross-checked by iterating eval on one
/// inner sample point; a mismatch raises ConstructionError.
std::vector<RegionPeriod> period_spectrum(const PlanarDiffeo& f);

/// Inverse of period_spectrum(build(layout, .)).
BinaryCode recover_code(const std::vector<RegionPeriod>& spectrum, const PlanarLayout& layout);

/// Piecewise conjugacy: identity except for isometric swaps of the z discs
/// at every index where the two codes disagree.
class PlanarHomeo {
 public:
  PlanarHomeo() = default;
  PlanarHomeo(PlanarLayout layout, std::vector<int> swapped);

  Point eval(const Point& p) const;
  const std::vector<int>& swapped_indices() const { return swapped_; }
  bool is_identity() const { return swapped_.empty(); }

 private:
  PlanarLayout layout_;
  std::vector<int> swapped_;
};

PlanarHomeo build_conjugacy(const BinaryCode& c1, const BinaryCode& c2, const PlanarLayout& layout);

struct DecayRow {
  int order = 0;
  std::vector<double> scales;
  std::vector<double> ratios;
  bool non_increasing = false;
};

struct DecayReport {
  Point center;
  std::vector<DecayRow> rows;
  bool flat = false;
};

/// Probes sup |f(x) - x| / s^k over sample points inside actuator discs
/// within distance s of center, for s = 1e-1 ... 1e-6. A row passes when the
/// ratio does not increase as the scale shrinks.
DecayReport smoothness_probe(const PlanarDiffeo& f, const Point& center, const std::vector<int>& orders);

}  // namespace conjury::planar
