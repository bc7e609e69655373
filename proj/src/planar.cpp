#include "conjury/planar.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

#include "conjury/smooth.hpp"

namespace conjury::planar {
namespace {

constexpr double kPi = std::numbers::pi;

Point on_ray(const Point& base, double dist, double angle) {
  return base + dist * Point(std::cos(angle), std::sin(angle));
}

// Iterates the actuator in local coordinates from a point at radius r/8 and
// returns the first return time, or 0 if none occurs within `limit` steps.
std::int64_t iterate_return(const Actuator& act, std::int64_t limit) {
  const Point start(act.radius / 8.0, 0.0);
  const double scale = start.norm();
  // Closest non-trivial approach of a rational rotation with denominator P
  // is 2 rho sin(pi/P); stay well below that.
  const double tol = std::min(1e-7, 0.25 * kPi / static_cast<double>(limit)) * scale;
  Point p = start;
  for (std::int64_t k = 1; k <= limit; ++k) {
    p = act.apply_local(p);
    if ((p - start).norm() < tol) return k;
  }
  return 0;
}

std::int64_t cached_cross_check(const Actuator& act) {
  static std::mutex mu;
  static std::map<std::pair<int, std::int64_t>, std::int64_t> cache;
  const auto key = std::make_pair(act.id.n, act.denominator / act.numerator);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const std::int64_t found = iterate_return(act, act.inner_period());
  std::lock_guard lock(mu);
  cache[key] = found;
  return found;
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::CA: return "c_a";
    case Family::CB: return "c_b";
    case Family::ZA: return "z_a";
    case Family::ZB: return "z_b";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "c_a") return Family::CA;
  if (name == "c_b") return Family::CB;
  if (name == "z_a") return Family::ZA;
  if (name == "z_b") return Family::ZB;
  throw ValidationError("unknown disc family '" + name + "'");
}

std::string RegionId::str() const { return family_name(family) + "(" + std::to_string(n) + ")"; }

RegionId RegionId::parse(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') {
    throw ValidationError("malformed region id '" + text + "'");
  }
  RegionId id;
  id.family = parse_family(text.substr(0, open));
  try {
    id.n = std::stoi(text.substr(open + 1, text.size() - open - 2));
  } catch (const std::exception&) {
    throw ValidationError("malformed region index in '" + text + "'");
  }
  if (id.n < 2) throw ValidationError("region index must be >= 2");
  return id;
}

std::int64_t rotation_order(int n) {
  if (n < 1 || n > 40) throw ValidationError("rotation_order: n out of range");
  const double e = std::exp(static_cast<double>(n));
  auto m = static_cast<std::int64_t>(std::floor(e)) + 1;
  if (m % 2 == 0) ++m;
  return m;
}

PlanarLayout PlanarLayout::build(std::size_t depth) {
  if (depth > kMaxDepth) {
    throw ValidationError("planar depth exceeds supported maximum " + std::to_string(kMaxDepth));
  }
  PlanarLayout out;
  // c-discs above the axis through a and b, z-discs below; each family sits
  // on rays tilted by scale * 2^-n from the vertical.
  for (double scale = 1.0; scale > 1e-6; scale *= 0.5) {
    out.angle_scale_ = scale;
    out.entries_.clear();
    for (std::size_t i = 0; i < depth; ++i) {
      const int n = static_cast<int>(i) + 2;
      const double n4 = std::pow(static_cast<double>(n), 4);
      const double tilt = scale * std::ldexp(1.0, -n);
      LayoutEntry e;
      e.n = n;
      e.c_a = on_ray(out.a_, 1.0 / n4, 0.5 * kPi + tilt);
      e.z_a = on_ray(out.a_, 0.5 / n4, -0.5 * kPi - tilt);
      e.c_b = on_ray(out.b_, 1.0 / n4, 0.5 * kPi - tilt);
      e.z_b = on_ray(out.b_, 0.5 / n4, -0.5 * kPi + tilt);
      e.radius = std::pow(static_cast<double>(n), -10);
      e.m = rotation_order(n);
      out.entries_.push_back(e);
    }
    if (out.verify_disjoint()) return out;
  }
  throw ConstructionError("planar layout: disc disjointness could not be established");
}

const LayoutEntry& PlanarLayout::entry(int n) const {
  if (n < 2 || static_cast<std::size_t>(n - 2) >= entries_.size()) {
    throw ValidationError("layout index out of range");
  }
  return entries_[static_cast<std::size_t>(n - 2)];
}

Point PlanarLayout::center(const RegionId& id) const {
  const auto& e = entry(id.n);
  switch (id.family) {
    case Family::CA: return e.c_a;
    case Family::CB: return e.c_b;
    case Family::ZA: return e.z_a;
    case Family::ZB: return e.z_b;
  }
  return e.c_a;
}

bool PlanarLayout::verify_disjoint() const {
  struct Disc {
    Point c;
    double r;
  };
  std::vector<Disc> discs;
  for (const auto& e : entries_) {
    for (const Point& c : {e.c_a, e.c_b, e.z_a, e.z_b}) discs.push_back({c, e.radius});
  }
  for (std::size_t i = 0; i < discs.size(); ++i) {
    if ((discs[i].c - a_).norm() <= discs[i].r || (discs[i].c - b_).norm() <= discs[i].r) return false;
    for (std::size_t j = i + 1; j < discs.size(); ++j) {
      if ((discs[i].c - discs[j].c).norm() <= discs[i].r + discs[j].r) return false;
    }
  }
  return true;
}

Point Actuator::apply_local(const Point& offset, bool inverse) const {
  const double rho = offset.norm();
  if (rho >= radius || rho == 0.0) return offset;
  const double phi = smooth::plateau(rho / radius);
  if (phi == 0.0) return offset;
  double angle = 2.0 * kPi * fraction() * phi;
  if (inverse) angle = -angle;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * offset.x() - s * offset.y(), s * offset.x() + c * offset.y()};
}

std::int64_t Actuator::inner_period() const {
  const std::int64_t g = std::gcd(numerator, denominator);
  return denominator / g;
}

PlanarDiffeo::PlanarDiffeo(PlanarLayout layout, BinaryCode code, std::vector<Actuator> actuators)
    : layout_(std::move(layout)), code_(std::move(code)), actuators_(std::move(actuators)) {}

const Actuator* PlanarDiffeo::actuator_at(const Point& p) const {
  // All discs lie within 1/16 + r of a or b.
  if ((p - layout_.a()).norm() > 0.07 && (p - layout_.b()).norm() > 0.07) return nullptr;
  for (const auto& act : actuators_) {
    if ((p - act.center).norm() < act.radius) return &act;
  }
  return nullptr;
}

const Actuator& PlanarDiffeo::actuator(const RegionId& id) const {
  for (const auto& act : actuators_) {
    if (act.id == id) return act;
  }
  throw ValidationError("no actuator for region " + id.str());
}

Point PlanarDiffeo::eval(const Point& p) const {
  const Actuator* act = actuator_at(p);
  if (act == nullptr) return p;
  return act->center + act->apply_local(p - act->center);
}

Point PlanarDiffeo::eval_inverse(const Point& p) const {
  const Actuator* act = actuator_at(p);
  if (act == nullptr) return p;
  return act->center + act->apply_local(p - act->center, true);
}

PlanarDiffeo build(const PlanarLayout& layout, const BinaryCode& code) {
  if (layout.depth() != code.depth()) throw ValidationError("build: layout depth differs from code depth");
  std::vector<Actuator> acts;
  acts.reserve(4 * layout.depth());
  for (const auto& e : layout.entries()) {
    const bool flipped = code.bit(static_cast<std::size_t>(e.n - 1)) == 1;
    auto make = [&](Family fam, const Point& c, std::int64_t mult) {
      Actuator a;
      a.id = {fam, e.n};
      a.center = c;
      a.radius = e.radius;
      a.numerator = 1;
      a.denominator = mult * e.m;
      return a;
    };
    acts.push_back(make(Family::CA, e.c_a, 8));
    acts.push_back(make(Family::CB, e.c_b, 16));
    acts.push_back(make(Family::ZA, e.z_a, flipped ? 2 : 1));
    acts.push_back(make(Family::ZB, e.z_b, flipped ? 1 : 2));
  }
  return PlanarDiffeo(layout, code, std::move(acts));
}

std::vector<RegionPeriod> period_spectrum(const PlanarDiffeo& f) {
  std::vector<RegionPeriod> out;
  out.reserve(f.actuators().size());
  for (const auto& act : f.actuators()) {
    const std::int64_t analytic = act.inner_period();
    const std::int64_t observed = cached_cross_check(act);
    if (observed != analytic) {
      throw ConstructionError("period cross-check failed on " + act.id.str() + ": analytic " +
                              std::to_string(analytic) + ", iterated " + std::to_string(observed));
    }
    out.push_back({act.id, analytic});
  }
  return out;
}

BinaryCode recover_code(const std::vector<RegionPeriod>& spectrum, const PlanarLayout& layout) {
  if (spectrum.size() != 4 * layout.depth()) {
    throw ValidationError("recover_code: spectrum incomplete for layout");
  }
  std::map<std::pair<int, Family>, std::int64_t> table;
  for (const auto& rec : spectrum) {
    if (!table.emplace(std::make_pair(rec.region.n, rec.region.family), rec.minimal_period).second) {
      throw ValidationError("recover_code: duplicate record " + rec.region.str());
    }
  }
  std::vector<std::uint8_t> bits(layout.depth());
  for (const auto& e : layout.entries()) {
    auto get = [&](Family fam) {
      auto it = table.find({e.n, fam});
      if (it == table.end()) {
        throw ValidationError("recover_code: missing record " + RegionId{fam, e.n}.str());
      }
      return it->second;
    };
    if (get(Family::CA) != 8 * e.m || get(Family::CB) != 16 * e.m) {
      throw ConstructionError("recover_code: c-disc periods inconsistent at n=" + std::to_string(e.n));
    }
    const auto za = get(Family::ZA);
    const auto zb = get(Family::ZB);
    if (za == e.m && zb == 2 * e.m) {
      bits[static_cast<std::size_t>(e.n - 2)] = 0;
    } else if (za == 2 * e.m && zb == e.m) {
      bits[static_cast<std::size_t>(e.n - 2)] = 1;
    } else {
      throw ConstructionError("recover_code: z-disc periods inconsistent at n=" + std::to_string(e.n));
    }
  }
  return BinaryCode(std::move(bits));
}

PlanarHomeo::PlanarHomeo(PlanarLayout layout, std::vector<int> swapped)
    : layout_(std::move(layout)), swapped_(std::move(swapped)) {}

Point PlanarHomeo::eval(const Point& p) const {
  for (int n : swapped_) {
    const auto& e = layout_.entry(n);
    if ((p - e.z_a).norm() <= e.radius) return p - e.z_a + e.z_b;
    if ((p - e.z_b).norm() <= e.radius) return p - e.z_b + e.z_a;
  }
  return p;
}

PlanarHomeo build_conjugacy(const BinaryCode& c1, const BinaryCode& c2, const PlanarLayout& layout) {
  if (c1.depth() != c2.depth()) throw ValidationError("build_conjugacy: depth mismatch");
  if (c1.depth() != layout.depth()) throw ValidationError("build_conjugacy: layout depth mismatch");
  std::vector<int> swapped;
  for (std::size_t i = 1; i <= c1.depth(); ++i) {
    if (c1.bit(i) != c2.bit(i)) swapped.push_back(static_cast<int>(i) + 1);
  }
  return PlanarHomeo(layout, std::move(swapped));
}

DecayReport smoothness_probe(const PlanarDiffeo& f, const Point& center, const std::vector<int>& orders) {
  constexpr int kRadial = 24;
  constexpr int kAngular = 32;
  const std::vector<double> scales = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

  // Sample points inside every actuator disc; identity regions carry no
  // information about flatness.
  struct Sample {
    double dist;
    double disp;
  };
  std::vector<Sample> samples;
  for (const auto& act : f.actuators()) {
    for (int i = 1; i <= kRadial; ++i) {
      const double rho = act.radius * static_cast<double>(i) / (kRadial + 1);
      for (int j = 0; j < kAngular; ++j) {
        const double th = 2.0 * kPi * j / kAngular;
        const Point off(rho * std::cos(th), rho * std::sin(th));
        const Point x = act.center + off;
        samples.push_back({(x - center).norm(), (act.apply_local(off) - off).norm()});
      }
    }
  }
  // Include the center itself when it lies in a disc.
  if (const Actuator* act = f.actuator_at(center)) {
    const Point off = center - act->center;
    samples.push_back({0.0, (act->apply_local(off) - off).norm()});
  }

  std::vector<double> sup(scales.size(), 0.0);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    for (const auto& s : samples) {
      if (s.dist <= scales[i]) sup[i] = std::max(sup[i], s.disp);
    }
  }

  DecayReport report;
  report.center = center;
  report.flat = true;
  for (int k : orders) {
    if (k < 0) throw ValidationError("smoothness_probe: orders must be non-negative");
    DecayRow row;
    row.order = k;
    row.scales = scales;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      row.ratios.push_back(sup[i] / std::pow(scales[i], k));
    }
    row.non_increasing = true;
    for (std::size_t i = 1; i < row.ratios.size(); ++i) {
      if (row.ratios[i] > row.ratios[i - 1] * (1.0 + 1e-12)) row.non_increasing = false;
    }
    report.flat = report.flat && row.non_increasing;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace conjury::planar
