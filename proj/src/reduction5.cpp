#include "conjury/reduction5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conjury/ode.hpp"
#include "conjury/smooth.hpp"

namespace conjury::r5 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(1 + e^a) without overflow.
double softplus(double a) { return a > 30.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

}  // namespace

const char* sign_name(Sign s) { return s == Sign::Plus ? "+" : "-"; }

const char* profile_name(ProfileKind k) { return k == ProfileKind::Standard ? "standard" : "steep"; }

ProfileKind parse_profile(const std::string& s) {
  if (s == "standard") return ProfileKind::Standard;
  if (s == "steep") return ProfileKind::Steep;
  throw ValidationError("unknown flow profile: " + s);
}

double FlowProfile::lambda_nu(double nu) const {
  const double b = smooth::open_bump(nu);
  return kind == ProfileKind::Standard ? b : b * b;
}

double FlowProfile::lambda_t(double t) const { return smooth::open_bump(t); }

Diffeo5 Diffeo5::build_R(const GraphCode& g, const g5::VertexPlacement& placement, ProfileKind profile) {
  if (static_cast<int>(g.order()) != placement.count) {
    throw ValidationError("build_R: graph order does not match the placement");
  }
  Diffeo5 f;
  f.placement_ = placement;
  f.graph_ = g;
  f.profile_.kind = profile;
  double c = kInf;
  for (int a = 1; a <= placement.count; ++a)
    for (int b = a + 1; b <= placement.count; ++b) {
      const Vec5 mid = 0.5 * (placement.vertex(a) + placement.vertex(b));
      c = std::min(c, f.needle_distance(mid));
    }
  f.collar_ = 0.5 * c;
  return f;
}

Sign Diffeo5::sign(int a, int b) const {
  if (a == b) throw ValidationError("sign: vertices must differ");
  return graph_.edge(a, b) ? Sign::Plus : Sign::Minus;
}

g5::Cigar Diffeo5::cigar(int a, int b) const {
  return g5::Cigar(placement_.vertex(a), placement_.vertex(b), placement_.eps_dyn(a, b));
}

double Diffeo5::needle_distance(const Vec5& z) const {
  double d = kInf;
  for (int n = 1; n <= placement_.count; ++n)
    d = std::min(d, g5::point_segment_distance(z, placement_.r, placement_.vertex(n)));
  return d;
}

double Diffeo5::theta(const Vec5& z) const { return smooth::flat_step(needle_distance(z) / collar_); }

double Diffeo5::log_theta(const Vec5& z) const {
  const double y = needle_distance(z) / collar_;
  if (y >= 1.0) return 0.0;
  if (y <= 0.0) return -kInf;
  // log(f0 / (f0 + f1)) with f0 = e^{-1/y}, f1 = e^{-1/(1-y)}.
  return -softplus(1.0 / y - 1.0 / (1.0 - y));
}

std::optional<CigarPoint> Diffeo5::locate(const Vec5& z) const {
  const int V = placement_.count;
  for (int a = 1; a <= V; ++a)
    for (int b = a + 1; b <= V; ++b) {
      const double eps = placement_.eps_dyn(a, b);
      if (g5::point_segment_distance(z, placement_.vertex(a), placement_.vertex(b)) >= 0.5 * eps) continue;
      const g5::Cigar c = cigar(a, b);
      const double t = c.param(z);
      if (!(std::abs(t) < 1.0)) continue;
      const Vec5 n = c.normal(z);
      const double rho = n.norm();
      double nu = rho / (eps * g5::psi(t));
      if (!(nu < 1.0)) continue;
      // Below roundoff of the centerline reconstruction the point is on it.
      if (nu < 1e-12 || rho <= 16.0 * std::numeric_limits<double>::epsilon() * z.lpNorm<Eigen::Infinity>()) nu = 0.0;
      CigarPoint out;
      out.a = a;
      out.b = b;
      out.t = t;
      out.nu = nu;
      out.e = nu > 0.0 ? Vec5(n / rho) : Vec5(Vec5::Zero());
      return out;
    }
  return std::nullopt;
}

Vec5 Diffeo5::point(const CigarPoint& c) const { return cigar(c.a, c.b).point(c.t, c.nu, c.e); }

double Diffeo5::rate(int a, int b, double t, double nu, const Vec5& e) const {
  const double lam = profile_.lambda(nu, t);
  if (lam == 0.0) return 0.0;
  return theta(cigar(a, b).point(t, nu, e)) * lam;
}

Vec5 Diffeo5::flow(const Vec5& p, double tau, double tol) const {
  if (!(tol >= 1e-13 && tol <= 1e-4)) throw ValidationError("eval tolerance out of range");
  const auto loc = locate(p);
  if (!loc || loc->nu == 0.0 || tau == 0.0) return p;
  const double s = sign(loc->a, loc->b) == Sign::Plus ? -1.0 : 1.0;
  const g5::Cigar c = cigar(loc->a, loc->b);
  const Vec5 base = c.gamma(loc->t);
  const double radial = c.eps() * g5::psi(loc->t);
  const double lt = profile_.lambda_t(loc->t);
  if (lt == 0.0) return p;
  auto field = [&](double y) {
    const double nu = std::exp(y);
    if (nu >= 1.0) return 0.0;
    const double lam = profile_.lambda_nu(nu) * lt;
    if (lam == 0.0) return 0.0;
    return s * theta(base + nu * radial * loc->e) * lam;
  };
  ode::Options opt;
  opt.tol = tol;
  const double y = ode::integrate(field, std::log(loc->nu), tau, opt, ode::abs_norm);
  const double nu = std::exp(y);
  return base + nu * radial * loc->e;
}

Vec5 Diffeo5::eval(const Vec5& p, double tol) const { return flow(p, 1.0, tol); }

const char* orbit_class_name(OrbitClass c) {
  switch (c) {
    case OrbitClass::Fixed: return "fixed";
    case OrbitClass::ToCenterline: return "to_centerline";
    case OrbitClass::ToBoundary: return "to_boundary";
    case OrbitClass::Undecided: return "undecided";
  }
  return "undecided";
}

OrbitClass orbit_class(const Diffeo5& f, const Vec5& p, int max_iter) {
  if (max_iter < 1 || max_iter > 100000) throw ValidationError("orbit_class: max_iter out of range");
  const auto loc = f.locate(p);
  const Vec5 q1 = f.eval(p);
  if (!loc || loc->nu == 0.0 || q1 == p) return OrbitClass::Fixed;
  const g5::Cigar c = f.cigar(loc->a, loc->b);
  const double rho0 = c.normal(p).norm();
  const double room = (c.eps() * g5::psi(loc->t) - rho0) / rho0;
  const double thr = std::min(1e-3, 0.5 * room);
  double prev = rho0;
  int trend = 0;
  Vec5 q = p;
  for (int k = 0; k < max_iter; ++k) {
    q = k == 0 ? q1 : f.eval(q);
    const double rho = c.normal(q).norm();
    const int dir = rho < prev ? -1 : rho > prev ? 1 : 0;
    if (dir == 0) return OrbitClass::Undecided;
    if (trend != 0 && dir != trend) return OrbitClass::Undecided;
    trend = dir;
    prev = rho;
    if (rho < rho0 * (1.0 - thr)) return OrbitClass::ToCenterline;
    if (rho > rho0 * (1.0 + thr)) return OrbitClass::ToBoundary;
  }
  return OrbitClass::Undecided;
}

GraphCode edge_detect(const Diffeo5& f, double tol) {
  const int V = f.placement().count;
  GraphCode g(static_cast<std::size_t>(V));
  const Vec5 e = g5::in_e2(1.0, 0.0);
  for (int a = 1; a <= V; ++a)
    for (int b = a + 1; b <= V; ++b) {
      const g5::Cigar c = f.cigar(a, b);
      const Vec5 p = c.point(0.0, 0.5, e);
      const Vec5 q = f.eval(p, tol);
      // Sizes are far below tol in absolute terms; compare relative radii.
      const double rel = (c.normal(q).norm() - c.normal(p).norm()) / c.normal(p).norm();
      if (std::abs(rel) < 10.0 * tol) {
        throw ConstructionError("edge_detect: ambiguous displacement on pair " + std::to_string(a) + "," +
                                std::to_string(b));
      }
      g.set_edge(a, b, rel < 0.0);
    }
  return g;
}

std::vector<DecayRow5> displacement_decay(const Diffeo5& f, const Vec5& center, const std::vector<int>& orders,
                                          const std::vector<double>& scales) {
  const int V = f.placement().count;
  const double smax = *std::max_element(scales.begin(), scales.end());
  std::vector<std::pair<double, double>> samples;  // distance to center, displacement
  std::vector<Vec5> dirs;
  for (int i = 0; i < 4; ++i) dirs.push_back(g5::in_e2(std::cos(i * 1.5707963267948966 + 0.3), std::sin(i * 1.5707963267948966 + 0.3)));
  for (int a = 1; a <= V; ++a)
    for (int b = a + 1; b <= V; ++b) {
      const g5::Cigar c = f.cigar(a, b);
      if (g5::point_segment_distance(center, c.x(), c.y()) > smax + c.eps()) continue;
      std::vector<double> ts;
      for (int i = 0; i <= 200; ++i) {
        const double gap = std::pow(10.0, -12.0 + 12.0 * i / 200.0);
        ts.push_back(-1.0 + gap);
        ts.push_back(1.0 - gap);
      }
      for (double t : ts) {
        if (!(std::abs(t) < 1.0)) continue;
        for (double nu : {0.25, 0.5, 0.75})
          for (const auto& e : dirs) {
            const Vec5 z = c.point(t, nu, e);
            const double dist = (z - center).norm();
            if (dist > smax) continue;
            samples.emplace_back(dist, (f.eval(z) - z).norm());
          }
      }
    }
  std::vector<DecayRow5> rows;
  for (int k : orders) {
    DecayRow5 row;
    row.order = k;
    row.scales = scales;
    for (double s : scales) {
      double sup = 0.0;
      for (const auto& [d, disp] : samples)
        if (d <= s) sup = std::max(sup, disp);
      row.ratios.push_back(sup / std::pow(s, k));
    }
    row.non_increasing = true;
    for (std::size_t i = 1; i < row.ratios.size(); ++i)
      if (row.ratios[i] > row.ratios[i - 1] * (1.0 + 1e-12)) row.non_increasing = false;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace conjury::r5
