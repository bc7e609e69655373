#include "conjury/geometry5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

namespace conjury::g5 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

Vec5 any_orthogonal(const Vec5& u) {
  Vec5 best = Vec5::Zero();
  double best_norm = -1.0;
  for (int i = 0; i < 5; ++i) {
    Vec5 e = Vec5::Unit(i);
    Vec5 r = e - e.dot(u) * u;
    if (r.norm() > best_norm) {
      best_norm = r.norm();
      best = r;
    }
  }
  return best.normalized();
}

}  // namespace

Vec5 in_e3(double a, double b, double c) {
  Vec5 v = Vec5::Zero();
  v << a, b, c, 0.0, 0.0;
  return v;
}

Vec5 in_e2(double a, double b) {
  Vec5 v = Vec5::Zero();
  v << 0.0, 0.0, 0.0, a, b;
  return v;
}

// ---------------------------------------------------------------------------

Cigar::Cigar(const Vec5& x, const Vec5& y, double eps) : x_(x), y_(y), eps_(eps) {
  const double len = (y - x).norm();
  if (!(len > 0.0)) throw ValidationError("cigar endpoints coincide");
  if (!(eps > 0.0)) throw ValidationError("cigar size must be positive");
  half_ = 0.5 * len;
  axis_ = (y - x) / len;
}

Vec5 Cigar::normal(const Vec5& z) const {
  Vec5 v = z - center();
  return v - v.dot(axis_) * axis_;
}

double Cigar::gauge(const Vec5& z) const {
  const double t = param(z);
  if (!(std::abs(t) < 1.0)) return kInf;
  return normal(z).norm() / (eps_ * psi(t));
}

std::optional<double> Cigar::pos(const Vec5& z) const {
  if (gauge(z) < 1.0) return param(z);
  return std::nullopt;
}

double Cigar::line_argmin(const Vec5& z, const Vec5& w, double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  const Vec5 n0 = normal(z);
  const double t0 = param(z);
  const double kappa = w.dot(axis_) / half_;
  const Vec5 wperp = w - w.dot(axis_) * axis_;
  auto slope = [&](double s) {
    const Vec5 n = n0 - s * wperp;
    const double r = n.norm();
    const double radial = r > 0.0 ? -n.dot(wperp) / r : 0.0;
    return radial - eps_ * (t0 - kappa * s) * kappa;
  };
  double flo = slope(lo), fhi = slope(hi);
  if (flo >= 0.0) return lo;
  if (fhi <= 0.0) return hi;
  // Illinois false position on the monotone slope, bisecting every fourth step.
  int side = 0;
  for (int it = 0; it < 300 && hi - lo > 1e-17 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    double mid = it % 4 == 3 ? 0.5 * (lo + hi) : (lo * fhi - hi * flo) / (fhi - flo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double fm = slope(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) {
      lo = mid;
      flo = fm;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      fhi = fm;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (lo + hi);
}

AffineField make_affine_field(const Vec5& x, const Vec5& y, const Vec5& w) {
  const double wn = w.norm();
  if (!(wn > 0.0)) throw ValidationError("affine field direction must be nonzero");
  const Vec5 what = w / wn;
  const Vec5 u = (y - x) - (y - x).dot(what) * what;
  if (u.norm() <= 1e-12 * (y - x).norm()) throw ValidationError("affine field: y - x is parallel to w");
  AffineField f;
  f.anchor = x;
  f.a = u / u.dot(y - x);
  f.w = w;
  if (std::abs(f.a.dot(w)) > 1e-12 * f.a.norm() * wn) throw ValidationError("affine field: ell(w) != 0");
  return f;
}

Vec5 affine_flow(const AffineField& field, const Vec5& z, double t) { return z + t * field.ell(z) * field.w; }

// ---------------------------------------------------------------------------

double angle_between(const Vec5& u, const Vec5& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const Vec5 a = u / nu;
  const Vec5 b = v / nv;
  const double c = a.dot(b);
  return std::atan2((a - c * b).norm(), c);
}

double point_segment_distance(const Vec5& p, const Vec5& a, const Vec5& b) {
  const Vec5 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

ClosestPair triangle_distance(const Triangle& A, const Triangle& B) {
  ClosestPair best;
  best.distance = kInf;
  for (int fa = 1; fa < 8; ++fa) {
    for (int fb = 1; fb < 8; ++fb) {
      std::vector<int> ia, ib;
      for (int i = 0; i < 3; ++i) {
        if (fa & (1 << i)) ia.push_back(i);
        if (fb & (1 << i)) ib.push_back(i);
      }
      const int ka = static_cast<int>(ia.size()) - 1;
      const int kb = static_cast<int>(ib.size()) - 1;
      Eigen::MatrixXd M(5, ka + kb);
      for (int j = 0; j < ka; ++j) M.col(j) = A[ia[j + 1]] - A[ia[0]];
      for (int j = 0; j < kb; ++j) M.col(ka + j) = -(B[ib[j + 1]] - B[ib[0]]);
      const Vec5 rhs = B[ib[0]] - A[ia[0]];
      Eigen::VectorXd c = Eigen::VectorXd::Zero(ka + kb);
      if (ka + kb > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
        qr.setThreshold(1e-12);
        if (qr.rank() < ka + kb) continue;
        c = qr.solve(rhs);
      }
      std::array<double, 3> ba{}, bb{};
      double sa = 0.0, sb = 0.0;
      for (int j = 0; j < ka; ++j) {
        ba[ia[j + 1]] = c(j);
        sa += c(j);
      }
      for (int j = 0; j < kb; ++j) {
        bb[ib[j + 1]] = c(ka + j);
        sb += c(ka + j);
      }
      ba[ia[0]] = 1.0 - sa;
      bb[ib[0]] = 1.0 - sb;
      bool feasible = true;
      for (int i = 0; i < 3; ++i) {
        if (ba[i] < -1e-12 || bb[i] < -1e-12) feasible = false;
      }
      if (!feasible) continue;
      Vec5 p = Vec5::Zero(), q = Vec5::Zero();
      for (int i = 0; i < 3; ++i) {
        ba[i] = std::max(ba[i], 0.0);
        bb[i] = std::max(bb[i], 0.0);
      }
      const double na = ba[0] + ba[1] + ba[2];
      const double nb = bb[0] + bb[1] + bb[2];
      for (int i = 0; i < 3; ++i) {
        ba[i] /= na;
        bb[i] /= nb;
        p += ba[i] * A[i];
        q += bb[i] * B[i];
      }
      const double d = (p - q).norm();
      if (d < best.distance) {
        best.distance = d;
        best.p = p;
        best.q = q;
        best.bary_p = ba;
        best.bary_q = bb;
      }
    }
  }
  return best;
}

double segment_distance(const Vec5& a0, const Vec5& a1, const Vec5& b0, const Vec5& b1) {
  return triangle_distance({a0, a1, a1}, {b0, b1, b1}).distance;
}

Arc make_arc(const Vec5& from, const Vec5& to) {
  Arc arc;
  arc.start = from.normalized();
  Vec5 r = to - to.dot(arc.start) * arc.start;
  if (r.norm() <= 1e-14 * to.norm()) {
    arc.toward = any_orthogonal(arc.start);
    arc.span = 0.0;
    return arc;
  }
  arc.toward = r.normalized();
  arc.span = angle_between(from, to);
  return arc;
}

namespace {

double direction_to_arc(const Vec5& u, const Arc& b) {
  const double x = u.dot(b.start);
  const double y = u.dot(b.toward);
  const double ang = std::atan2(y, x);
  if (b.span > 0.0 && ang >= 0.0 && ang <= b.span) {
    const Vec5 proj = x * b.start + y * b.toward;
    return std::atan2((u - proj).norm(), proj.norm());
  }
  return std::min(angle_between(u, b.start), angle_between(u, b.at(b.span)));
}

}  // namespace

double arc_angle(const Arc& a, const Arc& b) {
  if (a.span == 0.0) return direction_to_arc(a.start, b);
  const int samples = 721;
  std::vector<std::pair<double, double>> vals;
  vals.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const double phi = a.span * i / (samples - 1);
    vals.emplace_back(direction_to_arc(a.at(phi), b), phi);
  }
  std::sort(vals.begin(), vals.end());
  double best = vals.front().first;
  const double h = a.span / (samples - 1);
  for (int c = 0; c < 3; ++c) {
    double lo = std::max(0.0, vals[c].second - h);
    double hi = std::min(a.span, vals[c].second + h);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = direction_to_arc(a.at(x1), b), f2 = direction_to_arc(a.at(x2), b);
    for (int it = 0; it < 80; ++it) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - g * (hi - lo);
        f1 = direction_to_arc(a.at(x1), b);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (hi - lo);
        f2 = direction_to_arc(a.at(x2), b);
      }
    }
    best = std::min({best, f1, f2});
  }
  return best;
}

double cone_angle(const Cone& a, const Cone& b) {
  double best = kInf;
  for (const auto& x : a) {
    for (const auto& y : b) best = std::min(best, arc_angle(x, y));
  }
  return best;
}

Cone tangent_cone(const Triangle& tri, const std::array<double, 3>& bary) {
  constexpr double tol = 1e-9;
  Vec5 p = bary[0] * tri[0] + bary[1] * tri[1] + bary[2] * tri[2];
  const double scale = std::max({(tri[1] - tri[0]).norm(), (tri[2] - tri[0]).norm(), 1e-300});
  // Directions from p to vertices, skipping coincident ones.
  std::vector<Vec5> dirs;
  for (int i = 0; i < 3; ++i) {
    Vec5 v = tri[i] - p;
    if (v.norm() <= 1e-12 * scale) continue;
    bool dup = false;
    for (const auto& d : dirs) {
      if (angle_between(d, v) < 1e-12) dup = true;
    }
    if (!dup) dirs.push_back(v);
  }
  Cone cone;
  int zeros = 0;
  for (double b : bary) zeros += b < tol ? 1 : 0;
  if (dirs.empty()) return cone;
  if (dirs.size() == 1) {
    cone.push_back(make_arc(dirs[0], dirs[0]));
    return cone;
  }
  if (dirs.size() == 2) {
    if (angle_between(dirs[0], dirs[1]) > kPi - 1e-12) {
      // p is interior to a degenerate triangle's edge: two opposite rays.
      cone.push_back(make_arc(dirs[0], dirs[0]));
      cone.push_back(make_arc(dirs[1], dirs[1]));
    } else {
      cone.push_back(make_arc(dirs[0], dirs[1]));
    }
    return cone;
  }
  // Three distinct directions: p is on an edge or in the interior.
  if (zeros == 1) {
    int k = 0;
    for (int i = 0; i < 3; ++i) {
      if (bary[i] < tol) k = i;
    }
    const Vec5 e = tri[(k + 1) % 3] - tri[(k + 2) % 3];
    const Vec5 out = tri[k] - p;
    cone.push_back(make_arc(e, out));
    cone.push_back(make_arc(out, -e));
    return cone;
  }
  const Vec5 e1 = (tri[1] - tri[0]).normalized();
  Vec5 e2 = (tri[2] - tri[0]) - (tri[2] - tri[0]).dot(e1) * e1;
  e2.normalize();
  cone.push_back(make_arc(e1, e2));
  cone.push_back(make_arc(e2, -e1));
  cone.push_back(make_arc(-e1, -e2));
  cone.push_back(make_arc(-e2, e1));
  return cone;
}

namespace {

bool on_pinched_locus(const Piece& pc, const std::array<double, 3>& bary) {
  if (pc.pinched_vertex && bary[0] > 1.0 - 1e-9) return true;
  if (pc.pinched_edge && bary[0] < 1e-9) return true;
  return false;
}

}  // namespace

Separation separate(const Piece& a, const Piece& b) {
  Separation out;
  const ClosestPair cp = triangle_distance(a.tri, b.tri);
  const double dmargin = cp.distance - a.thickness - b.thickness;
  if (dmargin > 0.0) {
    out.ok = true;
    out.margin = dmargin;
    out.mode = "distance";
    return out;
  }
  out.margin = dmargin;
  out.mode = "distance";
  const double scale = std::max((a.tri[1] - a.tri[0]).norm(), (b.tri[1] - b.tri[0]).norm());
  if (cp.distance > 1e-12 * scale) return out;
  if (!on_pinched_locus(a, cp.bary_p) || !on_pinched_locus(b, cp.bary_q)) return out;
  const double ang = cone_angle(tangent_cone(a.tri, cp.bary_p), tangent_cone(b.tri, cp.bary_q));
  const double amargin = ang - a.spread - b.spread;
  if (amargin > 0.0) {
    out.ok = true;
    out.margin = amargin;
    out.mode = "angle";
    return out;
  }
  // Shared pinched edge: compare the two sets in the plane transverse to it.
  if (a.pinched_edge && b.pinched_edge && cp.bary_p[0] < 1e-9 && cp.bary_q[0] < 1e-9) {
    const Vec5 ea = a.tri[2] - a.tri[1];
    const Vec5 eb = b.tri[2] - b.tri[1];
    const bool parallel = ea.norm() > 0.0 && eb.norm() > 0.0 &&
                          (angle_between(ea, eb) < 1e-10 || angle_between(ea, -eb) < 1e-10);
    if (parallel) {
      const Vec5 u = ea.normalized();
      auto transverse = [&](const Vec5& v) { return Vec5(v - v.dot(u) * u); };
      const Vec5 off = transverse(b.tri[1] - a.tri[1]);
      if (off.norm() <= 1e-12 * scale) {
        const Vec5 ra = transverse(a.tri[0] - cp.p);
        const Vec5 rb = transverse(b.tri[0] - cp.p);
        if (ra.norm() > 0.0 && rb.norm() > 0.0) {
          const double dih = angle_between(ra, rb) - a.spread - b.spread;
          out.mode = "dihedral";
          out.margin = dih;
          out.ok = dih > 0.0;
          return out;
        }
      }
    }
  }
  out.mode = "angle";
  out.margin = amargin;
  return out;
}

Piece cigar_piece(const Cigar& c, std::string label) {
  Piece p;
  p.tri = {c.x(), c.y(), c.y()};
  p.thickness = 0.5 * c.eps();
  p.spread = std::asin(std::min(1.0, 2.0 * c.eps() / c.length()));
  p.pinched_vertex = true;
  p.pinched_edge = true;
  p.label = std::move(label);
  return p;
}

// ---------------------------------------------------------------------------

SweptSet::LinePosition SweptSet::locate(const Vec5& z) const {
  LinePosition lp;
  lp.ell = field.ell(z);
  if (lp.ell == 0.0) {
    lp.t = 0.0;
    lp.gauge = cigar.gauge(z);
    return lp;
  }
  const double span = 4.0 * ((z - cigar.center()).norm() + cigar.length()) / field.w.norm();
  const double s = cigar.line_argmin(z, field.w, -span, span);
  lp.t = s / lp.ell;
  lp.gauge = cigar.gauge(z - s * field.w);
  return lp;
}

bool SweptSet::contains(const Vec5& z) const {
  const double ell = field.ell(z);
  if (ell == 0.0) return cigar.contains(z);
  const double s = cigar.line_argmin(z, field.w, (t0 - margin) * ell, (t1 + margin) * ell);
  return cigar.contains(z - s * field.w);
}

double SweptSet::thickness() const {
  const double tau = std::max(std::abs(t0 - margin), std::abs(t1 + margin));
  return 0.5 * cigar.eps() * (1.0 + tau * field.a.norm() * field.w.norm());
}

double SweptSet::spread() const {
  const double tau = std::max(std::abs(t0 - margin), std::abs(t1 + margin));
  const Vec5& e = cigar.axis();
  const Vec5 wperp = field.w - field.w.dot(e) * e;
  const double c = wperp.norm() / field.w.norm();
  const double k = 2.0 * cigar.eps() * (1.0 + tau * field.a.norm() * field.w.norm()) / (cigar.length() * c);
  return std::asin(std::min(1.0, k));
}

std::vector<Piece> SweptSet::pieces(const std::string& label) const {
  std::vector<Piece> out;
  const Vec5& o = field.anchor;
  const double scale = cigar.length();
  const bool anchor_is_end =
      (o - cigar.x()).norm() <= 1e-14 * scale || (o - cigar.y()).norm() <= 1e-14 * scale;
  for (const Vec5* e : {&cigar.x(), &cigar.y()}) {
    const double le = field.ell(*e);
    if (std::abs(le) <= 1e-12) continue;
    Piece p;
    p.tri = {o, *e + (t0 - margin) * le * field.w, *e + (t1 + margin) * le * field.w};
    p.thickness = thickness();
    p.spread = spread();
    p.pinched_vertex = anchor_is_end;
    p.pinched_edge = true;
    p.label = label;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------

const Vec5& VertexPlacement::vertex(int n) const {
  if (n == 0) return r;
  if (n < 1 || n > count) throw ValidationError("vertex index out of range");
  return x[static_cast<std::size_t>(n - 1)];
}

Cigar VertexPlacement::edge_cigar(int m, int n, double size) const { return Cigar(vertex(m), vertex(n), size); }

Cigar VertexPlacement::needle(int n) const { return Cigar(r, vertex(n), needle_size[static_cast<std::size_t>(n - 1)]); }

namespace {

double sine_at(const Vec5& a, const Vec5& b, const Vec5& c) { return std::sin(angle_between(b - a, c - a)); }

double normalized_volume(const Vec5& a, const Vec5& b, const Vec5& c, const Vec5& d) {
  Eigen::Matrix3d M;
  M.col(0) = (b - a).head<3>();
  M.col(1) = (c - a).head<3>();
  M.col(2) = (d - a).head<3>();
  const double denom = M.col(0).norm() * M.col(1).norm() * M.col(2).norm();
  return std::abs(M.determinant()) / denom;
}

// Minimum angle between direction u and directions from r to points of [a, b].
double ray_to_segment_angle(const Vec5& r, const Vec5& u, const Vec5& a, const Vec5& b) {
  return arc_angle(make_arc(u, u), make_arc(a - r, b - r));
}

bool try_place(int count, double margin, int attempt, VertexPlacement& P, std::string& failure) {
  P = VertexPlacement{};
  P.count = count;
  P.attempt = attempt;
  P.r = Vec5::Zero();
  for (int n = 1; n <= count; ++n) {
    const double polar = n == 1 ? 0.6 : 0.75 * std::ldexp(1.0, -n);
    const double azimuth = 0.3 + 0.9 * attempt + 2.399963229728653 * n;
    const double dist = 0.75 * std::ldexp(1.0, -n - 1);
    P.x.push_back(in_e3(dist * std::cos(polar), dist * std::sin(polar) * std::cos(azimuth),
                        dist * std::sin(polar) * std::sin(azimuth)));
  }
  std::vector<Vec5> pts{P.r};
  for (const auto& v : P.x) pts.push_back(v);
  const int np = static_cast<int>(pts.size());
  P.min_collinear = kInf;
  P.min_coplanar = kInf;
  for (int i = 0; i < np; ++i)
    for (int j = i + 1; j < np; ++j)
      for (int k = j + 1; k < np; ++k) {
        P.min_collinear = std::min(P.min_collinear, sine_at(pts[i], pts[j], pts[k]));
        for (int l = k + 1; l < np; ++l)
          P.min_coplanar = std::min(P.min_coplanar, normalized_volume(pts[i], pts[j], pts[k], pts[l]));
      }
  if (np < 3) P.min_collinear = 1.0;
  if (np < 4) P.min_coplanar = 1.0;
  if (P.min_collinear < margin) {
    failure = "no three collinear";
    return false;
  }
  if (P.min_coplanar < margin) {
    failure = "no four coplanar";
    return false;
  }
  auto X = [&](int n) -> const Vec5& { return P.x[static_cast<std::size_t>(n - 1)]; };
  // Angle margins eta_n against segments between other vertices.
  double needle_gap = kInf;
  for (int a = 1; a <= count; ++a)
    for (int b = a + 1; b <= count; ++b) needle_gap = std::min(needle_gap, angle_between(X(a), X(b)));
  P.eta.assign(static_cast<std::size_t>(count), 0.0);
  for (int n = 1; n <= count; ++n) {
    double best = count >= 2 ? needle_gap : 1.0;
    for (int k = 1; k <= count; ++k)
      for (int m = k + 1; m <= count; ++m) {
        if (k == n || m == n) continue;
        best = std::min(best, ray_to_segment_angle(P.r, X(n), X(k), X(m)));
      }
    P.eta[static_cast<std::size_t>(n - 1)] = 0.5 * best;
    if (!(0.5 * best > margin)) {
      failure = "angle margin eta";
      return false;
    }
  }
  // alpha, eps.
  P.alpha = Eigen::MatrixXd::Zero(count, count);
  P.eps = Eigen::MatrixXd::Zero(count, count);
  for (int m = 1; m <= count; ++m)
    for (int n = m + 1; n <= count; ++n) {
      double a = kInf;
      a = std::min(a, angle_between(P.r - X(m), X(n) - X(m)));
      a = std::min(a, angle_between(P.r - X(n), X(m) - X(n)));
      for (int k = 1; k <= count; ++k) {
        if (k == m || k == n) continue;
        a = std::min(a, angle_between(X(k) - X(m), X(n) - X(m)));
        a = std::min(a, angle_between(X(k) - X(n), X(m) - X(n)));
        a = std::min(a, segment_distance(X(m), X(n), P.r, X(k)));
        for (int l = k + 1; l <= count; ++l) {
          if (l == m || l == n) continue;
          a = std::min(a, segment_distance(X(m), X(n), X(k), X(l)));
        }
      }
      if (!(a > margin)) {
        failure = "alpha positive";
        return false;
      }
      P.alpha(m - 1, n - 1) = P.alpha(n - 1, m - 1) = a;
      const double e = std::min(0.001 * a, std::ldexp(1.0, -n - m));
      P.eps(m - 1, n - 1) = P.eps(n - 1, m - 1) = e;
    }
  // rho, needle angles and sizes.
  P.rho.assign(static_cast<std::size_t>(count), 0.0);
  P.needle_angle.assign(static_cast<std::size_t>(count), 0.0);
  P.needle_size.assign(static_cast<std::size_t>(count), 0.0);
  for (int n = 1; n <= count; ++n) {
    double rho = kInf;
    double tilde = kInf;
    double clear = kInf;
    for (int m = 1; m <= count; ++m) {
      if (m == n) continue;
      rho = std::min(rho, (X(n) - X(m)).norm());
      tilde = std::min(tilde, angle_between(P.r - X(n), X(m) - X(n)));
      for (int k = m + 1; k <= count; ++k) {
        if (k == n) continue;
        rho = std::min(rho, point_segment_distance(X(n), X(m), X(k)));
        clear = std::min(clear, segment_distance(P.r, X(n), X(m), X(k)));
      }
    }
    if (count == 1) {
      rho = X(n).norm();
      tilde = 1.0;
    }
    P.rho[static_cast<std::size_t>(n - 1)] = 0.001 * rho;
    P.needle_angle[static_cast<std::size_t>(n - 1)] = tilde;
    const double len = X(n).norm();
    double size = 0.001 * std::min({tilde, P.eta[static_cast<std::size_t>(n - 1)], needle_gap}) * len;
    if (std::isfinite(clear)) size = std::min(size, 0.001 * clear);
    P.needle_size[static_cast<std::size_t>(n - 1)] = size;
  }
  return true;
}

}  // namespace

VertexPlacement place_vertices(int count, double margin) {
  if (count < 2) throw ValidationError("place_vertices: need at least two vertices");
  if (count > 16) throw ValidationError("place_vertices: at most 16 vertices are supported");
  std::string failure;
  for (int attempt = 0; attempt < 16; ++attempt) {
    VertexPlacement P;
    if (try_place(count, margin, attempt, P, failure)) return P;
  }
  throw ConstructionError("place_vertices: predicate failed after retries: " + failure);
}

double q_of(int i) { return std::ldexp(1.0, -i - 1); }

Vec5 w_of(int i) { return in_e2(std::cos(kPi * q_of(i)), std::sin(kPi * q_of(i))); }

// ---------------------------------------------------------------------------

Vec5 Transport::apply(const Vec5& z) const {
  Vec5 out = z;
  for (const auto& f : fields) out = affine_flow(f, out, 1.0);
  return out;
}

Eigen::Matrix<double, 5, 5> Transport::linear() const {
  Eigen::Matrix<double, 5, 5> L = Eigen::Matrix<double, 5, 5>::Identity();
  for (const auto& f : fields) {
    const Eigen::Matrix<double, 5, 5> step = Eigen::Matrix<double, 5, 5>::Identity() + f.w * f.a.transpose();
    L = step * L;
  }
  return L;
}

bool StepTubes::in_V(int anchor, const Vec5& z) const {
  for (const auto* list : {&up, &across})
    for (const auto& c : *list)
      if (c.anchor == anchor && c.sweep.contains(z)) return true;
  return false;
}

bool StepTubes::in_W(const Vec5& z) const { return in_V(-1, z); }

bool StepTubes::in_any_V(const Vec5& z) const {
  for (const auto* list : {&up, &across})
    for (const auto& c : *list)
      if (c.anchor >= 0 && c.sweep.contains(z)) return true;
  return false;
}

bool StepTubes::in_BQ(const Vec5& z) const {
  for (int k = 0; k < 6; ++k) {
    if (point_segment_distance(z, Q[k], Q[(k + 1) % 6]) < delta) return true;
  }
  return false;
}

std::vector<int> StepTubes::anchors() const {
  std::vector<int> out;
  for (const auto& [k, v] : xi) out.push_back(k);
  return out;
}

bool TubeSetFamily::in_cone(int j, const Eigen::Vector2d& v) const {
  if (j < 1 || j > static_cast<int>(steps.size())) throw ValidationError("cone index out of range");
  const auto& st = steps[static_cast<std::size_t>(j - 1)];
  const Eigen::Vector2d axis = st.w.tail<2>();
  if (v.norm() == 0.0) return true;
  const double c = std::abs(axis.dot(v)) / v.norm();
  return std::acos(std::min(1.0, c)) < st.beta / 6.0;
}

bool TubeSetFamily::certified() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.pass; });
}

double TubeSetFamily::sum_d() const {
  double s = 0.0;
  for (const auto& st : steps) s += st.d;
  return s;
}

namespace {

struct StepSizes {
  std::map<int, double> xi;
  double xi_pair = 0.0;
  double delta = 0.0;
};

PushComponent component(int anchor, int target, const Cigar& cigar, const AffineField& field, double t0, double t1,
                        double margin) {
  PushComponent c;
  c.anchor = anchor;
  c.target = target;
  c.sweep.cigar = cigar;
  c.sweep.field = field;
  c.sweep.t0 = t0;
  c.sweep.t1 = t1;
  c.sweep.margin = margin;
  return c;
}

StepTubes make_step(const VertexPlacement& P, int index, const perm::Transposition& t, const StepSizes& sz,
                    double margin) {
  StepTubes st;
  st.index = index;
  st.n = t.first;
  st.m = t.second;
  const Vec5& xn = P.vertex(st.n);
  const Vec5& xm = P.vertex(st.m);
  st.d = (xm - xn).norm();
  st.q = q_of(index);
  st.w = w_of(index);
  const Vec5 dw = st.d * st.w;
  st.Q = {xn, xn + dw, xm + dw, xm, xm - dw, xn - dw};
  st.delta = sz.delta;
  st.xi = sz.xi;
  st.xi_pair = sz.xi_pair;
  st.up_vector = dw;
  st.across_vector = xm - xn;
  const Vec5 W = xm - xn;
  for (const auto& [k, xi] : sz.xi) {
    const Vec5& xk = P.vertex(k);
    st.up.push_back(component(k, st.n, Cigar(xk, xn, xi), make_affine_field(xk, xn, dw), -1.0, 1.0, margin));
    st.up.push_back(component(k, st.m, Cigar(xk, xm, xi), make_affine_field(xk, xm, -dw), -1.0, 1.0, margin));
    st.across.push_back(
        component(k, st.n, Cigar(xk, xn + dw, xi), make_affine_field(xk, xn + dw, W), 0.0, 1.0, margin));
    st.across.push_back(
        component(k, st.m, Cigar(xk, xm - dw, xi), make_affine_field(xk, xm - dw, -W), 0.0, 1.0, margin));
    Transport fwd;
    fwd.a = k;
    fwd.b = st.n;
    fwd.ta = k;
    fwd.tb = st.m;
    fwd.fields = {st.up[st.up.size() - 2].sweep.field, st.across[st.across.size() - 2].sweep.field,
                  st.up.back().sweep.field};
    Transport bwd;
    bwd.a = k;
    bwd.b = st.m;
    bwd.ta = k;
    bwd.tb = st.n;
    bwd.fields = {st.up.back().sweep.field, st.across.back().sweep.field, st.up[st.up.size() - 2].sweep.field};
    st.transports.push_back(fwd);
    st.transports.push_back(bwd);
  }
  const Vec5 mid = 0.5 * (xn + xm);
  st.up.push_back(component(-1, 0, Cigar(xn, xm, sz.xi_pair), make_affine_field(mid, xn, dw), -1.0, 1.0, margin));
  st.across.push_back(
      component(-1, 0, Cigar(xn + dw, xm - dw, sz.xi_pair), make_affine_field(mid, xn + dw, W), 0.0, 1.0, margin));
  Transport pair;
  pair.a = st.n;
  pair.b = st.m;
  pair.ta = st.m;
  pair.tb = st.n;
  pair.fields = {st.up.back().sweep.field, st.across.back().sweep.field, st.up.back().sweep.field};
  st.transports.push_back(pair);
  st.up_tubes = {{xn - dw, xn + dw, sz.delta, 1.0}, {xm - dw, xm + dw, sz.delta, -1.0}};
  st.across_tubes = {{xn + dw, xm + dw, sz.delta, 1.0}, {xm - dw, xn - dw, sz.delta, -1.0}};
  return st;
}

Piece tube_piece(const ApexTube& t, const std::string& label) {
  Piece p;
  p.tri = {t.p0, t.p1, t.p1};
  p.thickness = t.radius;
  p.label = label;
  return p;
}

std::vector<Piece> component_pieces(const PushComponent& c, const std::string& label) {
  return c.sweep.pieces(label);
}

std::string anchor_name(int k) { return k == 0 ? "r" : k < 0 ? "pair" : std::to_string(k); }

struct ClauseAccumulator {
  CertificateClause clause;
  std::set<int> blame;  // step indices (1-based); 0 = needles
  explicit ClauseAccumulator(std::string name) {
    clause.name = std::move(name);
    clause.pass = true;
    clause.margin = kInf;
  }
  void add(const Separation& s, const std::string& what, std::initializer_list<int> who) {
    const bool ok = s.ok && s.margin >= 1e-9;
    if (s.margin < clause.margin) {
      clause.margin = s.margin;
      clause.detail = what + " (" + s.mode + ")";
    }
    if (!ok) {
      clause.pass = false;
      for (int w : who) blame.insert(w);
    }
  }
};

// Incident pieces of a tube are the components whose pinched edge runs along it.
bool runs_along(const Piece& pc, const ApexTube& t) {
  const Vec5 e = t.p1 - t.p0;
  const double len = e.norm();
  for (const Vec5* v : {&pc.tri[1], &pc.tri[2]}) {
    const Vec5 r = *v - t.p0;
    if ((r - r.dot(e) / (len * len) * e).norm() > 1e-12 * len) return false;
  }
  return true;
}

}  // namespace

std::vector<CertificateClause> placement_certificates(const VertexPlacement& P) {
  std::vector<CertificateClause> out;
  {
    CertificateClause c{"general position", true, std::min(P.min_collinear, P.min_coplanar), ""};
    c.pass = c.margin >= 1e-9;
    c.detail = "normalized determinant margin";
    out.push_back(c);
  }
  ClauseAccumulator cig("cigar disjointness");
  std::vector<std::pair<std::pair<int, int>, Piece>> cigars;
  for (int a = 1; a <= P.count; ++a)
    for (int b = a + 1; b <= P.count; ++b)
      cigars.push_back({{a, b}, cigar_piece(P.edge_cigar(a, b, P.eps_of(a, b)), "U" + std::to_string(a) + std::to_string(b))});
  for (std::size_t i = 0; i < cigars.size(); ++i)
    for (std::size_t j = i + 1; j < cigars.size(); ++j)
      cig.add(separate(cigars[i].second, cigars[j].second), cigars[i].second.label + "/" + cigars[j].second.label, {});
  if (cigars.size() < 2) cig.clause.margin = 1.0;
  out.push_back(cig.clause);
  ClauseAccumulator nd("needle disjointness");
  ClauseAccumulator nc("needles clear of cigars");
  std::vector<Piece> needles;
  for (int n = 1; n <= P.count; ++n) needles.push_back(cigar_piece(P.needle(n), "I" + std::to_string(n)));
  for (std::size_t i = 0; i < needles.size(); ++i)
    for (std::size_t j = i + 1; j < needles.size(); ++j)
      nd.add(separate(needles[i], needles[j]), needles[i].label + "/" + needles[j].label, {});
  for (int n = 1; n <= P.count; ++n)
    for (const auto& [ab, pc] : cigars) {
      nc.add(separate(needles[static_cast<std::size_t>(n - 1)], pc), needles[static_cast<std::size_t>(n - 1)].label + "/" + pc.label, {});
    }
  if (nc.clause.margin == kInf) nc.clause.margin = 1.0;
  out.push_back(nd.clause);
  out.push_back(nc.clause);
  for (auto& c : out) {
    if (c.margin < 1e-9) c.pass = false;
  }
  return out;
}

double pos_distortion(const StepTubes& st, const VertexPlacement& P, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  double worst = 0.0;
  for (const auto& tr : st.transports) {
    const double size = tr.a == 0 || tr.b == 0 ? st.xi.at(0)
                        : (tr.a == st.n && tr.b == st.m) ? st.xi_pair
                                                          : st.xi.at(tr.a);
    const Cigar src(P.vertex(tr.a), P.vertex(tr.b), size);
    const Cigar dst(P.vertex(tr.ta), P.vertex(tr.tb), size);
    for (int s = 0; s < samples; ++s) {
      const double t = U(rng) * 0.999;
      Vec5 e;
      for (int i = 0; i < 5; ++i) e(i) = N(rng);
      e -= e.dot(src.axis()) * src.axis();
      e.normalize();
      const double rad = std::abs(U(rng));
      const Vec5 z1 = src.point(t, rad, e);
      const Vec5 z4 = tr.apply(z1);
      worst = std::max(worst, std::abs(dst.param(z4) - src.param(z1)));
    }
  }
  return worst;
}

TubeSetFamily build_tubes(const VertexPlacement& placement, const perm::TranspositionSeq& seq,
                          const TubeSizes& sizes) {
  for (const auto& t : seq.steps) {
    if (t.first < 1 || t.second > placement.count) throw ValidationError("build_tubes: step element outside placement");
  }
  TubeSetFamily fam;
  fam.placement = placement;
  fam.seq = seq;
  const int K = static_cast<int>(seq.steps.size());
  std::vector<StepSizes> sz(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const auto& t = seq.steps[static_cast<std::size_t>(i)];
    auto& s = sz[static_cast<std::size_t>(i)];
    for (int k = 1; k <= placement.count; ++k) {
      if (k == t.first || k == t.second) continue;
      s.xi[k] = 0.5 * std::min(placement.eps_of(k, t.first), placement.eps_of(k, t.second));
    }
    s.xi[0] = std::min(placement.needle_size[static_cast<std::size_t>(t.first - 1)],
                       placement.needle_size[static_cast<std::size_t>(t.second - 1)]);
    s.xi_pair = placement.eps_base(t.first, t.second);
    s.delta = std::min(placement.rho[static_cast<std::size_t>(t.first - 1)],
                       placement.rho[static_cast<std::size_t>(t.second - 1)]);
  }
  for (int round = 0; round <= sizes.max_rounds; ++round) {
    fam.rounds = round;
    fam.steps.clear();
    for (int i = 0; i < K; ++i)
      fam.steps.push_back(make_step(placement, i + 1, seq.steps[static_cast<std::size_t>(i)],
                                    sz[static_cast<std::size_t>(i)], sizes.window_margin));
    fam.needles.clear();
    for (int n = 1; n <= placement.count; ++n) fam.needles.push_back(placement.needle(n));
    // Cone half-angles.
    for (auto& st : fam.steps) {
      st.beta = kInf;
      for (const auto& o : fam.steps)
        if (o.index != st.index) st.beta = std::min(st.beta, angle_between(st.w, o.w));
      if (!std::isfinite(st.beta)) st.beta = kPi / 2;
    }
    fam.clauses = placement_certificates(placement);
    std::set<int> blame;
    auto commit = [&](ClauseAccumulator& acc) {
      if (acc.clause.margin == kInf) acc.clause.margin = 1.0;
      if (acc.clause.margin < 1e-9) acc.clause.pass = false;
      if (!acc.clause.pass) blame.insert(acc.blame.begin(), acc.blame.end());
      fam.clauses.push_back(acc.clause);
    };
    // Per step.
    ClauseAccumulator within("push components separated");
    ClauseAccumulator tubes("apex tubes clear");
    ClauseAccumulator clear("non-incident cigars clear of supports");
    CertificateClause posc{"Pos distortion", true, kInf, ""};
    for (const auto& st : fam.steps) {
      const std::string tag = "step " + std::to_string(st.index);
      for (const auto& [list, tlist, name] :
           {std::tuple{&st.up, &st.up_tubes, "up"}, std::tuple{&st.across, &st.across_tubes, "across"}}) {
        std::vector<Piece> pcs;
        for (const auto& c : *list)
          for (auto& p : component_pieces(c, anchor_name(c.anchor) + "->" + std::to_string(c.target)))
            pcs.push_back(p);
        for (std::size_t a = 0; a < pcs.size(); ++a)
          for (std::size_t b = a + 1; b < pcs.size(); ++b) {
            if (pcs[a].label == pcs[b].label) continue;
            within.add(separate(pcs[a], pcs[b]), tag + " " + name + " " + pcs[a].label + "/" + pcs[b].label,
                       {st.index});
          }
        for (std::size_t ti = 0; ti < tlist->size(); ++ti) {
          const Piece tp = tube_piece((*tlist)[ti], "tube");
          for (const auto& pc : pcs) {
            if (runs_along(pc, (*tlist)[ti])) continue;
            tubes.add(separate(tp, pc), tag + " " + name + " tube/" + pc.label, {st.index});
          }
          for (std::size_t tj = ti + 1; tj < tlist->size(); ++tj)
            tubes.add(separate(tp, tube_piece((*tlist)[tj], "tube")), tag + " " + name + " tube/tube", {st.index});
        }
        for (int a = 1; a <= placement.count; ++a)
          for (int b = a + 1; b <= placement.count; ++b) {
            if (a == st.n || a == st.m || b == st.n || b == st.m) continue;
            const Piece cp = cigar_piece(placement.edge_cigar(a, b, placement.eps_of(a, b)), "U");
            for (const auto& pc : pcs)
              clear.add(separate(cp, pc), tag + " " + name + " U" + std::to_string(a) + std::to_string(b) + "/" + pc.label,
                        {st.index});
            for (const auto& t : *tlist)
              clear.add(separate(cp, tube_piece(t, "tube")), tag + " " + name + " tube", {st.index});
          }
      }
      const double bound = 1.0 / (500.0 * std::ldexp(1.0, st.index));
      const double dist = pos_distortion(st, placement, 1000, 1234u + static_cast<unsigned>(st.index));
      const double m = bound - dist;
      if (m < posc.margin) {
        posc.margin = m;
        posc.detail = tag + ": observed " + std::to_string(dist);
      }
      if (m <= 0.0) {
        posc.pass = false;
        blame.insert(st.index);
      }
    }
    commit(within);
    commit(tubes);
    commit(clear);
    if (posc.margin == kInf) posc.margin = 1.0;
    fam.clauses.push_back(posc);
    // Across steps.
    ClauseAccumulator vv("V tubes disjoint across steps");
    ClauseAccumulator ww("W tubes disjoint across steps");
    ClauseAccumulator wv("W and V tubes disjoint across steps");
    ClauseAccumulator rr("needle transport tubes disjoint");
    auto pieces_of = [&](const StepTubes& st, int anchor) {
      std::vector<Piece> out;
      for (const auto* list : {&st.up, &st.across})
        for (const auto& c : *list)
          if (c.anchor == anchor)
            for (auto& p : component_pieces(c, anchor_name(anchor))) out.push_back(p);
      return out;
    };
    auto pairs_of = [](const StepTubes& st, int k) {
      return std::set<std::set<int>>{{st.n, k}, {st.m, k}};
    };
    auto check_sets = [&](ClauseAccumulator& acc, const std::vector<Piece>& A, const std::vector<Piece>& B,
                          const std::string& what, int i, int j) {
      for (const auto& a : A)
        for (const auto& b : B) acc.add(separate(a, b), what, {i, j});
    };
    for (std::size_t i = 0; i < fam.steps.size(); ++i)
      for (std::size_t j = i + 1; j < fam.steps.size(); ++j) {
        const auto& si = fam.steps[i];
        const auto& sj = fam.steps[j];
        const std::string tag = "steps " + std::to_string(si.index) + "," + std::to_string(sj.index);
        for (int k : si.anchors()) {
          if (k == 0) continue;
          for (int l : sj.anchors()) {
            if (l == 0) continue;
            bool coincide = false;
            for (const auto& p : pairs_of(si, k))
              if (pairs_of(sj, l).count(p)) coincide = true;
            if (coincide) continue;
            check_sets(vv, pieces_of(si, k), pieces_of(sj, l), tag + " V" + std::to_string(k) + "/V" + std::to_string(l),
                       si.index, sj.index);
          }
        }
        check_sets(ww, pieces_of(si, -1), pieces_of(sj, -1), tag + " W/W", si.index, sj.index);
        for (const auto& [a, b] : {std::pair{&si, &sj}, std::pair{&sj, &si}}) {
          const std::set<int> pair{a->n, a->m};
          for (int k : b->anchors()) {
            if (k == 0) continue;
            if (pairs_of(*b, k).count(pair)) continue;
            check_sets(wv, pieces_of(*a, -1), pieces_of(*b, k), tag + " W/V" + std::to_string(k), si.index, sj.index);
          }
        }
        const std::set<int> pi{si.n, si.m};
        if (!pi.count(sj.n) && !pi.count(sj.m))
          check_sets(rr, pieces_of(si, 0), pieces_of(sj, 0), tag + " Vr/Vr", si.index, sj.index);
      }
    commit(vv);
    commit(ww);
    commit(wv);
    commit(rr);
    // Cones and distance budget.
    {
      CertificateClause c{"cones disjoint", true, kInf, ""};
      for (std::size_t i = 0; i < fam.steps.size(); ++i)
        for (std::size_t j = i + 1; j < fam.steps.size(); ++j) {
          const auto& a = fam.steps[i];
          const auto& b = fam.steps[j];
          const double gap = angle_between(a.w, b.w) - (a.beta + b.beta) / 6.0;
          const double m = gap - (a.beta + b.beta) / 3.0;
          if (m < c.margin) {
            c.margin = m;
            c.detail = "K" + std::to_string(a.index) + "/K" + std::to_string(b.index);
          }
          // The bound is attained with equality when beta_i = beta_j = angle.
          if (m < -1e-12) c.pass = false;
        }
      if (c.margin == kInf) c.margin = 1.0;
      fam.clauses.push_back(c);
      CertificateClause d{"distance budget", fam.sum_d() <= 2.0, 2.0 - fam.sum_d(), ""};
      fam.clauses.push_back(d);
    }
    if (fam.certified()) return fam;
    if (blame.empty()) break;
    for (int idx : blame) {
      if (idx < 1) continue;
      auto& s = sz[static_cast<std::size_t>(idx - 1)];
      for (auto& [k, v] : s.xi) v *= sizes.shrink;
      s.xi_pair *= sizes.shrink;
      s.delta *= sizes.shrink;
    }
  }
  for (const auto& c : fam.clauses) {
    if (!c.pass) throw ConstructionError("build_tubes: certificate failed: " + c.name + " at " + c.detail);
  }
  throw ConstructionError("build_tubes: certificate failed");
}

}  // namespace conjury::g5
