#include "conjury/conjugacy5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "conjury/ode.hpp"
#include "conjury/parallel.hpp"
#include "conjury/smooth.hpp"

namespace conjury::c5 {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Moves z radially within its slice so that its gauge becomes g_new.
Vec5 set_gauge(const g5::Cigar& c, const Vec5& z, double g_old, double g_new) {
  if (g_old == 0.0) return z;
  return z + (g_new / g_old - 1.0) * c.normal(z);
}

/// Random unit vector orthogonal to axis (axis may be zero).
Vec5 random_unit_normal(std::mt19937_64& rng, const Vec5& axis) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec5 e;
  for (int i = 0; i < 5; ++i) e(i) = N(rng);
  e -= e.dot(axis) * axis;
  return e.normalized();
}

bool near_cigar(const g5::Cigar& c, const Vec5& z) {
  return g5::point_segment_distance(z, c.x(), c.y()) < 0.5 * c.eps();
}

}  // namespace

// ---------------------------------------------------------------------------
// Shrink / expand.

Vec5 ShrinkMap::apply(const Vec5& z) const {
  for (const auto& e : entries_) {
    if (!near_cigar(e.base, z)) continue;
    const double g = e.base.gauge(z);
    if (!(g < 1.0)) continue;
    const double c = e.ratio();
    const double g2 = g <= 0.5 ? 2.0 * c * g : c + (g - 0.5) * 2.0 * (1.0 - c);
    return set_gauge(e.base, z, g, g2);
  }
  return z;
}

Vec5 ShrinkMap::expand(const Vec5& z) const {
  for (const auto& e : entries_) {
    if (!near_cigar(e.base, z)) continue;
    const double g = e.base.gauge(z);
    if (!(g < 1.0)) continue;
    const double c = e.ratio();
    const double g2 = g <= c ? g / (2.0 * c) : 0.5 + (g - c) / (2.0 * (1.0 - c));
    return set_gauge(e.base, z, g, g2);
  }
  return z;
}

bool ShrinkMap::in_support(const Vec5& z) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const ShrinkEntry& e) { return near_cigar(e.base, z) && e.base.contains(z); });
}

ShrinkMap shrink_map(const std::vector<g5::Cigar>& cigars, const std::vector<double>& delta) {
  if (cigars.size() != delta.size()) throw ValidationError("shrink_map: one target size per cigar");
  std::vector<ShrinkEntry> entries;
  for (std::size_t i = 0; i < cigars.size(); ++i) {
    if (!(delta[i] > 0.0 && delta[i] < 0.5 * cigars[i].eps())) {
      throw ValidationError("shrink_map: target size must lie in (0, eps/2)");
    }
    entries.push_back({cigars[i], delta[i]});
  }
  return ShrinkMap(std::move(entries));
}

// ---------------------------------------------------------------------------
// Pushes.

bool PushMap::Box::contains(const Vec5& z) const {
  return (z.array() >= lo.array()).all() && (z.array() <= hi.array()).all();
}

PushMap::PushMap(const g5::StepTubes& step, g5::PushKind kind, double tol) : tol_(tol) {
  const bool up = kind == g5::PushKind::Up;
  u_ = up ? step.up_vector : step.across_vector;
  const double uu = u_.squaredNorm();
  all_.lo = Vec5::Constant(kInf);
  all_.hi = Vec5::Constant(-kInf);
  auto grow = [](Box& b, const Vec5& p, double pad) {
    b.lo = b.lo.cwiseMin(p - Vec5::Constant(pad));
    b.hi = b.hi.cwiseMax(p + Vec5::Constant(pad));
  };
  for (const auto& c : up ? step.up : step.across) {
    Part p;
    p.sweep = c.sweep;
    p.sign = c.sweep.field.w.dot(u_) / uu;
    p.box.lo = Vec5::Constant(kInf);
    p.box.hi = Vec5::Constant(-kInf);
    const double pad = 1.01 * c.sweep.thickness() + 1e-15;
    for (const auto& pc : c.sweep.pieces(""))
      for (const auto& v : pc.tri) grow(p.box, v, pad);
    // Cigar endpoints with vanishing ell are not on any piece triangle.
    grow(p.box, c.sweep.cigar.x(), pad);
    grow(p.box, c.sweep.cigar.y(), pad);
    grow(all_, p.box.lo, 0.0);
    grow(all_, p.box.hi, 0.0);
    p.origin = c.sweep.field.anchor;
    Eigen::Matrix<double, 5, 2> span;
    span.col(0) = c.sweep.cigar.axis();
    span.col(1) = c.sweep.field.w;
    Eigen::HouseholderQR<Eigen::Matrix<double, 5, 2>> qr(span);
    p.plane = qr.householderQ() * Eigen::Matrix<double, 5, 2>::Identity();
    parts_.push_back(p);
  }
  for (const auto& t : up ? step.up_tubes : step.across_tubes) {
    Tube tb;
    tb.tube = t;
    tb.box.lo = t.p0.cwiseMin(t.p1) - Vec5::Constant(t.radius);
    tb.box.hi = t.p0.cwiseMax(t.p1) + Vec5::Constant(t.radius);
    grow(all_, tb.box.lo, 0.0);
    grow(all_, tb.box.hi, 0.0);
    tubes_.push_back(tb);
  }
}

bool PushMap::Part::near(const Vec5& z) const {
  if (!box.contains(z)) return false;
  const Vec5 v = z - origin;
  const Vec5 off = v - plane * (plane.transpose() * v);
  return off.norm() < 0.5 * sweep.cigar.eps() * (1.0 + 1e-9);
}

namespace {

double window_cutoff(const g5::SweptSet& s, double t) {
  const double out = std::max({0.0, s.t0 - t, t - s.t1});
  return smooth::cutoff(out / s.margin, 0.0, 1.0);
}

}  // namespace

double PushMap::psi(const Vec5& z) const {
  if (!all_.contains(z)) return 0.0;
  double weight = 0.0, core = 0.0, apex = 0.0;
  for (const auto& p : parts_) {
    if (!p.near(z)) continue;
    const auto lp = p.sweep.locate(z);
    if (!(lp.gauge < 1.0)) continue;
    const double w = smooth::cutoff(lp.gauge, 0.5, 1.0) * window_cutoff(p.sweep, lp.t);
    weight += w;
    core += w * lp.ell * p.sign;
  }
  for (const auto& t : tubes_) {
    if (!t.box.contains(z)) continue;
    const double d = g5::point_segment_distance(z, t.tube.p0, t.tube.p1);
    if (d >= t.tube.radius) continue;
    apex += smooth::cutoff(d / t.tube.radius, 0.5, 1.0) * t.tube.value;
  }
  return core + (1.0 - weight) * apex;
}

bool PushMap::in_support(const Vec5& z) const {
  if (!all_.contains(z)) return false;
  for (const auto& p : parts_)
    if (p.near(z) && p.sweep.contains(z)) return true;
  for (const auto& t : tubes_)
    if (t.box.contains(z) && t.tube.contains(z)) return true;
  return false;
}

Vec5 PushMap::shift(const Vec5& z, double tau) const {
  if (!all_.contains(z)) {
    ++counters_->identity;
    return z;
  }
  // Closed form when z sits in one component core whose window covers the
  // whole path; the flow there is the affine one.
  int touching = 0;
  const Part* only = nullptr;
  g5::SweptSet::LinePosition only_lp;
  for (const auto& p : parts_) {
    if (!p.near(z)) continue;
    const auto lp = p.sweep.locate(z);
    if (!(lp.gauge < 1.0)) continue;
    ++touching;
    only = &p;
    only_lp = lp;
  }
  if (touching == 1 && only_lp.ell != 0.0) {
    const auto& sw = only->sweep;
    const double t_end = only_lp.t + tau;
    if (only_lp.gauge <= 0.5 && std::min(only_lp.t, t_end) >= sw.t0 && std::max(only_lp.t, t_end) <= sw.t1) {
      ++counters_->closed_form;
      return z + tau * only_lp.ell * only->sign * u_;
    }
    // One component and no apex tube within reach: the flow moves the sweep
    // time t* at rate kappa * chi(t*), with kappa constant along the line.
    const Vec5 reach = z + tau * only_lp.ell * only->sign * u_;
    bool clear = true;
    for (const auto& t : tubes_)
      if (g5::segment_distance(z, reach, t.tube.p0, t.tube.p1) < t.tube.radius) clear = false;
    if (clear) {
      ++counters_->integrated;
      const double kappa = smooth::cutoff(only_lp.gauge, 0.5, 1.0);
      if (kappa == 0.0) return z;
      ode::Options opt;
      opt.tol = tol_;
      const double t1 = ode::integrate([&](double t) { return kappa * window_cutoff(sw, t); }, only_lp.t, tau, opt,
                                       ode::abs_norm);
      return z + (t1 - only_lp.t) * only_lp.ell * only->sign * u_;
    }
  }
  bool in_tube = false;
  for (const auto& t : tubes_)
    if (t.box.contains(z) && t.tube.contains(z)) in_tube = true;
  if (touching == 0 && !in_tube) {
    ++counters_->identity;
    return z;
  }
  ++counters_->integrated;
  ode::Options opt;
  opt.tol = tol_;
  const double s = ode::integrate([&](double s) { return psi(z + s * u_); }, 0.0, tau, opt, ode::abs_norm);
  return z + s * u_;
}

PushStats PushMap::stats() const {
  return {counters_->closed_form.load(), counters_->integrated.load(), counters_->identity.load()};
}

Vec5 PushMap::apply(const Vec5& z) const { return shift(z, 1.0); }

Vec5 PushMap::inverse(const Vec5& z) const { return shift(z, -1.0); }

PushMap tube_push(const g5::StepTubes& step, g5::PushKind kind) { return PushMap(step, kind); }

// ---------------------------------------------------------------------------
// Matching.

g5::Cigar CigarState::tiny() const {
  return g5::Cigar(f->placement().vertex(a), f->placement().vertex(b), delta);
}

g5::Cigar CigarState::base() const {
  return g5::Cigar(f->placement().vertex(a), f->placement().vertex(b), f->placement().eps_base(a, b));
}

namespace {

// Orthonormal basis (columns) of the complement of unit vector e.
Eigen::Matrix<double, 5, 4> normal_basis(const Vec5& e) {
  Eigen::Matrix<double, 5, 5> A = Eigen::Matrix<double, 5, 5>::Identity();
  A.col(0) = e;
  // Complete e with the unit vectors except the one most parallel to it.
  int k = 0;
  Eigen::Index imax = 0;
  e.cwiseAbs().maxCoeff(&imax);
  for (int i = 0; i < 5; ++i)
    if (i != imax) A.col(++k) = Vec5::Unit(i);
  Eigen::HouseholderQR<Eigen::Matrix<double, 5, 5>> qr(A);
  const Eigen::Matrix<double, 5, 5> Q = qr.householderQ();
  return Q.rightCols<4>();
}

double log_lambda_nu(r5::ProfileKind k, double nu) {
  if (nu >= 1.0) return -kInf;
  const double v = -nu * nu / (1.0 - nu * nu);
  return k == r5::ProfileKind::Standard ? v : 2.0 * v;
}

}  // namespace

MatchingPiece::MatchingPiece(CigarState src, CigarState tgt, const AffineMap& transport, double tol)
    : src_(std::move(src)), tgt_(std::move(tgt)), tol_(tol) {
  if (!src_.f || !tgt_.f) throw ValidationError("matching: missing dynamics");
  if (src_.f->sign(src_.a, src_.b) != tgt_.f->sign(tgt_.a, tgt_.b)) {
    throw ValidationError("matching: cannot match a contracting cigar with an expanding one");
  }
  tiny_src_ = src_.tiny();
  tiny_tgt_ = tgt_.tiny();
  base_tgt_ = tgt_.base();
  if (!(tgt_.delta < 0.5 * base_tgt_.eps())) throw ValidationError("matching: core size too large");

  const Mat5& A = transport.lin;
  const Vec5 es = tiny_src_.axis(), et = tiny_tgt_.axis();
  const Eigen::Matrix<double, 5, 4> Ns = normal_basis(es);
  Eigen::Matrix<double, 5, 4> Nt = normal_basis(et);
  Eigen::Matrix4d B = Nt.transpose() * A * Ns;
  if (B.determinant() < 0.0) {
    Nt.col(0) = -Nt.col(0);
    B = Nt.transpose() * A * Ns;
  }
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix4d Q = svd.matrixU() * svd.matrixV().transpose();
  M_.lin = (tiny_tgt_.length() / tiny_src_.length()) * et * es.transpose() +
           (tgt_.delta / src_.delta) * Nt * Q * Ns.transpose();
  M_.offset = tiny_tgt_.x() - M_.lin * tiny_src_.x();
  M_normal_inv_ = M_.lin.inverse();

  const Mat5 Ainv = A.inverse();
  L_.lin = M_.lin * Ainv;
  L_.offset = M_.offset - M_.lin * Ainv * transport.offset;
  L_inv_.lin = L_.lin.inverse();
  L_inv_.offset = -L_inv_.lin * L_.offset;
  X_ = L_.lin.log();
  if (!X_.allFinite() || (X_.exp() - L_.lin).norm() > 1e-9 * (1.0 + L_.lin.norm())) {
    throw ConstructionError("matching: normalizer has no real logarithm");
  }
  for (int k = 0; k <= 4; ++k) path_.push_back((0.25 * k * X_).exp());
}

Vec5 MatchingPiece::blended_flow(const Vec5& z, double sign) const {
  const Vec5& o = tiny_tgt_.x();
  const double s = base_tgt_.eps();
  const Vec5 rel = (z - o) / s;
  auto field = [&](const Vec5& w) -> Vec5 {
    const Vec5 y = z + s * w;
    const double beta = smooth::cutoff(base_tgt_.gauge(y), 0.25, 0.5);
    if (beta == 0.0) return Vec5::Zero();
    return sign * beta * (X_ * (rel + w));
  };
  ode::Options opt;
  opt.tol = tol_;
  const Vec5 w = ode::integrate(field, Vec5(Vec5::Zero()), 1.0, opt,
                                [](const Vec5& v) { return v.lpNorm<Eigen::Infinity>(); });
  return z + s * w;
}

Vec5 MatchingPiece::normalize(const Vec5& z) const {
  if (!near_cigar(base_tgt_, z)) return z;
  const double g = base_tgt_.gauge(z);
  if (!(g < 0.5)) return z;
  const Vec5& o = tiny_tgt_.x();
  bool inside = g <= 0.2;
  for (int k = 1; k <= 4 && inside; ++k) inside = base_tgt_.gauge(o + path_[k] * (z - o)) <= 0.2;
  if (inside) return L_.apply(z);
  return blended_flow(z, 1.0);
}

Vec5 MatchingPiece::normalize_inverse(const Vec5& z) const {
  if (!near_cigar(base_tgt_, z)) return z;
  const double g = base_tgt_.gauge(z);
  if (!(g < 0.5)) return z;
  const Vec5& o = tiny_tgt_.x();
  bool inside = g <= 0.2;
  for (int k = 1; k <= 4 && inside; ++k) inside = base_tgt_.gauge(o + path_[k].inverse() * (z - o)) <= 0.2;
  if (inside) return L_inv_.apply(z);
  return blended_flow(z, -1.0);
}

double MatchingPiece::flow_time_match(double nu, double t, const Vec5& e_src, const Vec5& e_tgt) const {
  const auto& fs = *src_.f;
  const auto& ft = *tgt_.f;
  const g5::Cigar cs = fs.cigar(src_.a, src_.b);
  const g5::Cigar ct = ft.cigar(tgt_.a, tgt_.b);
  const auto ks = fs.profile().kind, kt = ft.profile().kind;
  // log of the radial rate without the common slice factor.
  auto log_rate_s = [&](double y) {
    const double v = std::exp(y);
    return fs.log_theta(cs.point(t, v, e_src)) + log_lambda_nu(ks, v);
  };
  auto log_rate_t = [&](double y) {
    const double v = std::exp(y);
    return ft.log_theta(ct.point(t, v, e_tgt)) + log_lambda_nu(kt, v);
  };
  const double y0 = std::log(0.5);
  // Past this radius both maps move points by less than exp(-499) relative.
  if (nu > 0.999) return nu;
  const double ls0 = log_rate_s(y0), lt0 = log_rate_t(y0);
  // Rays on which both maps move by less than round-off are left alone.
  if (!(ls0 >= -40.0 || lt0 >= -40.0) || !std::isfinite(ls0) || !std::isfinite(lt0)) return nu;
  ode::Options opt;
  opt.tol = tol_;
  // Source flow time from the reference radius, in target time units.
  using V2 = Eigen::Vector2d;
  const V2 ts = ode::integrate(
      [&](const V2& s) -> V2 { return V2(1.0, std::exp(std::min(ls0 - log_rate_s(s(0)), 700.0))); }, V2(y0, 0.0),
      std::log(nu) - y0, opt, [](const V2& v) { return v.lpNorm<Eigen::Infinity>(); });
  const double T = std::clamp(std::exp(std::min(lt0 - ls0, 700.0)) * ts(1), -1e250, 1e250);
  // Target radius reached after the same flow time.
  const double Y = ode::integrate(
      [&](double Yv) {
        const double d = log_rate_t(std::min(Yv, -1e-300)) - lt0;
        return std::isfinite(d) ? std::exp(std::min(d, 700.0)) : 0.0;
      },
      y0, T, opt, ode::abs_norm);
  return std::min(std::exp(Y), std::nextafter(1.0, 0.0));
}

Vec5 MatchingPiece::conjugate(const Vec5& z) const {
  if (!near_cigar(tiny_tgt_, z)) return z;
  const double g = tiny_tgt_.gauge(z);
  if (!(g < 0.5) || g == 0.0) return z;
  const double t = tiny_tgt_.param(z);
  const Vec5 n = tiny_tgt_.normal(z);
  const Vec5 e_t = n / n.norm();
  Vec5 e_s = M_normal_inv_ * e_t;
  e_s -= e_s.dot(tiny_src_.axis()) * tiny_src_.axis();
  e_s.normalize();
  const double H = flow_time_match(2.0 * g, t, e_s, e_t);
  return set_gauge(tiny_tgt_, z, g, 0.5 * H);
}

bool MatchingPiece::in_support(const Vec5& z) const {
  return near_cigar(base_tgt_, z) && base_tgt_.gauge(z) < 0.5;
}

Vec5 MatchingMap::apply(const Vec5& z) const {
  for (const auto& p : pieces_)
    if (p.in_support(z)) return p.apply(z);
  return z;
}

bool MatchingMap::in_support(const Vec5& z) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [&](const MatchingPiece& p) { return p.in_support(z); });
}

double MatchingMap::displacement(int samples, unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double sup = 0.0;
  if (pieces_.empty()) return 0.0;
  for (int i = 0; i < samples; ++i) {
    const auto& p = pieces_[static_cast<std::size_t>(i) % pieces_.size()];
    const g5::Cigar base = p.target().base();
    const Vec5 z = base.point(-1.0 + 2.0 * U(rng), 0.5 * U(rng), random_unit_normal(rng, base.axis()));
    sup = std::max(sup, (p.apply(z) - z).norm());
  }
  return sup;
}

MatchingMap matching_map(const std::vector<std::pair<CigarState, CigarState>>& pairs,
                         const std::vector<AffineMap>& transports, double mu) {
  if (pairs.size() != transports.size()) throw ValidationError("matching_map: one transport per pair");
  if (!(mu > 0.0)) throw ValidationError("matching_map: mu must be positive");
  std::vector<MatchingPiece> pieces;
  for (std::size_t i = 0; i < pairs.size(); ++i) pieces.emplace_back(pairs[i].first, pairs[i].second, transports[i]);
  MatchingMap out(std::move(pieces));
  const double disp = out.displacement(1000, 17);
  if (!(disp < mu)) throw ConstructionError("matching_map: displacement exceeds mu");
  return out;
}

// ---------------------------------------------------------------------------
// Steps.

Vec5 HomeoStep::apply(const Vec5& z) const { return trace(z)[5]; }

std::array<Vec5, 6> HomeoStep::trace(const Vec5& z) const {
  std::array<Vec5, 6> out;
  out[0] = shrink.apply(z);
  out[1] = up.apply(out[0]);
  out[2] = across.apply(out[1]);
  out[3] = up.apply(out[2]);
  out[4] = match.apply(out[3]);
  out[5] = shrink.expand(out[4]);
  return out;
}

bool HomeoStep::in_support(const Vec5& z) const {
  return shrink.in_support(z) || up.in_support(z) || across.in_support(z) || match.in_support(z);
}

namespace {

struct Incident {
  int a, b;    // source cigar, oriented
  int ta, tb;  // target cigar
  double delta;
};

const g5::Transport& transport_for(const g5::StepTubes& st, int a, int b);

// Largest core size whose transported image stays below gauge 1/8 of the
// target base cigar, where the blended normalizer is exactly affine.
double transported_cap(const g5::StepTubes& st, const g5::VertexPlacement& P, int a, int b, int ta, int tb) {
  const Eigen::JacobiSVD<Mat5> svd(transport_for(st, a, b).linear());
  return P.eps_base(ta, tb) / (8.0 * svd.singularValues()(0));
}

std::vector<Incident> incident_cigars(const g5::StepTubes& st, const g5::VertexPlacement& P, double scale) {
  std::vector<Incident> out;
  const int n = st.n, m = st.m;
  for (int k : st.anchors()) {
    if (k < 1) continue;
    const double d = scale * std::min({P.eps_dyn(k, n) / 8.0, P.eps_dyn(k, m) / 8.0,
                                       transported_cap(st, P, k, n, k, m), transported_cap(st, P, k, m, k, n)});
    out.push_back({k, n, k, m, d});
    out.push_back({k, m, k, n, d});
  }
  out.push_back({n, m, m, n, scale * std::min(P.eps_dyn(n, m) / 8.0, transported_cap(st, P, n, m, m, n))});
  return out;
}

AffineMap affine_of(const g5::Transport& tr) {
  AffineMap A;
  A.lin = tr.linear();
  A.offset = tr.apply(Vec5::Zero());
  return A;
}

const g5::Transport& transport_for(const g5::StepTubes& st, int a, int b) {
  for (const auto& tr : st.transports)
    if (tr.a == a && tr.b == b) return tr;
  throw ConstructionError("no transport for cigar " + std::to_string(a) + "," + std::to_string(b));
}

}  // namespace

std::vector<Vec5> support_samples(const g5::StepTubes& st, const r5::Diffeo5& G, int count, unsigned seed) {
  if (count < 0) throw ValidationError("sample count must be non-negative");
  const auto& P = G.placement();
  const auto inc = incident_cigars(st, P, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<const g5::PushComponent*> comps;
  for (const auto* list : {&st.up, &st.across})
    for (const auto& c : *list) comps.push_back(&c);
  std::vector<const g5::ApexTube*> tubes;
  for (const auto* list : {&st.up_tubes, &st.across_tubes})
    for (const auto& t : *list) tubes.push_back(&t);
  auto pick = [&](std::size_t size) { return std::min(size - 1, static_cast<std::size_t>(U(rng) * size)); };
  std::vector<Vec5> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int kind = i % 10;
    if (kind <= 5) {
      const auto& c = inc[pick(inc.size())];
      const g5::Cigar cig = kind <= 3 ? G.cigar(c.a, c.b) : P.edge_cigar(c.a, c.b, P.eps_base(c.a, c.b));
      const double g = kind <= 3 ? U(rng) : 0.25 + 0.75 * U(rng);
      out.push_back(cig.point(-1.0 + 2.0 * U(rng), g, random_unit_normal(rng, cig.axis())));
    } else if (kind <= 7) {
      const auto& s = comps[pick(comps.size())]->sweep;
      const Vec5 p = s.cigar.point(-1.0 + 2.0 * U(rng), U(rng), random_unit_normal(rng, s.cigar.axis()));
      const double tau = (s.t0 - s.margin) + (s.t1 - s.t0 + 2.0 * s.margin) * U(rng);
      out.push_back(g5::affine_flow(s.field, p, tau));
    } else if (kind == 8) {
      const auto& t = *tubes[pick(tubes.size())];
      out.push_back(t.p0 + U(rng) * (t.p1 - t.p0) + U(rng) * t.radius * random_unit_normal(rng, Vec5::Zero()));
    } else {
      const int k = static_cast<int>(pick(6));
      const Vec5 p = st.Q[static_cast<std::size_t>(k)] + U(rng) * (st.Q[static_cast<std::size_t>((k + 1) % 6)] - st.Q[static_cast<std::size_t>(k)]);
      out.push_back(p + U(rng) * st.delta * random_unit_normal(rng, Vec5::Zero()));
    }
  }
  return out;
}

HomeoStep build_step(int i, const g5::TubeSetFamily& tubes, const r5::Diffeo5& Gi, const r5::Diffeo5& Gnext,
                     const StepOptions& opt) {
  if (i < 1 || i > static_cast<int>(tubes.steps.size())) throw ValidationError("build_step: step index out of range");
  if (Gi.placement().count != tubes.placement.count || Gnext.placement().count != tubes.placement.count) {
    throw ValidationError("build_step: maps and tubes use different placements");
  }
  if (opt.samples < 1) throw ValidationError("build_step: need at least one sample");
  const auto& st = tubes.steps[static_cast<std::size_t>(i - 1)];
  const auto& P = tubes.placement;
  const auto fs = std::make_shared<const r5::Diffeo5>(Gi);
  const auto ft = std::make_shared<const r5::Diffeo5>(Gnext);
  const auto samples = support_samples(st, Gi, opt.samples, opt.seed + static_cast<unsigned>(i));

  double scale = 1.0;
  std::string last;
  for (int round = 0; round <= opt.max_halvings; ++round, scale *= 0.5) {
    HomeoStep h;
    h.index = i;
    h.n = st.n;
    h.m = st.m;
    const auto inc = incident_cigars(st, P, scale);
    std::vector<g5::Cigar> bases;
    std::vector<double> deltas;
    std::vector<std::pair<CigarState, CigarState>> pairs;
    std::vector<AffineMap> transports;
    for (const auto& c : inc) {
      bases.push_back(P.edge_cigar(c.a, c.b, P.eps_base(c.a, c.b)));
      deltas.push_back(c.delta);
      pairs.push_back({CigarState{fs, c.a, c.b, c.delta}, CigarState{ft, c.ta, c.tb, c.delta}});
      transports.push_back(affine_of(transport_for(st, c.a, c.b)));
    }
    h.shrink = shrink_map(bases, deltas);
    h.up = PushMap(st, g5::PushKind::Up);
    h.across = PushMap(st, g5::PushKind::Across);
    try {
      h.match = matching_map(pairs, transports, opt.mu);
    } catch (const ConstructionError& e) {
      last = e.what();
      continue;
    }

    StepReport& rep = h.report;
    rep.delta_scale = scale;
    rep.samples = static_cast<int>(samples.size());
    double eps_min = kInf, eps_max = 0.0;
    for (const auto& c : inc) {
      eps_min = std::min(eps_min, P.eps_dyn(c.a, c.b));
      eps_max = std::max(eps_max, P.eps_of(c.a, c.b));
    }
    rep.displacement_bound = 2.0 * eps_max + 2.0 * P.eps_of(st.n, st.m) + 6.0 * st.d;

    std::vector<double> res(samples.size()), rel(samples.size()), disp(samples.size());
    parallel_for(static_cast<int>(samples.size()), [&](int j) {
      const auto k = static_cast<std::size_t>(j);
      const Vec5& x = samples[k];
      const Vec5 hx = h.apply(x);
      res[k] = (h.apply(Gi.eval(x)) - Gnext.eval(hx)).norm();
      const auto loc = Gnext.locate(hx);
      rel[k] = res[k] / (loc ? P.eps_dyn(loc->a, loc->b) : eps_min);
      disp[k] = (hx - x).norm();
    });
    const auto jmax = static_cast<std::size_t>(std::max_element(res.begin(), res.end()) - res.begin());
    rep.residual = res[jmax];
    rep.argmax = samples[jmax];
    rep.relative_residual = *std::max_element(rel.begin(), rel.end());
    rep.displacement = *std::max_element(disp.begin(), disp.end());

    for (int v = 1; v <= P.count; ++v) {
      const int tv = v == st.n ? st.m : v == st.m ? st.n : v;
      rep.vertex_error = std::max(rep.vertex_error, (h.apply(P.vertex(v)) - P.vertex(tv)).norm());
    }
    // Affinity of the pushes on the shrunk cores.
    std::mt19937_64 rng(opt.seed ^ 0x9e3779b9u);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int j = 0; j < 400; ++j) {
      const auto& c = inc[static_cast<std::size_t>(j) % inc.size()];
      const g5::Cigar tiny = P.edge_cigar(c.a, c.b, c.delta);
      const Vec5 z = tiny.point(-1.0 + 2.0 * U(rng), 0.5 * U(rng), random_unit_normal(rng, tiny.axis()));
      const Vec5 pushed = h.up.apply(h.across.apply(h.up.apply(z)));
      const Vec5 affine = transport_for(st, c.a, c.b).apply(z);
      rep.affinity_deviation = std::max(rep.affinity_deviation, (pushed - affine).norm() / c.delta);
    }
    const auto su = h.up.stats(), sa = h.across.stats();
    rep.push_stats = {su.closed_form + sa.closed_form, su.integrated + sa.integrated, su.identity + sa.identity};

    if (rep.residual < opt.residual_tol && rep.displacement <= rep.displacement_bound) return h;
    last = "residual " + std::to_string(rep.residual) + ", displacement " + std::to_string(rep.displacement);
  }
  throw ConstructionError("step " + std::to_string(i) + ": certification failed after halving (" + last + ")");
}

// ---------------------------------------------------------------------------
// Assemblies.

Vec5 Assembly::apply_prefix(const Vec5& z, std::size_t count) const {
  if (count > steps.size()) throw ValidationError("assembly prefix longer than the assembly");
  Vec5 y = z;
  for (std::size_t i = 0; i < count; ++i) y = steps[i].apply(y);
  return y;
}

Vec5 Assembly::apply(const Vec5& z) const { return apply_prefix(z, steps.size()); }

double Assembly::displacement_sum() const {
  double s = 0.0;
  for (const auto& h : steps) s += h.report.displacement;
  return s;
}

double Assembly::displacement_bound_sum() const {
  double s = 0.0;
  for (const auto& h : steps) s += h.report.displacement_bound;
  return s;
}

Assembly assemble(const GraphCode& e1, const GraphCode& e2, const VertexBijection& iso,
                  const g5::VertexPlacement& placement, const AssemblyOptions& opt) {
  if (e1.order() != e2.order() || static_cast<int>(e1.order()) != placement.count) {
    throw ValidationError("assemble: graph orders must match the placement");
  }
  if (iso.size() != e1.order() || !verify_iso(e1, e2, iso)) {
    throw ValidationError("assemble: the bijection is not an isomorphism");
  }
  Assembly out;
  out.e1 = e1;
  out.e2 = e2;
  out.iso = iso;
  out.seq = perm::decompose(perm::Permutation::from_bijection(iso));
  const auto graphs = perm::interpolate_graphs(e1, out.seq);
  if (!(graphs.back() == e2)) throw ConstructionError("assemble: interpolating graphs do not end at e2");
  for (const auto& g : graphs) out.G.push_back(r5::Diffeo5::build_R(g, placement, opt.profile));
  if (out.seq.size() == 0) {
    out.tubes.placement = placement;
    return out;
  }
  out.tubes = g5::build_tubes(placement, out.seq);
  for (std::size_t i = 0; i < out.seq.size(); ++i) {
    try {
      out.steps.push_back(build_step(static_cast<int>(i + 1), out.tubes, out.G[i], out.G[i + 1], opt.step));
    } catch (const ConstructionError& e) {
      throw ConstructionError("assemble: step " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

Assembly assemble(const GraphCode& e1, const GraphCode& e2, const g5::VertexPlacement& placement,
                  const AssemblyOptions& opt) {
  if (e1.order() != e2.order()) throw ValidationError("assemble: graph orders differ");
  const auto iso = graph_iso(e1, e2);
  if (!iso) throw ConstructionError("assemble: graphs are not isomorphic");
  return assemble(e1, e2, *iso, placement, opt);
}

MotionCertificate finite_motion_certificate(const Assembly& asm_, const Vec5& x) {
  MotionCertificate c;
  Vec5 y = x;
  for (std::size_t i = 0; i < asm_.steps.size(); ++i) {
    const Vec5 next = asm_.steps[i].apply(y);
    if (next != y) {
      c.stage = static_cast<int>(i + 1);
      c.visited.push_back(static_cast<int>(i + 1));
    }
    y = next;
  }
  return c;
}

namespace {

// Samples for whole-assembly probes: every step's support plus the dynamic
// cigars of the first map.
std::vector<Vec5> assembly_samples(const Assembly& a, int count, unsigned seed) {
  std::vector<Vec5> out;
  const auto& G = a.G.front();
  const int V = G.placement().count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int per_step = a.steps.empty() ? 0 : count / (2 * static_cast<int>(a.steps.size()));
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto s = support_samples(a.tubes.steps[i], a.G[i], per_step, seed + 7919u * static_cast<unsigned>(i + 1));
    out.insert(out.end(), s.begin(), s.end());
  }
  while (static_cast<int>(out.size()) < count) {
    const int p = static_cast<int>(U(rng) * V * (V - 1) / 2);
    int a0 = 1, b0 = 2, idx = 0;
    for (int x = 1; x <= V; ++x)
      for (int y = x + 1; y <= V; ++y)
        if (idx++ == p) a0 = x, b0 = y;
    const g5::Cigar c = G.cigar(a0, b0);
    out.push_back(c.point(-1.0 + 2.0 * U(rng), U(rng), random_unit_normal(rng, c.axis())));
  }
  return out;
}

SampleReport max_over(const std::vector<Vec5>& xs, const std::vector<double>& v) {
  SampleReport r;
  r.samples = static_cast<int>(xs.size());
  if (xs.empty()) return r;
  const auto j = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  r.value = v[j];
  r.argmax = xs[j];
  return r;
}

}  // namespace

SampleReport end_to_end_residual(const Assembly& asm_, int samples, unsigned seed) {
  if (samples < 1) throw ValidationError("need at least one sample");
  const auto xs = assembly_samples(asm_, samples, seed);
  const auto& F1 = asm_.G.front();
  const auto& F2 = asm_.G.back();
  std::vector<double> r(xs.size());
  parallel_for(static_cast<int>(xs.size()), [&](int j) {
    const Vec5& x = xs[static_cast<std::size_t>(j)];
    r[static_cast<std::size_t>(j)] = (asm_.apply(F1.eval(x)) - F2.eval(asm_.apply(x))).norm();
  });
  return max_over(xs, r);
}

SampleReport pos_drift(const Assembly& asm_, int samples, unsigned seed) {
  if (samples < 1) throw ValidationError("need at least one sample");
  const auto& G = asm_.G.front();
  const auto& P = G.placement();
  const int V = P.count;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Vec5> xs;
  std::vector<std::array<int, 2>> ends;
  std::vector<double> t0;
  for (int j = 0; j < samples; ++j) {
    int a = 1 + static_cast<int>(U(rng) * V), b = 1 + static_cast<int>(U(rng) * (V - 1));
    a = std::min(a, V);
    b = std::min(b, V - 1);
    if (b >= a) ++b;
    const g5::Cigar c = G.cigar(a, b);
    const double t = -0.999 + 1.998 * U(rng);
    xs.push_back(c.point(t, U(rng), random_unit_normal(rng, c.axis())));
    ends.push_back({a, b});
    t0.push_back(t);
  }
  std::vector<double> drift(xs.size(), 0.0);
  parallel_for(samples, [&](int j) {
    const auto sj = static_cast<std::size_t>(j);
    Vec5 y = xs[sj];
    int a = ends[sj][0], b = ends[sj][1];
    const double pos0 = g5::Cigar(P.vertex(a), P.vertex(b), 1.0).param(y);
    for (std::size_t i = 0; i < asm_.steps.size(); ++i) {
      y = asm_.steps[i].apply(y);
      const auto& tr = asm_.seq.steps[i];
      a = tr.apply(a);
      b = tr.apply(b);
      const double pos = g5::Cigar(P.vertex(a), P.vertex(b), 1.0).param(y);
      drift[sj] = std::max(drift[sj], std::abs(pos - pos0));
    }
  });
  return max_over(xs, drift);
}

SampleReport injectivity_probe(const Assembly& asm_, int samples, double sep, unsigned seed) {
  if (samples < 1 || !(sep > 0.0)) throw ValidationError("injectivity probe needs samples and a positive separation");
  const auto xs = assembly_samples(asm_, samples, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Vec5> ys;
  for (const auto& x : xs) ys.push_back(x + sep * (1.0 + U(rng)) * random_unit_normal(rng, Vec5::Zero()));
  std::vector<double> neg(xs.size());
  parallel_for(static_cast<int>(xs.size()), [&](int j) {
    const auto sj = static_cast<std::size_t>(j);
    neg[sj] = -(asm_.apply(xs[sj]) - asm_.apply(ys[sj])).norm();
  });
  auto r = max_over(xs, neg);
  r.value = -r.value;
  return r;
}

}  // namespace conjury::c5
