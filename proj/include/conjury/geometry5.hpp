#pragma once

// Geometry of the embedded graph in 5-space: vertex placement, cigars, affine
// displacement fields, swept tube sets and their disjointness certificates.
// Coordinates 0..2 span E3, coordinates 3..4 span E2.

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "conjury/codes.hpp"
#include "conjury/permdec.hpp"

namespace conjury::g5 {

using Vec5 = Eigen::Matrix<double, 5, 1>;

Vec5 in_e3(double a, double b, double c);
Vec5 in_e2(double a, double b);

inline double psi(double t) { return 0.5 * (1.0 - t * t); }

class Cigar {
 public:
  Cigar() = default;
  Cigar(const Vec5& x, const Vec5& y, double eps);

  const Vec5& x() const { return x_; }
  const Vec5& y() const { return y_; }
  double eps() const { return eps_; }
  double length() const { return 2.0 * half_; }
  const Vec5& axis() const { return axis_; }
  Vec5 center() const { return 0.5 * (x_ + y_); }
  Vec5 gamma(double t) const { return center() + t * half_ * axis_; }

  /// Unclamped slice parameter of the orthogonal projection onto the axis.
  double param(const Vec5& z) const { return (z - center()).dot(axis_) / half_; }
  /// Component of z - gamma(param(z)) normal to the axis.
  Vec5 normal(const Vec5& z) const;
  /// rho / (eps psi(t)); +infinity outside the open slab |t| < 1.
  double gauge(const Vec5& z) const;
  bool contains(const Vec5& z) const { return gauge(z) < 1.0; }
  std::optional<double> pos(const Vec5& z) const;
  /// Point at slice t, normalized radius s, unit normal direction e.
  Vec5 point(double t, double s, const Vec5& e) const { return gamma(t) + s * eps_ * psi(t) * e; }

  /// Minimizer over s in [lo, hi] of the convex defect rho - eps psi(t)
  /// along the line z - s w.
  double line_argmin(const Vec5& z, const Vec5& w, double lo, double hi) const;

 private:
  Vec5 x_ = Vec5::Zero();
  Vec5 y_ = Vec5::Zero();
  double eps_ = 0.0;
  double half_ = 0.0;
  Vec5 axis_ = Vec5::Zero();
};

/// v(z) = ell(z) w with ell affine, ell(anchor) = 0, ell(y) = 1, ell(w) = 0.
struct AffineField {
  Vec5 anchor = Vec5::Zero();
  Vec5 a = Vec5::Zero();  // gradient of ell
  Vec5 w = Vec5::Zero();
  double ell(const Vec5& z) const { return a.dot(z - anchor); }
  Vec5 value(const Vec5& z) const { return ell(z) * w; }
};

/// Field vanishing on the affine subspace through x orthogonal to the plane
/// of x, y, y + w. Throws ValidationError when y - x is parallel to w.
AffineField make_affine_field(const Vec5& x, const Vec5& y, const Vec5& w);

/// Closed-form time-t flow z + t ell(z) w.
Vec5 affine_flow(const AffineField& field, const Vec5& z, double t);

// ---------------------------------------------------------------------------
// Distance and angle primitives used by the certificates.

struct ClosestPair {
  double distance = 0.0;
  Vec5 p = Vec5::Zero();
  Vec5 q = Vec5::Zero();
  std::array<double, 3> bary_p{};
  std::array<double, 3> bary_q{};
};

using Triangle = std::array<Vec5, 3>;

/// Exact closest pair between two (possibly degenerate) triangles.
ClosestPair triangle_distance(const Triangle& a, const Triangle& b);
double segment_distance(const Vec5& a0, const Vec5& a1, const Vec5& b0, const Vec5& b1);
double point_segment_distance(const Vec5& p, const Vec5& a, const Vec5& b);
double angle_between(const Vec5& u, const Vec5& v);

/// Great-circle arc of directions start -> toward, of angular length span.
struct Arc {
  Vec5 start = Vec5::Zero();
  Vec5 toward = Vec5::Zero();  // unit, orthogonal to start
  double span = 0.0;
  Vec5 at(double phi) const { return std::cos(phi) * start + std::sin(phi) * toward; }
};
using Cone = std::vector<Arc>;

Arc make_arc(const Vec5& from, const Vec5& to);
/// Minimum angle between directions of two arcs.
double arc_angle(const Arc& a, const Arc& b);
double cone_angle(const Cone& a, const Cone& b);
/// Tangent cone of a triangle at the point with barycentric coordinates bary.
Cone tangent_cone(const Triangle& tri, const std::array<double, 3>& bary);

/// Skeleton triangle of a thin set: the set lies within `thickness` of the
/// triangle, and within angle `spread` of the triangle's tangent cone when
/// seen from any point of its pinched locus (vertex 0 if pinched_vertex,
/// the edge 1-2 if pinched_edge).
struct Piece {
  Triangle tri{};
  double thickness = 0.0;
  double spread = 0.0;
  bool pinched_vertex = false;
  bool pinched_edge = false;
  std::string label;
};

struct Separation {
  bool ok = false;
  double margin = 0.0;
  std::string mode;  // "distance", "angle" or "dihedral"
};

/// Certifies that the interiors of two thin sets are disjoint.
Separation separate(const Piece& a, const Piece& b);

Piece cigar_piece(const Cigar& c, std::string label);

// ---------------------------------------------------------------------------
// Swept sets Delta: union over t in the window of the time-t affine flow
// applied to an open cigar.

struct SweptSet {
  Cigar cigar;
  AffineField field;
  double t0 = 0.0;
  double t1 = 1.0;
  double margin = 0.05;  // smooth cutoff collar, in units of t

  struct LinePosition {
    double ell = 0.0;     // ell(z), constant along the sweep lines
    double t = 0.0;       // sweep time at which the line meets the cigar best
    double gauge = 0.0;   // cigar gauge at that point
  };
  /// Locates z on its sweep line through the cigar (t unrestricted).
  LinePosition locate(const Vec5& z) const;
  bool contains(const Vec5& z) const;
  std::vector<Piece> pieces(const std::string& label) const;
  double thickness() const;
  double spread() const;
};

// ---------------------------------------------------------------------------
// Vertex placement.

struct VertexPlacement {
  int count = 0;
  Vec5 r = Vec5::Zero();
  std::vector<Vec5> x;  // x[n-1] is vertex n
  std::vector<double> eta;          // eta_n
  std::vector<double> needle_angle; // theta-tilde_n
  std::vector<double> needle_size;  // theta_n
  std::vector<double> rho;          // rho(n)
  Eigen::MatrixXd alpha;            // alpha(m,n), symmetric, 1-based through accessors
  Eigen::MatrixXd eps;              // eps(m,n)
  double min_collinear = 0.0;       // normalized determinant margins
  double min_coplanar = 0.0;
  int attempt = 0;

  /// Vertex n for n >= 1, the limit point r for n = 0.
  const Vec5& vertex(int n) const;
  double alpha_of(int m, int n) const { return alpha(m - 1, n - 1); }
  double eps_of(int m, int n) const { return eps(m - 1, n - 1); }
  double eps_dyn(int m, int n) const { return eps_of(m, n) / 8.0; }   // eps'
  double eps_dyn2(int m, int n) const { return eps_dyn(m, n) / 2.0; } // eps''
  double eps_base(int m, int n) const { return eps_of(m, n) / 2.0; }  // size of the base cigar
  Cigar edge_cigar(int m, int n, double size) const;
  Cigar needle(int n) const;
};

VertexPlacement place_vertices(int count, double margin = 1e-9);

/// w_i = (cos pi q_i, sin pi q_i) in E2 with q_i = 2^(-i-1), i 1-based.
double q_of(int i);
Vec5 w_of(int i);

// ---------------------------------------------------------------------------
// Tube sets for a transposition sequence.

enum class PushKind { Up, Across };

/// One sweep component of a push. anchor is a vertex index, 0 for the limit
/// point r, or -1 for the cigar of the transposed pair itself.
struct PushComponent {
  int anchor = 0;
  int target = 0;  // vertex whose cigar the component carries
  SweptSet sweep;
};

/// Tube around an apex path; points in it move by value times the push vector.
struct ApexTube {
  Vec5 p0 = Vec5::Zero();
  Vec5 p1 = Vec5::Zero();
  double radius = 0.0;
  double value = 0.0;
  bool contains(const Vec5& z) const { return point_segment_distance(z, p0, p1) < radius; }
};

/// Affine transport of one incident cigar through up, across, up. Endpoint
/// index 0 denotes r.
struct Transport {
  int a = 0, b = 0;    // source cigar, oriented
  int ta = 0, tb = 0;  // target cigar, oriented so that a -> ta, b -> tb
  std::array<AffineField, 3> fields{};
  Vec5 apply(const Vec5& z) const;
  /// Linear part of the composite.
  Eigen::Matrix<double, 5, 5> linear() const;
};

struct StepTubes {
  int index = 0;  // 1-based step index
  int n = 0;
  int m = 0;
  double d = 0.0;
  double q = 0.0;
  double beta = 0.0;
  Vec5 w = Vec5::Zero();
  std::array<Vec5, 6> Q{};  // x_n, x_n+dw, x_m+dw, x_m, x_m-dw, x_n-dw
  double delta = 0.0;
  double xi_pair = 0.0;
  std::map<int, double> xi;  // per anchor, 0 = r
  Vec5 up_vector = Vec5::Zero();
  Vec5 across_vector = Vec5::Zero();
  std::vector<PushComponent> up;
  std::vector<PushComponent> across;
  std::vector<ApexTube> up_tubes;
  std::vector<ApexTube> across_tubes;
  std::vector<Transport> transports;

  bool in_V(int anchor, const Vec5& z) const;
  bool in_W(const Vec5& z) const;
  bool in_BQ(const Vec5& z) const;
  bool in_support(const Vec5& z) const { return in_BQ(z) || in_W(z) || in_any_V(z); }
  bool in_any_V(const Vec5& z) const;
  std::vector<int> anchors() const;
};

struct CertificateClause {
  std::string name;
  bool pass = false;
  double margin = 0.0;
  std::string detail;
};

struct TubeSizes {
  double shrink = 0.5;      // halving factor
  int max_rounds = 40;
  double window_margin = 0.05;
};

struct TubeSetFamily {
  VertexPlacement placement;
  perm::TranspositionSeq seq;
  std::vector<StepTubes> steps;
  std::vector<Cigar> needles;  // needles[n-1]
  std::vector<CertificateClause> clauses;
  int rounds = 0;

  bool in_cone(int j, const Eigen::Vector2d& v) const;
  bool certified() const;
  double sum_d() const;
};

/// Builds and certifies all tube sets; throws ConstructionError naming the
/// violated clause when the halving budget is exhausted.
TubeSetFamily build_tubes(const VertexPlacement& placement, const perm::TranspositionSeq& seq,
                          const TubeSizes& sizes = {});

/// Certificates on the placement alone: cigar disjointness and needles.
std::vector<CertificateClause> placement_certificates(const VertexPlacement& placement);

/// Sampled Pos distortion along the transport chain of step i.
double pos_distortion(const StepTubes& step, const VertexPlacement& placement, int samples, unsigned seed);

}  // namespace conjury::g5
