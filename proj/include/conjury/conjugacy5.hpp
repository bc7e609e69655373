#pragma once

// Constructive conjugacy between the 5-space maps of isomorphic graphs: one
// homeomorphism per transposition, expand * match * up * across * up * shrink,
// composed lazily into an assembly.

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conjury/codes.hpp"
#include "conjury/geometry5.hpp"
#include "conjury/permdec.hpp"
#include "conjury/reduction5.hpp"

namespace conjury::c5 {

using g5::Vec5;
using Mat5 = Eigen::Matrix<double, 5, 5>;

// ---------------------------------------------------------------------------
// Shrink / expand.

/// Radial piecewise-linear map on one base cigar: normalized radius
/// [0, 1/2] -> [0, c] and [1/2, 1] -> [c, 1], with c = delta / eps.
struct ShrinkEntry {
  g5::Cigar base;
  double delta = 0.0;
  double ratio() const { return delta / base.eps(); }
};

class ShrinkMap {
 public:
  ShrinkMap() = default;
  explicit ShrinkMap(std::vector<ShrinkEntry> entries) : entries_(std::move(entries)) {}

  Vec5 apply(const Vec5& z) const;
  /// Exact radial inverse.
  Vec5 expand(const Vec5& z) const;
  bool in_support(const Vec5& z) const;
  const std::vector<ShrinkEntry>& entries() const { return entries_; }

 private:
  std::vector<ShrinkEntry> entries_;
};

/// Throws ValidationError unless 0 < delta < eps / 2 for every cigar.
ShrinkMap shrink_map(const std::vector<g5::Cigar>& cigars, const std::vector<double>& delta);

// ---------------------------------------------------------------------------
// Pushes: time-one shift along Psi * u for a fixed push direction u.

struct PushStats {
  long closed_form = 0;
  long integrated = 0;
  long identity = 0;
};

class PushMap {
 public:
  PushMap() = default;
  PushMap(const g5::StepTubes& step, g5::PushKind kind, double tol = 1e-10);

  /// Scalar multiplier of u at z.
  double psi(const Vec5& z) const;
  Vec5 apply(const Vec5& z) const;
  /// Inverse map (time minus one).
  Vec5 inverse(const Vec5& z) const;
  bool in_support(const Vec5& z) const;
  const Vec5& direction() const { return u_; }
  PushStats stats() const;

 private:
  struct Box {
    Vec5 lo, hi;
    bool contains(const Vec5& z) const;
  };
  struct Part {
    g5::SweptSet sweep;
    double sign = 1.0;  // w = sign * u
    Box box;
    // The sweep lies within eps/2 of the 2-plane through `origin` spanned by `plane`.
    Vec5 origin = Vec5::Zero();
    Eigen::Matrix<double, 5, 2> plane;
    bool near(const Vec5& z) const;
  };
  struct Tube {
    g5::ApexTube tube;
    Box box;
  };
  Vec5 shift(const Vec5& z, double tau) const;

  Vec5 u_ = Vec5::Zero();
  std::vector<Part> parts_;
  std::vector<Tube> tubes_;
  Box all_;
  double tol_ = 1e-12;
  struct Counters {
    std::atomic<long> closed_form{0}, integrated{0}, identity{0};
  };
  std::shared_ptr<Counters> counters_ = std::make_shared<Counters>();
};

PushMap tube_push(const g5::StepTubes& step, g5::PushKind kind);

// ---------------------------------------------------------------------------
// Matching: affine normalizer followed by a ray-wise flow-time conjugation.

/// Dynamics of a Diffeo5 on the oriented cigar (a, b), radially rescaled into
/// the cigar of size delta so that normalized radius nu of the dynamic cigar
/// sits at gauge nu / 2.
struct CigarState {
  std::shared_ptr<const r5::Diffeo5> f;
  int a = 0;
  int b = 0;
  double delta = 0.0;
  g5::Cigar tiny() const;
  g5::Cigar base() const;
};

struct AffineMap {
  Mat5 lin = Mat5::Identity();
  Vec5 offset = Vec5::Zero();
  Vec5 apply(const Vec5& z) const { return lin * z + offset; }
  static AffineMap identity() { return {}; }
};

/// One matched cigar: source state transported by `transport` onto target.
class MatchingPiece {
 public:
  MatchingPiece(CigarState src, CigarState tgt, const AffineMap& transport, double tol = 1e-12);

  /// Blended affine normalizer L-hat; equals M * transport^-1 near the target core.
  Vec5 normalize(const Vec5& z) const;
  Vec5 normalize_inverse(const Vec5& z) const;
  /// Ray-wise conjugation h* inside the target dynamic core.
  Vec5 conjugate(const Vec5& z) const;
  Vec5 apply(const Vec5& z) const { return conjugate(normalize(z)); }
  bool in_support(const Vec5& z) const;

  /// M: source tiny cigar -> target tiny cigar, slice and gauge preserving.
  const AffineMap& cigar_map() const { return M_; }
  const AffineMap& normalizer() const { return L_; }
  /// Operator norm of log of the normalizer's linear part.
  double log_norm() const { return X_.norm(); }
  const CigarState& source() const { return src_; }
  const CigarState& target() const { return tgt_; }

 private:
  double flow_time_match(double nu, double t, const Vec5& e_src, const Vec5& e_tgt) const;
  Vec5 blended_flow(const Vec5& z, double sign) const;

  CigarState src_, tgt_;
  g5::Cigar tiny_src_, tiny_tgt_, base_tgt_;
  AffineMap M_, L_, L_inv_;
  Mat5 X_ = Mat5::Zero();
  Mat5 M_normal_inv_ = Mat5::Identity();  // target normal -> source normal direction
  std::vector<Mat5> path_;                // exp(k X / 4), k = 0..4
  double tol_;
};

class MatchingMap {
 public:
  MatchingMap() = default;
  explicit MatchingMap(std::vector<MatchingPiece> pieces) : pieces_(std::move(pieces)) {}
  Vec5 apply(const Vec5& z) const;
  bool in_support(const Vec5& z) const;
  const std::vector<MatchingPiece>& pieces() const { return pieces_; }
  /// Sampled sup of |h-hat(z) - z| over the target base cigars.
  double displacement(int samples, unsigned seed) const;

 private:
  std::vector<MatchingPiece> pieces_;
};

/// Rejects (ValidationError) when the two states carry different signs.
MatchingMap matching_map(const std::vector<std::pair<CigarState, CigarState>>& pairs,
                         const std::vector<AffineMap>& transports, double mu = 1e-3);

// ---------------------------------------------------------------------------
// Steps and assemblies.

struct StepOptions {
  int samples = 10000;
  double residual_tol = 1e-6;
  double mu = 1e-3;
  unsigned seed = 1;
  int max_halvings = 6;
};

struct StepReport {
  double residual = 0.0;           // absolute, length units
  double relative_residual = 0.0;  // per-sample residual over the size of the target cigar at h(x)
  Vec5 argmax = Vec5::Zero();
  int samples = 0;
  double displacement = 0.0;       // sampled sup |h - id|
  double displacement_bound = 0.0; // 2 max eps + 2 eps + 6 d
  double affinity_deviation = 0.0; // relative deviation of the pushes from the transport on the cores
  double vertex_error = 0.0;
  double delta_scale = 1.0;        // product of halvings applied to the core sizes
  PushStats push_stats;
};

class HomeoStep {
 public:
  int index = 0;
  int n = 0;
  int m = 0;
  ShrinkMap shrink;
  PushMap up;
  PushMap across;
  MatchingMap match;
  StepReport report;

  Vec5 apply(const Vec5& z) const;
  /// Images after each of the six parts.
  std::array<Vec5, 6> trace(const Vec5& z) const;
  bool in_support(const Vec5& z) const;
};

/// Samples points of the step support, biased toward the incident dynamic cigars.
std::vector<Vec5> support_samples(const g5::StepTubes& st, const r5::Diffeo5& G, int count, unsigned seed);

HomeoStep build_step(int i, const g5::TubeSetFamily& tubes, const r5::Diffeo5& Gi, const r5::Diffeo5& Gnext,
                     const StepOptions& opt = {});

struct Assembly {
  GraphCode e1, e2;
  VertexBijection iso;
  perm::TranspositionSeq seq;
  g5::TubeSetFamily tubes;
  std::vector<r5::Diffeo5> G;  // G[0] = F1, G[K] = F2
  std::vector<HomeoStep> steps;

  std::size_t size() const { return steps.size(); }
  Vec5 apply(const Vec5& z) const;
  Vec5 apply_prefix(const Vec5& z, std::size_t count) const;
  double displacement_sum() const;
  double displacement_bound_sum() const;
};

struct AssemblyOptions {
  StepOptions step;
  r5::ProfileKind profile = r5::ProfileKind::Standard;
};

/// Certifies iso with the codes oracle (ValidationError otherwise).
Assembly assemble(const GraphCode& e1, const GraphCode& e2, const VertexBijection& iso,
                  const g5::VertexPlacement& placement, const AssemblyOptions& opt = {});
/// Finds the isomorphism with the codes oracle; ConstructionError when none exists.
Assembly assemble(const GraphCode& e1, const GraphCode& e2, const g5::VertexPlacement& placement,
                  const AssemblyOptions& opt = {});

struct MotionCertificate {
  int stage = 0;             // N(x)
  std::vector<int> visited;  // steps that moved the running image
};

MotionCertificate finite_motion_certificate(const Assembly& asm_, const Vec5& x);

struct SampleReport {
  double value = 0.0;
  Vec5 argmax = Vec5::Zero();
  int samples = 0;
};

/// max |H(F1 x) - F2(H x)| over samples drawn from the step supports and the dynamic cigars.
SampleReport end_to_end_residual(const Assembly& asm_, int samples, unsigned seed);
/// max |Pos drift| along sampled orbits of dynamic-cigar points.
SampleReport pos_drift(const Assembly& asm_, int samples, unsigned seed);
/// min |H x - H y| over random pairs at separation >= sep.
SampleReport injectivity_probe(const Assembly& asm_, int samples, double sep, unsigned seed);

}  // namespace conjury::c5
