#pragma once

// Graph-to-diffeomorphism reduction in 5-space: each pair of placed vertices
// carries an attracting (edge) or repelling (non-edge) radial flow inside its
// dynamic cigar, damped by a factor that vanishes flatly on the needles.

#include <optional>
#include <vector>

#include "conjury/codes.hpp"
#include "conjury/geometry5.hpp"

namespace conjury::r5 {

using g5::Vec5;

enum class Sign { Plus, Minus };
enum class ProfileKind { Standard, Steep };

const char* sign_name(Sign s);
const char* profile_name(ProfileKind k);
ProfileKind parse_profile(const std::string& s);

/// lambda(nu, t) = lambda_nu(nu) * lambda_t(t); both flat bumps on (-1, 1).
struct FlowProfile {
  ProfileKind kind = ProfileKind::Standard;
  double lambda_nu(double nu) const;
  double lambda_t(double t) const;
  double lambda(double nu, double t) const { return lambda_nu(nu) * lambda_t(t); }
};

/// Point of a dynamic cigar in cigar coordinates.
struct CigarPoint {
  int a = 0, b = 0;  // a < b
  double t = 0.0;
  double nu = 0.0;   // normalized radius in the dynamic cigar
  Vec5 e = Vec5::Zero();  // unit normal direction (zero on the centerline)
};

class Diffeo5 {
 public:
  static Diffeo5 build_R(const GraphCode& g, const g5::VertexPlacement& placement,
                         ProfileKind profile = ProfileKind::Standard);

  const g5::VertexPlacement& placement() const { return placement_; }
  const GraphCode& graph() const { return graph_; }
  const FlowProfile& profile() const { return profile_; }
  Sign sign(int a, int b) const;
  /// Dynamic cigar of size eps'(a, b).
  g5::Cigar cigar(int a, int b) const;
  double collar() const { return collar_; }

  /// Distance to the truncated needle set.
  double needle_distance(const Vec5& z) const;
  double theta(const Vec5& z) const;
  /// log theta, finite wherever theta underflows but the point is off the needles.
  double log_theta(const Vec5& z) const;

  std::optional<CigarPoint> locate(const Vec5& z) const;
  Vec5 point(const CigarPoint& c) const;

  /// Unsigned radial rate Theta * lambda at a cigar point.
  double rate(int a, int b, double t, double nu, const Vec5& e) const;

  /// Time-1 map, integrating d(log nu)/dtau = -sign * Theta * lambda.
  Vec5 eval(const Vec5& p, double tol = 1e-10) const;
  /// Time-tau map of the same flow (tau may be negative).
  Vec5 flow(const Vec5& p, double tau, double tol = 1e-10) const;

 private:
  g5::VertexPlacement placement_;
  GraphCode graph_;
  FlowProfile profile_;
  double collar_ = 0.0;
};

enum class OrbitClass { Fixed, ToCenterline, ToBoundary, Undecided };
const char* orbit_class_name(OrbitClass c);

OrbitClass orbit_class(const Diffeo5& f, const Vec5& p, int max_iter = 1000);

/// Reads the graph back from the sign of the radial displacement at the
/// mid-slice, half-radius point of every cigar.
GraphCode edge_detect(const Diffeo5& f, double tol = 1e-8);

struct DecayRow5 {
  int order = 0;
  std::vector<double> scales;
  std::vector<double> ratios;
  bool non_increasing = false;
};

/// Sup of the displacement over cigar points within distance s of center,
/// divided by s^k.
std::vector<DecayRow5> displacement_decay(const Diffeo5& f, const Vec5& center, const std::vector<int>& orders,
                                          const std::vector<double>& scales);

}  // namespace conjury::r5
