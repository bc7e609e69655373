#pragma once

// Verification layer: conjugacy residuals, analytic period census, JSON and
// CSV formats shared by the command-line tool and the Python module.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "conjury/codes.hpp"
#include "conjury/conjugacy5.hpp"
#include "conjury/permdec.hpp"
#include "conjury/planar.hpp"
#include "conjury/reduction5.hpp"

namespace conjury::harness {

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Residuals.

struct ResidualReport {
  double max_residual = 0.0;
  std::vector<double> argmax;  // coordinates of the worst sample
  int samples = 0;
  double tolerance = 0.0;
  bool pass() const { return max_residual <= tolerance; }
  friend bool operator==(const ResidualReport&, const ResidualReport&) = default;
};

/// max ||h(f(x)) - g(h(x))|| over xs. A failing evaluation is rethrown with the
/// sample index, keeping its error category.
template <class P, class F, class G, class H>
ResidualReport conjugacy_residual(const F& f, const G& g, const H& h, const std::vector<P>& xs, double tol) {
  ResidualReport r;
  r.tolerance = tol;
  r.samples = static_cast<int>(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    double v = 0.0;
    try {
      v = (h(f(xs[j])) - g(h(xs[j]))).norm();
    } catch (const ValidationError& e) {
      throw ValidationError("sample " + std::to_string(j) + ": " + e.what());
    } catch (const std::exception& e) {
      throw ConstructionError("sample " + std::to_string(j) + ": " + e.what());
    }
    if (j == 0 || v > r.max_residual) {
      r.max_residual = v;
      r.argmax.assign(xs[j].data(), xs[j].data() + xs[j].size());
    }
  }
  return r;
}

/// Points of the actuator discs (90%) and of the layout's bounding box.
std::vector<planar::Point> planar_samples(const planar::PlanarLayout& layout, int count, unsigned seed);

ResidualReport planar_residual(const planar::PlanarDiffeo& f1, const planar::PlanarDiffeo& f2,
                               const planar::PlanarHomeo& h, int samples, unsigned seed, double tol = 1e-12);

/// End-to-end residual of an assembly; the default tolerance is K * 1e-6.
ResidualReport assembly_residual(const c5::Assembly& a, int samples, unsigned seed, double tol = -1.0);

// ---------------------------------------------------------------------------
// Census.

enum class RegionKind { FixedSet, PeriodicAnnulus };

struct RegionRecord {
  std::string id;
  RegionKind kind = RegionKind::FixedSet;
  std::int64_t period = 1;
  friend bool operator==(const RegionRecord&, const RegionRecord&) = default;
};

/// growth[n-1] = log(max(1, #records with period <= n)) / n for n = 1..horizon.
struct CensusReport {
  std::vector<RegionRecord> records;
  std::vector<double> growth;
  double growth_proxy() const { return growth.empty() ? 0.0 : growth.back(); }
  friend bool operator==(const CensusReport&, const CensusReport&) = default;
};

/// Periodic annuli of the rotation discs; a depth-0 map is the identity.
CensusReport census(const planar::PlanarDiffeo& f, int horizon = 0);
/// Fixed sets only: centerlines, cigar boundaries and the needles.
CensusReport census(const r5::Diffeo5& f, int horizon = 16);

// ---------------------------------------------------------------------------
// Descriptors and JSON.

struct PlanarDescriptor {
  BinaryCode code;  // depth = code length
  friend bool operator==(const PlanarDescriptor&, const PlanarDescriptor&) = default;
};

struct Diffeo5Descriptor {
  GraphCode graph;
  r5::ProfileKind profile = r5::ProfileKind::Standard;
  friend bool operator==(const Diffeo5Descriptor&, const Diffeo5Descriptor&) = default;
};

struct StepSummary {
  int index = 0, n = 0, m = 0;
  double residual = 0.0, relative_residual = 0.0, displacement = 0.0, displacement_bound = 0.0;
  double affinity_deviation = 0.0, vertex_error = 0.0, delta_scale = 1.0;
  friend bool operator==(const StepSummary&, const StepSummary&) = default;
};

struct AssemblyDescriptor {
  GraphCode e1, e2;
  VertexBijection iso;
  perm::TranspositionSeq seq;
  r5::ProfileKind profile = r5::ProfileKind::Standard;
  std::vector<StepSummary> steps;
  ResidualReport residual;
};

AssemblyDescriptor describe(const c5::Assembly& a, const ResidualReport& residual);

planar::PlanarDiffeo build(const PlanarDescriptor& d);
r5::Diffeo5 build(const Diffeo5Descriptor& d);

using nlohmann::json;

json to_json(const BinaryCode& c);
json to_json(const GraphCode& g);
json to_json(const perm::TranspositionSeq& s);
json to_json(const g5::VertexPlacement& p);
json to_json(const PlanarDescriptor& d);
json to_json(const Diffeo5Descriptor& d);
json to_json(const AssemblyDescriptor& d);
json to_json(const ResidualReport& r);
json to_json(const CensusReport& r);
json to_json(const perm::ContTable& t);

/// Each parser checks "type" and "format_version" and throws ValidationError
/// on any schema mismatch.
BinaryCode code_from_json(const json& j);
GraphCode graph_from_json(const json& j);
perm::TranspositionSeq seq_from_json(const json& j);
g5::VertexPlacement placement_from_json(const json& j);
PlanarDescriptor planar_from_json(const json& j);
Diffeo5Descriptor diffeo5_from_json(const json& j);
AssemblyDescriptor assembly_from_json(const json& j);
ResidualReport residual_from_json(const json& j);
CensusReport census_from_json(const json& j);

/// "(1 2 3)(4 5)" -> {{1,2,3},{4,5}}; commas are accepted as separators.
std::vector<std::vector<int>> parse_cycles(const std::string& text);
/// "1-2,2-3" -> {{1,2},{2,3}}.
std::vector<std::pair<int, int>> parse_edges(const std::string& text);

/// Value of the "type" field, or ValidationError.
std::string descriptor_type(const json& j);
json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

bool same_placement(const g5::VertexPlacement& a, const g5::VertexPlacement& b);
bool operator==(const AssemblyDescriptor& a, const AssemblyDescriptor& b);

// ---------------------------------------------------------------------------
// Orbit dumps: one CSV per orbit, header iter,x1..xd.

struct OrbitRow {
  int iter = 0;
  std::vector<double> x;
};
using Orbit = std::vector<OrbitRow>;

std::vector<Orbit> planar_orbits(const planar::PlanarDiffeo& f, int points, int iters, unsigned seed);
std::vector<Orbit> orbits5(const r5::Diffeo5& f, int points, int iters, unsigned seed);
std::string orbit_csv(const Orbit& orbit);
/// ValidationError on a malformed header, row width or non-finite value.
Orbit parse_orbit_csv(const std::string& text);

}  // namespace conjury::harness
