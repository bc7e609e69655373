#include "conjury/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace conjury::harness {

using g5::Vec5;

namespace {

json header(const char* type) { return json{{"type", type}, {"format_version", kFormatVersion}}; }

void expect(const json& j, const char* type) {
  if (!j.is_object()) throw ValidationError(std::string("expected a JSON object of type ") + type);
  if (!j.contains("format_version") || j["format_version"] != kFormatVersion) {
    throw ValidationError(std::string(type) + ": unsupported or missing format_version");
  }
  if (descriptor_type(j) != type) throw ValidationError(std::string("expected type ") + type + ", got " + descriptor_type(j));
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field ") + key + ": " + e.what());
  }
}

json vec_json(const Vec5& v) { return std::vector<double>(v.data(), v.data() + 5); }

Vec5 vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 5) throw ValidationError("expected a 5-vector");
  return Vec5(v.data());
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index n) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(rows.size()) != n) throw ValidationError("matrix has wrong row count");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) throw ValidationError("matrix has wrong column count");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

const char* kind_name(RegionKind k) { return k == RegionKind::FixedSet ? "fixed-set" : "periodic-annulus"; }

RegionKind parse_kind(const std::string& s) {
  if (s == "fixed-set") return RegionKind::FixedSet;
  if (s == "periodic-annulus") return RegionKind::PeriodicAnnulus;
  throw ValidationError("unknown region kind " + s);
}

void fill_growth(CensusReport& r, int horizon) {
  r.growth.clear();
  for (int n = 1; n <= horizon; ++n) {
    const auto count = std::count_if(r.records.begin(), r.records.end(), [&](const RegionRecord& rec) { return rec.period <= n; });
    r.growth.push_back(std::log(std::max<double>(1.0, static_cast<double>(count))) / n);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Residuals.

std::vector<planar::Point> planar_samples(const planar::PlanarLayout& layout, int count, unsigned seed) {
  if (count < 0) throw ValidationError("sample count must be non-negative");
  const auto f = planar::build(layout, BinaryCode(std::vector<std::uint8_t>(layout.depth(), 0)));
  const auto& acts = f.actuators();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  planar::Point lo = layout.a().cwiseMin(layout.b()), hi = layout.a().cwiseMax(layout.b());
  for (const auto& a : acts) {
    lo = lo.cwiseMin(a.center - planar::Point::Constant(a.radius));
    hi = hi.cwiseMax(a.center + planar::Point::Constant(a.radius));
  }
  const planar::Point pad = 0.1 * (hi - lo) + planar::Point::Constant(1e-3);
  lo -= pad;
  hi += pad;
  std::vector<planar::Point> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    if (!acts.empty() && i % 10 != 9) {
      const auto& a = acts[static_cast<std::size_t>(U(rng) * static_cast<double>(acts.size())) % acts.size()];
      const double rad = a.radius * std::sqrt(U(rng)), ang = 2.0 * M_PI * U(rng);
      out.push_back(a.center + rad * planar::Point(std::cos(ang), std::sin(ang)));
    } else {
      out.push_back(lo + (hi - lo).cwiseProduct(planar::Point(U(rng), U(rng))));
    }
  }
  return out;
}

ResidualReport planar_residual(const planar::PlanarDiffeo& f1, const planar::PlanarDiffeo& f2,
                               const planar::PlanarHomeo& h, int samples, unsigned seed, double tol) {
  if (!(f1.layout().depth() == f2.layout().depth())) throw ValidationError("planar maps have different depths");
  const auto xs = planar_samples(f1.layout(), samples, seed);
  return conjugacy_residual(
      [&](const planar::Point& p) { return f1.eval(p); }, [&](const planar::Point& p) { return f2.eval(p); },
      [&](const planar::Point& p) { return h.eval(p); }, xs, tol);
}

ResidualReport assembly_residual(const c5::Assembly& a, int samples, unsigned seed, double tol) {
  const auto r = c5::end_to_end_residual(a, samples, seed);
  ResidualReport out;
  out.max_residual = r.value;
  out.argmax.assign(r.argmax.data(), r.argmax.data() + 5);
  out.samples = r.samples;
  out.tolerance = tol >= 0.0 ? tol : std::max<double>(1.0, static_cast<double>(a.size())) * 1e-6;
  return out;
}

// ---------------------------------------------------------------------------
// Census.

CensusReport census(const planar::PlanarDiffeo& f, int horizon) {
  CensusReport r;
  if (f.layout().depth() == 0) {
    r.records.push_back({"plane", RegionKind::FixedSet, 1});
  } else {
    for (const auto& rp : planar::period_spectrum(f))
      r.records.push_back({rp.region.str(), RegionKind::PeriodicAnnulus, rp.minimal_period});
  }
  std::int64_t top = 1;
  for (const auto& rec : r.records) top = std::max(top, rec.period);
  fill_growth(r, horizon > 0 ? horizon : static_cast<int>(std::min<std::int64_t>(top, 1 << 20)));
  return r;
}

CensusReport census(const r5::Diffeo5& f, int horizon) {
  if (horizon < 1) throw ValidationError("census horizon must be positive");
  CensusReport r;
  const int V = f.placement().count;
  for (int a = 1; a <= V; ++a)
    for (int b = a + 1; b <= V; ++b) {
      const std::string pair = std::to_string(a) + "," + std::to_string(b);
      r.records.push_back({"centerline(" + pair + ")", RegionKind::FixedSet, 1});
      r.records.push_back({"boundary(" + pair + ")", RegionKind::FixedSet, 1});
    }
  r.records.push_back({"needles", RegionKind::FixedSet, 1});
  fill_growth(r, horizon);
  return r;
}

// ---------------------------------------------------------------------------
// Descriptors.

AssemblyDescriptor describe(const c5::Assembly& a, const ResidualReport& residual) {
  AssemblyDescriptor d;
  d.e1 = a.e1;
  d.e2 = a.e2;
  d.iso = a.iso;
  d.seq = a.seq;
  d.profile = a.G.front().profile().kind;
  for (const auto& s : a.steps) {
    const auto& r = s.report;
    d.steps.push_back({s.index, s.n, s.m, r.residual, r.relative_residual, r.displacement, r.displacement_bound,
                       r.affinity_deviation, r.vertex_error, r.delta_scale});
  }
  d.residual = residual;
  return d;
}

planar::PlanarDiffeo build(const PlanarDescriptor& d) {
  return planar::build(planar::PlanarLayout::build(d.code.depth()), d.code);
}

r5::Diffeo5 build(const Diffeo5Descriptor& d) {
  return r5::Diffeo5::build_R(d.graph, g5::place_vertices(static_cast<int>(d.graph.order())), d.profile);
}

// ---------------------------------------------------------------------------
// JSON.

std::vector<std::vector<int>> parse_cycles(const std::string& text) {
  std::vector<std::vector<int>> out;
  std::vector<int>* open = nullptr;
  std::string num;
  auto flush = [&] {
    if (num.empty()) return;
    if (open == nullptr) throw ValidationError("cycle element outside parentheses in '" + text + "'");
    try {
      open->push_back(std::stoi(num));
    } catch (const std::exception&) {
      throw ValidationError("bad cycle element '" + num + "'");
    }
    num.clear();
  };
  for (char ch : text) {
    if (ch == '(') {
      if (open != nullptr) throw ValidationError("nested parentheses in '" + text + "'");
      out.emplace_back();
      open = &out.back();
    } else if (ch == ')') {
      flush();
      if (open == nullptr) throw ValidationError("unbalanced ')' in '" + text + "'");
      open = nullptr;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '-' && num.empty())) {
      num += ch;
    } else if (ch == ' ' || ch == ',') {
      flush();
    } else {
      throw ValidationError(std::string("unexpected character '") + ch + "' in cycles");
    }
  }
  if (open != nullptr) throw ValidationError("unclosed '(' in '" + text + "'");
  return out;
}

std::vector<std::pair<int, int>> parse_edges(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      std::size_t used_a = 0, used_b = 0;
      if (dash == std::string::npos) throw std::invalid_argument(item);
      const std::string sa = item.substr(0, dash), sb = item.substr(dash + 1);
      const int a = std::stoi(sa, &used_a), b = std::stoi(sb, &used_b);
      if (used_a != sa.size() || used_b != sb.size()) throw std::invalid_argument(item);
      out.emplace_back(a, b);
    } catch (const std::exception&) {
      throw ValidationError("edge '" + item + "' is not of the form a-b");
    }
  }
  return out;
}

std::string descriptor_type(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) throw ValidationError("missing descriptor type");
  return j["type"].get<std::string>();
}

json to_json(const BinaryCode& c) {
  json j = header("binary_code");
  j["bits"] = c.str();
  return j;
}

BinaryCode code_from_json(const json& j) {
  expect(j, "binary_code");
  return BinaryCode::parse(field<std::string>(j, "bits"));
}

json to_json(const GraphCode& g) {
  json j = header("graph");
  j["order"] = g.order();
  json edges = json::array();
  for (const auto& [a, b] : g.edges()) edges.push_back({a, b});
  j["edges"] = edges;
  return j;
}

GraphCode graph_from_json(const json& j) {
  expect(j, "graph");
  const auto order = field<std::size_t>(j, "order");
  const auto edges = field<std::vector<std::pair<int, int>>>(j, "edges");
  return GraphCode::from_edges(order, edges);
}

json to_json(const perm::TranspositionSeq& s) {
  json j = header("transposition_seq");
  json steps = json::array();
  for (const auto& t : s.steps) steps.push_back({t.first, t.second});
  j["steps"] = steps;
  j["distances"] = s.distances;
  return j;
}

perm::TranspositionSeq seq_from_json(const json& j) {
  expect(j, "transposition_seq");
  perm::TranspositionSeq s;
  for (const auto& [a, b] : field<std::vector<std::pair<int, int>>>(j, "steps")) s.steps.push_back(perm::make_transposition(a, b));
  s.distances = field<std::vector<double>>(j, "distances");
  return s;
}

json to_json(const g5::VertexPlacement& p) {
  json j = header("placement");
  j["count"] = p.count;
  j["r"] = vec_json(p.r);
  json xs = json::array();
  for (const auto& x : p.x) xs.push_back(vec_json(x));
  j["x"] = xs;
  j["eta"] = p.eta;
  j["needle_angle"] = p.needle_angle;
  j["needle_size"] = p.needle_size;
  j["rho"] = p.rho;
  j["alpha"] = matrix_json(p.alpha);
  j["eps"] = matrix_json(p.eps);
  j["min_collinear"] = p.min_collinear;
  j["min_coplanar"] = p.min_coplanar;
  j["attempt"] = p.attempt;
  return j;
}

g5::VertexPlacement placement_from_json(const json& j) {
  expect(j, "placement");
  g5::VertexPlacement p;
  p.count = field<int>(j, "count");
  if (p.count < 1) throw ValidationError("placement count must be positive");
  try {
    p.r = vec_from(j.at("r"));
    for (const auto& x : j.at("x")) p.x.push_back(vec_from(x));
    p.alpha = matrix_from(j.at("alpha"), p.count);
    p.eps = matrix_from(j.at("eps"), p.count);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("placement: ") + e.what());
  }
  if (static_cast<int>(p.x.size()) != p.count) throw ValidationError("placement: vertex count mismatch");
  p.eta = field<std::vector<double>>(j, "eta");
  p.needle_angle = field<std::vector<double>>(j, "needle_angle");
  p.needle_size = field<std::vector<double>>(j, "needle_size");
  p.rho = field<std::vector<double>>(j, "rho");
  p.min_collinear = field<double>(j, "min_collinear");
  p.min_coplanar = field<double>(j, "min_coplanar");
  p.attempt = field<int>(j, "attempt");
  return p;
}

bool same_placement(const g5::VertexPlacement& a, const g5::VertexPlacement& b) {
  return a.count == b.count && a.r == b.r && a.x == b.x && a.eta == b.eta && a.needle_angle == b.needle_angle &&
         a.needle_size == b.needle_size && a.rho == b.rho && a.alpha == b.alpha && a.eps == b.eps &&
         a.min_collinear == b.min_collinear && a.min_coplanar == b.min_coplanar && a.attempt == b.attempt;
}

json to_json(const PlanarDescriptor& d) {
  json j = header("planar_diffeo");
  j["depth"] = d.code.depth();
  j["code"] = d.code.str();
  return j;
}

PlanarDescriptor planar_from_json(const json& j) {
  expect(j, "planar_diffeo");
  PlanarDescriptor d{BinaryCode::parse(field<std::string>(j, "code"))};
  if (field<std::size_t>(j, "depth") != d.code.depth()) throw ValidationError("planar_diffeo: depth does not match code length");
  return d;
}

json to_json(const Diffeo5Descriptor& d) {
  json j = header("diffeo5");
  j["graph"] = to_json(d.graph);
  j["profile"] = r5::profile_name(d.profile);
  return j;
}

Diffeo5Descriptor diffeo5_from_json(const json& j) {
  expect(j, "diffeo5");
  if (!j.contains("graph")) throw ValidationError("diffeo5: missing graph");
  return {graph_from_json(j["graph"]), r5::parse_profile(field<std::string>(j, "profile"))};
}

json to_json(const ResidualReport& r) {
  json j = header("residual_report");
  j["max_residual"] = r.max_residual;
  j["argmax"] = r.argmax;
  j["samples"] = r.samples;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass();
  return j;
}

ResidualReport residual_from_json(const json& j) {
  expect(j, "residual_report");
  ResidualReport r;
  r.max_residual = field<double>(j, "max_residual");
  r.argmax = field<std::vector<double>>(j, "argmax");
  r.samples = field<int>(j, "samples");
  r.tolerance = field<double>(j, "tolerance");
  if (r.max_residual < 0.0) throw ValidationError("residual_report: negative residual");
  return r;
}

json to_json(const AssemblyDescriptor& d) {
  json j = header("assembly");
  j["e1"] = to_json(d.e1);
  j["e2"] = to_json(d.e2);
  j["iso"] = d.iso;
  j["seq"] = to_json(d.seq);
  j["profile"] = r5::profile_name(d.profile);
  json steps = json::array();
  for (const auto& s : d.steps) {
    steps.push_back({{"index", s.index}, {"n", s.n}, {"m", s.m}, {"residual", s.residual},
                     {"relative_residual", s.relative_residual}, {"displacement", s.displacement},
                     {"displacement_bound", s.displacement_bound}, {"affinity_deviation", s.affinity_deviation},
                     {"vertex_error", s.vertex_error}, {"delta_scale", s.delta_scale}});
  }
  j["steps"] = steps;
  j["residual"] = to_json(d.residual);
  return j;
}

AssemblyDescriptor assembly_from_json(const json& j) {
  expect(j, "assembly");
  AssemblyDescriptor d;
  try {
    d.e1 = graph_from_json(j.at("e1"));
    d.e2 = graph_from_json(j.at("e2"));
    d.seq = seq_from_json(j.at("seq"));
    d.residual = residual_from_json(j.at("residual"));
    for (const auto& s : j.at("steps")) {
      d.steps.push_back({s.at("index").get<int>(), s.at("n").get<int>(), s.at("m").get<int>(),
                         s.at("residual").get<double>(), s.at("relative_residual").get<double>(),
                         s.at("displacement").get<double>(), s.at("displacement_bound").get<double>(),
                         s.at("affinity_deviation").get<double>(), s.at("vertex_error").get<double>(),
                         s.at("delta_scale").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("assembly: ") + e.what());
  }
  d.iso = field<VertexBijection>(j, "iso");
  d.profile = r5::parse_profile(field<std::string>(j, "profile"));
  return d;
}

bool operator==(const AssemblyDescriptor& a, const AssemblyDescriptor& b) {
  return a.e1 == b.e1 && a.e2 == b.e2 && a.iso == b.iso && a.seq.steps == b.seq.steps &&
         a.seq.distances == b.seq.distances && a.profile == b.profile && a.steps == b.steps && a.residual == b.residual;
}

json to_json(const CensusReport& r) {
  json j = header("census");
  json recs = json::array();
  for (const auto& rec : r.records) recs.push_back({{"id", rec.id}, {"kind", kind_name(rec.kind)}, {"period", rec.period}});
  j["records"] = recs;
  j["growth"] = r.growth;
  j["growth_proxy"] = r.growth_proxy();
  return j;
}

CensusReport census_from_json(const json& j) {
  expect(j, "census");
  CensusReport r;
  try {
    for (const auto& rec : j.at("records")) {
      r.records.push_back({rec.at("id").get<std::string>(), parse_kind(rec.at("kind").get<std::string>()),
                           rec.at("period").get<std::int64_t>()});
      if (r.records.back().period < 1) throw ValidationError("census: periods must be positive");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("census: ") + e.what());
  }
  r.growth = field<std::vector<double>>(j, "growth");
  return r;
}

json to_json(const perm::ContTable& t) {
  json j = header("cont_table");
  json rows = json::array();
  for (const auto& [m, set] : t.cont) {
    rows.push_back({{"element", m},
                    {"cont", std::vector<int>(set.begin(), set.end())},
                    {"frozen", t.frozen_of(m)},
                    {"J", t.J_of(m)},
                    {"T", t.T_of(m)}});
  }
  j["rows"] = rows;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Orbits.

std::vector<Orbit> planar_orbits(const planar::PlanarDiffeo& f, int points, int iters, unsigned seed) {
  if (points < 0 || iters < 0) throw ValidationError("orbit counts must be non-negative");
  std::vector<Orbit> out;
  for (const auto& p0 : planar_samples(f.layout(), points, seed)) {
    Orbit o;
    planar::Point p = p0;
    for (int k = 0; k <= iters; ++k) {
      o.push_back({k, {p.x(), p.y()}});
      p = f.eval(p);
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<Orbit> orbits5(const r5::Diffeo5& f, int points, int iters, unsigned seed) {
  if (points < 0 || iters < 0) throw ValidationError("orbit counts must be non-negative");
  const auto& P = f.placement();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<Orbit> out;
  for (int i = 0; i < points; ++i) {
    // Dynamic-cigar points, one pair per orbit in round-robin order.
    const int pairs = P.count * (P.count - 1) / 2;
    int k = pairs > 0 ? i % pairs : 0, a = 1, b = 2;
    for (a = 1; a <= P.count; ++a) {
      if (k < P.count - a) {
        b = a + 1 + k;
        break;
      }
      k -= P.count - a;
    }
    Vec5 z = P.r;
    if (pairs > 0) {
      const auto c = f.cigar(a, b);
      Vec5 e;
      for (int d = 0; d < 5; ++d) e(d) = N(rng);
      e -= e.dot(c.axis()) * c.axis();
      z = c.point(-0.9 + 1.8 * U(rng), U(rng), e.normalized());
    }
    Orbit o;
    for (int it = 0; it <= iters; ++it) {
      o.push_back({it, std::vector<double>(z.data(), z.data() + 5)});
      z = f.eval(z);
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::string orbit_csv(const Orbit& orbit) {
  const std::size_t dim = orbit.empty() ? 0 : orbit.front().x.size();
  std::ostringstream os;
  os.precision(17);
  os << "iter";
  for (std::size_t d = 1; d <= dim; ++d) os << ",x" << d;
  os << "\n";
  for (const auto& row : orbit) {
    if (row.x.size() != dim) throw ValidationError("orbit rows have different widths");
    os << row.iter;
    for (double v : row.x) os << "," << v;
    os << "\n";
  }
  return os.str();
}

Orbit parse_orbit_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("iter", 0) != 0) throw ValidationError("orbit csv: missing header");
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  for (std::size_t d = 1; d <= dim; ++d)
    if (line.find(",x" + std::to_string(d)) == std::string::npos) throw ValidationError("orbit csv: bad header");
  Orbit out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    OrbitRow r;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 1) throw ValidationError("orbit csv: wrong row width");
    try {
      r.iter = std::stoi(cells[0]);
      for (std::size_t d = 1; d <= dim; ++d) r.x.push_back(std::stod(cells[d]));
    } catch (const std::exception&) {
      throw ValidationError("orbit csv: unparsable value in " + line);
    }
    for (double v : r.x)
      if (!std::isfinite(v)) throw ValidationError("orbit csv: non-finite value");
    if (!out.empty() && r.iter <= out.back().iter) throw ValidationError("orbit csv: iterations not increasing");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace conjury::harness
