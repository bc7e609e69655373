#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "conjury/conjugacy5.hpp"
#include "conjury/harness.hpp"

namespace py = pybind11;
using namespace conjury;

namespace {

using Edges = std::vector<std::pair<int, int>>;

std::vector<std::pair<int, int>> steps_of(const perm::TranspositionSeq& s) {
  std::vector<std::pair<int, int>> out;
  for (const auto& t : s.steps) out.emplace_back(t.first, t.second);
  return out;
}

perm::TranspositionSeq decompose_cycles(const std::vector<std::vector<int>>& cycles) {
  return perm::decompose(perm::Permutation::from_cycles(cycles));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conjugacy constructions for planar and 5-space diffeomorphisms";
  m.attr("FORMAT_VERSION") = harness::kFormatVersion;

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ConstructionError>(m, "ConstructionError", PyExc_RuntimeError);
  (void)validation;

  // Planar.
  py::class_<planar::PlanarDiffeo>(m, "PlanarDiffeo")
      .def_property_readonly("code", [](const planar::PlanarDiffeo& f) { return f.code().str(); })
      .def_property_readonly("depth", [](const planar::PlanarDiffeo& f) { return f.code().depth(); })
      .def("eval", &planar::PlanarDiffeo::eval, py::arg("p"))
      .def("eval_inverse", &planar::PlanarDiffeo::eval_inverse, py::arg("p"))
      .def("spectrum", [](const planar::PlanarDiffeo& f) {
        std::vector<std::pair<std::string, std::int64_t>> out;
        for (const auto& r : planar::period_spectrum(f)) out.emplace_back(r.region.str(), r.minimal_period);
        return out;
      })
      .def("census_json", [](const planar::PlanarDiffeo& f) { return harness::to_json(harness::census(f)).dump(); });

  m.def("planar_build", [](const std::string& code) { return harness::build(harness::PlanarDescriptor{BinaryCode::parse(code)}); },
        py::arg("code"));
  m.def(
      "planar_recover",
      [](const std::vector<std::pair<std::string, std::int64_t>>& spectrum, std::size_t depth) {
        std::vector<planar::RegionPeriod> recs;
        for (const auto& [id, p] : spectrum) recs.push_back({planar::RegionId::parse(id), p});
        return planar::recover_code(recs, planar::PlanarLayout::build(depth)).str();
      },
      py::arg("spectrum"), py::arg("depth"));
  m.def(
      "planar_residual",
      [](const std::string& c1, const std::string& c2, int samples, unsigned seed) {
        const auto b1 = BinaryCode::parse(c1), b2 = BinaryCode::parse(c2);
        if (b1.depth() != b2.depth()) throw ValidationError("codes must have the same depth");
        const auto layout = planar::PlanarLayout::build(b1.depth());
        const auto h = planar::build_conjugacy(b1, b2, layout);
        return harness::to_json(harness::planar_residual(planar::build(layout, b1), planar::build(layout, b2), h,
                                                         samples, seed))
            .dump();
      },
      py::arg("code1"), py::arg("code2"), py::arg("samples"), py::arg("seed"));

  // Permutations.
  m.def("decompose", [](const std::vector<std::vector<int>>& cycles) { return steps_of(decompose_cycles(cycles)); },
        py::arg("cycles"));
  m.def(
      "check_properties",
      [](const std::vector<std::vector<int>>& cycles) {
        const auto p = perm::Permutation::from_cycles(cycles);
        const auto r = perm::check_properties(perm::decompose(p), p);
        return py::dict(py::arg("composes_to_target") = r.composes_to_target, py::arg("no_repeated_pair") = r.no_repeated_pair,
                        py::arg("at_most_two_moves") = r.at_most_two_moves, py::arg("cont_bounded") = r.cont_bounded,
                        py::arg("all") = r.all());
      },
      py::arg("cycles"));
  m.def(
      "contamination",
      [](const std::vector<std::vector<int>>& cycles, int element) {
        return perm::contamination(decompose_cycles(cycles)).cont_of(element);
      },
      py::arg("cycles"), py::arg("element"));
  m.def("demo_shift_steps", [](int w) { return steps_of(perm::decompose(perm::Permutation::demo_shift(w))); },
        py::arg("window"));

  // 5-space.
  py::class_<g5::VertexPlacement>(m, "Placement")
      .def_readonly("count", &g5::VertexPlacement::count)
      .def_readonly("r", &g5::VertexPlacement::r)
      .def("vertex", &g5::VertexPlacement::vertex, py::arg("n"))
      .def("json", [](const g5::VertexPlacement& p) { return harness::to_json(p).dump(); });
  m.def("place_vertices", [](int count) { return g5::place_vertices(count); }, py::arg("count"));

  py::class_<r5::Diffeo5>(m, "Diffeo5")
      .def_property_readonly("order", [](const r5::Diffeo5& f) { return f.graph().order(); })
      .def_property_readonly("edges", [](const r5::Diffeo5& f) { return f.graph().edges(); })
      .def("eval", [](const r5::Diffeo5& f, const g5::Vec5& p) { return f.eval(p); }, py::arg("p"))
      .def("cigar_point",
           [](const r5::Diffeo5& f, int a, int b, double t, double g) {
             return f.cigar(a, b).point(t, g, g5::in_e2(1.0, 0.0));
           },
           py::arg("a"), py::arg("b"), py::arg("t"), py::arg("gauge"))
      .def("orbit_class", [](const r5::Diffeo5& f, const g5::Vec5& p) { return r5::orbit_class_name(r5::orbit_class(f, p)); },
           py::arg("p"))
      .def("edge_detect", [](const r5::Diffeo5& f, double tol) { return r5::edge_detect(f, tol).edges(); },
           py::arg("tol") = 1e-8)
      .def("census_json", [](const r5::Diffeo5& f) { return harness::to_json(harness::census(f)).dump(); });
  m.def(
      "diffeo5_build",
      [](std::size_t order, const Edges& edges, const std::string& profile) {
        return r5::Diffeo5::build_R(GraphCode::from_edges(order, edges), g5::place_vertices(static_cast<int>(order)),
                                    r5::parse_profile(profile));
      },
      py::arg("order"), py::arg("edges"), py::arg("profile") = "standard");

  // Assemblies.
  py::class_<c5::Assembly>(m, "Assembly")
      .def_property_readonly("steps", [](const c5::Assembly& a) { return a.size(); })
      .def_property_readonly("iso", [](const c5::Assembly& a) { return a.iso; })
      .def("apply", &c5::Assembly::apply, py::arg("z"))
      .def("residual_json",
           [](const c5::Assembly& a, int samples, unsigned seed) {
             return harness::to_json(harness::assembly_residual(a, samples, seed)).dump();
           },
           py::arg("samples"), py::arg("seed"))
      .def("pos_drift", [](const c5::Assembly& a, int samples, unsigned seed) { return c5::pos_drift(a, samples, seed).value; },
           py::arg("samples"), py::arg("seed"))
      .def("motion_stage", [](const c5::Assembly& a, const g5::Vec5& x) { return c5::finite_motion_certificate(a, x).stage; },
           py::arg("x"))
      .def("describe_json",
           [](const c5::Assembly& a, int samples, unsigned seed) {
             return harness::to_json(harness::describe(a, harness::assembly_residual(a, samples, seed))).dump();
           },
           py::arg("samples"), py::arg("seed"));
  m.def(
      "assemble",
      [](std::size_t order, const Edges& e1, const Edges& e2, int step_samples) {
        c5::AssemblyOptions opt;
        opt.step.samples = step_samples;
        py::gil_scoped_release release;
        return c5::assemble(GraphCode::from_edges(order, e1), GraphCode::from_edges(order, e2),
                            g5::place_vertices(static_cast<int>(order)), opt);
      },
      py::arg("order"), py::arg("edges1"), py::arg("edges2"), py::arg("step_samples") = 2000);
}
