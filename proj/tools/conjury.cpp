// conjury: command-line front end. Exit codes: 0 ok, 2 validation error,
// 3 construction or certification failure, 64 unknown subcommand.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "conjury/harness.hpp"

using namespace conjury;
using namespace conjury::harness;

namespace {

constexpr int kOk = 0, kValidation = 2, kConstruction = 3, kUsage = 64;

const std::map<std::string, std::set<std::string>> kCommands = {
    {"planar", {"build", "census", "conj", "recover"}},
    {"perm", {"decompose", "cont"}},
    {"g5", {"place", "build", "detect", "conj"}},
    {"verify", {"residual", "orbit", "flatness"}},
    {"emit", {"orbits"}},
};

std::string usage() {
  std::string s = "usage: conjury <group> <command> [options]\n";
  for (const auto& [group, cmds] : kCommands) {
    s += "  " + group + " ";
    bool first = true;
    for (const auto& c : cmds) {
      s += (first ? "" : "|") + c;
      first = false;
    }
    s += "\n";
  }
  s += "run 'conjury <group> <command> --help' for options\n";
  return s;
}

// Writes to --out when given, otherwise to stdout.
void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_text_file(out, text);
}

// Certification failure: report is still written, exit status is 3.
struct CertificationFailure : ConstructionError {
  using ConstructionError::ConstructionError;
};

PlanarDescriptor planar_input(const std::string& in, const std::string& code) {
  if (!in.empty() == !code.empty()) throw ValidationError("give exactly one of --in and --code");
  if (!code.empty()) return {BinaryCode::parse(code)};
  return planar_from_json(read_json_file(in));
}

// A graph file or a diffeo5 descriptor; returns the graph and its profile.
Diffeo5Descriptor graph_input(const std::string& path) {
  const json j = read_json_file(path);
  const auto type = descriptor_type(j);
  if (type == "graph") return {graph_from_json(j), r5::ProfileKind::Standard};
  if (type == "diffeo5") return diffeo5_from_json(j);
  throw ValidationError(path + ": expected a graph or diffeo5 descriptor, got " + type);
}

unsigned require_seed(const std::optional<long long>& seed) {
  if (!seed) throw ValidationError("--seed is required");
  if (*seed < 0 || *seed > 0xffffffffLL) throw ValidationError("--seed must lie in [0, 2^32)");
  return static_cast<unsigned>(*seed);
}

c5::Assembly run_assembly(const Diffeo5Descriptor& a, const Diffeo5Descriptor& b, int step_samples, unsigned seed) {
  if (a.graph.order() != b.graph.order()) throw ConstructionError("graphs have different orders; not isomorphic");
  c5::AssemblyOptions opt;
  opt.step.samples = step_samples;
  opt.step.seed = seed;
  opt.profile = a.profile;
  return c5::assemble(a.graph, b.graph, g5::place_vertices(static_cast<int>(a.graph.order())), opt);
}

json spectrum_json(const std::vector<planar::RegionPeriod>& spec) {
  json arr = json::array();
  for (const auto& r : spec) arr.push_back({{"region", r.region.str()}, {"period", r.minimal_period}});
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || std::string(argv[1]) == "--help" || std::string(argv[1]) == "-h") {
    std::cout << usage();
    return argc < 2 ? kUsage : kOk;
  }
  const auto group = kCommands.find(argv[1]);
  if (group == kCommands.end() || argc < 3 ||
      (group->second.count(argv[2]) == 0 && std::string(argv[2]) != "--help" && std::string(argv[2]) != "-h")) {
    std::cerr << "unknown subcommand\n" << usage();
    return kUsage;
  }

  CLI::App app{"Constructive conjugacy toolkit"};
  app.require_subcommand(1);
  std::string out, in, code, code2, g1, g2, cycles, edges, profile = "standard";
  std::optional<long long> seed;
  int samples = 10000, step_samples = 2000, vertices = 0, horizon = 0, points = 8, iters = 200, element = 0;
  double tol = -1.0;
  std::function<void()> action;

  auto add_out = [&](CLI::App* c) { c->add_option("--out", out, "output file (default stdout)"); };
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "random seed (required)"); };

  // planar
  auto* planar = app.add_subcommand("planar", "planar reduction");
  planar->require_subcommand(1);
  {
    auto* c = planar->add_subcommand("build", "descriptor for a code");
    c->add_option("--code", code, "binary code")->required();
    add_out(c);
    c->callback([&] {
      const PlanarDescriptor d{BinaryCode::parse(code)};
      build(d);
      action = [&, d] { emit(to_json(d), out); };
    });
  }
  {
    auto* c = planar->add_subcommand("census", "period census of a planar map");
    c->add_option("--in", in, "planar descriptor");
    c->add_option("--code", code, "binary code");
    c->add_option("--horizon", horizon, "growth horizon (default: largest period)");
    add_out(c);
    c->callback([&] { action = [&] { emit(to_json(census(build(planar_input(in, code)), horizon)), out); }; });
  }
  {
    auto* c = planar->add_subcommand("conj", "conjugacy between two planar maps");
    c->add_option("--g1", g1, "first planar descriptor");
    c->add_option("--g2", g2, "second planar descriptor");
    c->add_option("--code", code, "first code");
    c->add_option("--code2", code2, "second code");
    c->add_option("--samples", samples, "residual samples");
    c->add_option("--tol", tol, "residual tolerance (default 1e-12)");
    add_seed(c);
    add_out(c);
    c->callback([&] {
      action = [&] {
        const auto d1 = planar_input(g1, code), d2 = planar_input(g2, code2);
        if (d1.code.depth() != d2.code.depth()) throw ValidationError("codes have different depths");
        const auto lay = planar::PlanarLayout::build(d1.code.depth());
        const auto h = planar::build_conjugacy(d1.code, d2.code, lay);
        const auto r = planar_residual(planar::build(lay, d1.code), planar::build(lay, d2.code), h, samples,
                                       require_seed(seed), tol < 0 ? 1e-12 : tol);
        json j{{"type", "planar_conjugacy"}, {"format_version", kFormatVersion}, {"g1", to_json(d1)}, {"g2", to_json(d2)},
               {"swapped", h.swapped_indices()}, {"residual", to_json(r)}};
        emit(j, out);
        if (!r.pass()) throw CertificationFailure("residual above tolerance");
      };
    });
  }
  {
    auto* c = planar->add_subcommand("recover", "recover the code from the period spectrum");
    c->add_option("--in", in, "planar descriptor");
    c->add_option("--code", code, "binary code");
    add_out(c);
    c->callback([&] {
      action = [&] {
        const auto f = build(planar_input(in, code));
        const auto spec = planar::period_spectrum(f);
        json j = to_json(planar::recover_code(spec, f.layout()));
        j["spectrum"] = spectrum_json(spec);
        emit(j, out);
      };
    });
  }

  // perm
  auto* perm_cmd = app.add_subcommand("perm", "permutation factorization");
  perm_cmd->require_subcommand(1);
  auto permutation = [&] { return perm::Permutation::from_cycles(parse_cycles(cycles)); };
  {
    auto* c = perm_cmd->add_subcommand("decompose", "transposition sequence and contamination table");
    c->add_option("--cycles", cycles, "disjoint cycles, e.g. \"(1 2 3)(4 5)\"")->required();
    add_out(c);
    c->callback([&] {
      action = [&] {
        const auto p = permutation();
        const auto seq = perm::decompose(p);
        const auto props = perm::check_properties(seq, p);
        std::size_t max_cont = 0;
        const auto table = perm::contamination(seq);
        for (const auto& [m, s] : table.cont) max_cont = std::max(max_cont, s.size());
        json j{{"type", "decomposition"},
               {"format_version", kFormatVersion},
               {"seq", to_json(seq)},
               {"cont", to_json(table)},
               {"max_cont", max_cont},
               {"properties",
                {{"composes_to_target", props.composes_to_target},
                 {"no_repeated_pair", props.no_repeated_pair},
                 {"at_most_two_moves", props.at_most_two_moves},
                 {"cont_bounded", props.cont_bounded}}}};
        emit(j, out);
        if (!props.all()) throw CertificationFailure("decomposition fails its property certificate");
      };
    });
  }
  {
    auto* c = perm_cmd->add_subcommand("cont", "contamination sets");
    c->add_option("--cycles", cycles, "disjoint cycles")->required();
    c->add_option("--element", element, "only this element");
    add_out(c);
    c->callback([&] {
      action = [&] {
        const auto seq = perm::decompose(permutation());
        if (element == 0) {
          emit(to_json(perm::contamination(seq)), out);
          return;
        }
        const auto s = perm::contamination_set(seq, element);
        emit(json{{"type", "cont_set"}, {"format_version", kFormatVersion}, {"element", element},
                  {"cont", std::vector<int>(s.begin(), s.end())}},
             out);
      };
    });
  }

  // g5
  auto* g5cmd = app.add_subcommand("g5", "5-space reduction");
  g5cmd->require_subcommand(1);
  {
    auto* c = g5cmd->add_subcommand("place", "vertex placement");
    c->add_option("--vertices", vertices, "vertex count")->required();
    add_out(c);
    c->callback([&] { action = [&] { emit(to_json(g5::place_vertices(vertices)), out); }; });
  }
  {
    auto* c = g5cmd->add_subcommand("build", "diffeomorphism descriptor of a graph");
    c->add_option("--in", in, "graph file");
    c->add_option("--edges", edges, "edge list, e.g. \"1-2,2-3\"");
    c->add_option("--vertices", vertices, "vertex count (with --edges)");
    c->add_option("--profile", profile, "standard|steep");
    add_out(c);
    c->callback([&] {
      action = [&] {
        if (!in.empty() == (!edges.empty() || vertices > 0)) throw ValidationError("give --in or --edges/--vertices");
        const GraphCode g = in.empty() ? GraphCode::from_edges(static_cast<std::size_t>(vertices), parse_edges(edges))
                                       : graph_from_json(read_json_file(in));
        const Diffeo5Descriptor d{g, r5::parse_profile(profile)};
        build(d);
        emit(to_json(d), out);
      };
    });
  }
  {
    auto* c = g5cmd->add_subcommand("detect", "read the graph back from the dynamics");
    c->add_option("--in", in, "diffeo5 descriptor")->required();
    c->add_option("--tol", tol, "integration tolerance (default 1e-8)");
    add_out(c);
    c->callback([&] {
      action = [&] {
        const auto d = diffeo5_from_json(read_json_file(in));
        emit(to_json(r5::edge_detect(build(d), tol < 0 ? 1e-8 : tol)), out);
      };
    });
  }
  {
    auto* c = g5cmd->add_subcommand("conj", "assemble the conjugacy between two graphs");
    c->add_option("--g1", g1, "first graph or diffeo5 descriptor")->required();
    c->add_option("--g2", g2, "second graph or diffeo5 descriptor")->required();
    c->add_option("--samples", samples, "end-to-end residual samples");
    c->add_option("--step-samples", step_samples, "certification samples per step");
    c->add_option("--tol", tol, "residual tolerance (default K * 1e-6)");
    add_seed(c);
    add_out(c);
    c->callback([&] {
      action = [&] {
        const unsigned s = require_seed(seed);
        const auto a = run_assembly(graph_input(g1), graph_input(g2), step_samples, s);
        const auto r = assembly_residual(a, samples, s, tol);
        emit(to_json(describe(a, r)), out);
        if (!r.pass()) throw CertificationFailure("end-to-end residual above tolerance");
      };
    });
  }

  // verify
  auto* verify = app.add_subcommand("verify", "certificates");
  verify->require_subcommand(1);
  {
    auto* c = verify->add_subcommand("residual", "conjugacy residual between two descriptors");
    c->add_option("--g1", g1, "first descriptor")->required();
    c->add_option("--g2", g2, "second descriptor")->required();
    c->add_option("--samples", samples, "samples");
    c->add_option("--step-samples", step_samples, "certification samples per step (5-space)");
    c->add_option("--tol", tol, "tolerance");
    add_seed(c);
    add_out(c);
    c->callback([&] {
      action = [&] {
        const unsigned s = require_seed(seed);
        const json j1 = read_json_file(g1);
        ResidualReport r;
        if (descriptor_type(j1) == "planar_diffeo") {
          const auto d1 = planar_from_json(j1), d2 = planar_from_json(read_json_file(g2));
          if (d1.code.depth() != d2.code.depth()) throw ValidationError("codes have different depths");
          const auto lay = planar::PlanarLayout::build(d1.code.depth());
          r = planar_residual(planar::build(lay, d1.code), planar::build(lay, d2.code),
                              planar::build_conjugacy(d1.code, d2.code, lay), samples, s, tol < 0 ? 1e-12 : tol);
        } else {
          r = assembly_residual(run_assembly(graph_input(g1), graph_input(g2), step_samples, s), samples, s, tol);
        }
        emit(to_json(r), out);
        if (!r.pass()) throw CertificationFailure("residual above tolerance");
      };
    });
  }
  {
    auto* c = verify->add_subcommand("orbit", "orbit behaviour against the construction");
    c->add_option("--in", in, "planar or diffeo5 descriptor")->required();
    add_out(c);
    c->callback([&] {
      action = [&] {
        const json j = read_json_file(in);
        json rows = json::array();
        bool ok = true;
        if (descriptor_type(j) == "planar_diffeo") {
          // period_spectrum cross-checks every analytic period by iteration.
          const auto spec = planar::period_spectrum(build(planar_from_json(j)));
          for (const auto& r : spec) rows.push_back({{"region", r.region.str()}, {"period", r.minimal_period}, {"ok", true}});
        } else {
          const auto f = build(diffeo5_from_json(j));
          const int V = f.placement().count;
          for (int a = 1; a <= V; ++a)
            for (int b = a + 1; b <= V; ++b) {
              const auto cls = r5::orbit_class(f, f.cigar(a, b).point(0.0, 0.5, g5::in_e2(1, 0)));
              const auto want = f.sign(a, b) == r5::Sign::Plus ? r5::OrbitClass::ToCenterline : r5::OrbitClass::ToBoundary;
              ok = ok && cls == want;
              rows.push_back({{"pair", {a, b}}, {"sign", r5::sign_name(f.sign(a, b))},
                              {"class", r5::orbit_class_name(cls)}, {"ok", cls == want}});
            }
        }
        emit(json{{"type", "orbit_report"}, {"format_version", kFormatVersion}, {"rows", rows}, {"pass", ok}}, out);
        if (!ok) throw CertificationFailure("orbit classes disagree with the construction");
      };
    });
  }
  {
    auto* c = verify->add_subcommand("flatness", "displacement decay at the accumulation points");
    c->add_option("--in", in, "planar or diffeo5 descriptor")->required();
    add_out(c);
    c->callback([&] {
      action = [&] {
        const json j = read_json_file(in);
        json rows = json::array();
        bool ok = true;
        auto add_row = [&](const std::string& at, int order, const std::vector<double>& scales,
                           const std::vector<double>& ratios, bool pass) {
          rows.push_back({{"at", at}, {"order", order}, {"scales", scales}, {"ratios", ratios}, {"non_increasing", pass}});
          ok = ok && pass;
        };
        if (descriptor_type(j) == "planar_diffeo") {
          const auto f = build(planar_from_json(j));
          for (const auto& [name, p] : {std::pair{"a", f.layout().a()}, std::pair{"b", f.layout().b()}})
            for (const auto& row : planar::smoothness_probe(f, p, {0, 1, 2, 3, 4}).rows)
              add_row(name, row.order, row.scales, row.ratios, row.non_increasing);
        } else {
          const auto f = build(diffeo5_from_json(j));
          std::vector<double> scales;
          for (int i = 0; i < 6; ++i) scales.push_back(1e-3 * f.collar() * std::pow(0.5, i));
          for (int v = 1; v <= f.placement().count; ++v)
            for (const auto& row : r5::displacement_decay(f, f.placement().vertex(v), {1, 2, 3}, scales))
              add_row("x" + std::to_string(v), row.order, row.scales, row.ratios, row.non_increasing);
        }
        emit(json{{"type", "flatness_report"}, {"format_version", kFormatVersion}, {"rows", rows}, {"pass", ok}}, out);
        if (!ok) throw CertificationFailure("displacement does not decay flatly");
      };
    });
  }

  // emit
  auto* emit_cmd = app.add_subcommand("emit", "plot data");
  emit_cmd->require_subcommand(1);
  {
    auto* c = emit_cmd->add_subcommand("orbits", "orbit CSV files <out>_<k>.csv");
    c->add_option("--in", in, "planar or diffeo5 descriptor")->required();
    c->add_option("--points", points, "number of orbits");
    c->add_option("--iters", iters, "iterations per orbit");
    c->add_option("--out", out, "file prefix")->required();
    add_seed(c);
    c->callback([&] {
      action = [&] {
        const unsigned s = require_seed(seed);
        const json j = read_json_file(in);
        const auto orbits = descriptor_type(j) == "planar_diffeo" ? planar_orbits(build(planar_from_json(j)), points, iters, s)
                                                                  : orbits5(build(diffeo5_from_json(j)), points, iters, s);
        json files = json::array();
        for (std::size_t k = 0; k < orbits.size(); ++k) {
          const std::string path = out + "_" + std::to_string(k) + ".csv";
          write_text_file(path, orbit_csv(orbits[k]));
          files.push_back(path);
        }
        std::cout << json{{"type", "orbit_files"}, {"format_version", kFormatVersion}, {"files", files}}.dump(2) << "\n";
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstruction;
  }
  try {
    if (action) action();
    return kOk;
  } catch (const CertificationFailure& e) {
    std::cerr << "certification failed: " << e.what() << "\n";
    return kConstruction;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ConstructionError& e) {
    std::cerr << "construction error: " << e.what() << "\n";
    return kConstruction;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConstruction;
  }
}
