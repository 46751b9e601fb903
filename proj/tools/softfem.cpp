// softfem command line: run experiments, check trace constants, inspect meshes.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "softfem/error.hpp"
#include "softfem/experiment.hpp"
#include "softfem/mesh.hpp"
#include "softfem/oracle.hpp"

using namespace softfem;

namespace {

int cmd_run(const std::string& target, const std::string& out, long modes, const std::string& eta, bool stiffen) {
  try {
    ExperimentConfig cfg = is_preset(target) ? preset_config(target) : load_config_file(target);
    RunOverrides o;
    if (modes >= 0) o.modes = static_cast<std::size_t>(modes);
    if (!eta.empty()) o.eta = eta;
    o.stiffen = stiffen;
    apply_overrides(cfg, o);
    const ExperimentResult r = run_experiment(cfg, out);
    for (const auto& c : r.cases) {
      std::printf("%-14s %-28s dofs=%-6zu eta=%-10.6g", c.run.c_str(), c.name.c_str(), c.num_dofs, c.eta);
      if (c.metrics)
        std::printf(" sigma=%.5g sigma_soft=%.5g rho=%.5g", c.metrics->sigma, c.metrics->sigma_soft, c.metrics->rho);
      else
        std::printf(" indefinite");
      std::printf(" top10 fem=%.3e soft=%.3e\n", c.top_decile_fem, c.top_decile_soft);
    }
    for (const auto& rate : r.rates)
      std::printf("rate %s p=%d mode=%d %s: %.3f (%d levels)\n", rate.run.c_str(), rate.degree, rate.mode,
                  rate.quantity.c_str(), rate.rate, rate.used);
    if (!out.empty()) std::printf("wrote %s/summary.json\n", out.c_str());
    if (r.coercivity_violation) {
      std::cerr << "coercivity violation under the default softness parameter\n";
      return kExitCoercivity;
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidMesh& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
}

int cmd_trace(int p, const std::string& kind_name, int dim, std::vector<int> k, int samples) {
  try {
    const TraceKind kind = parse_trace_kind(kind_name);
    if (dim <= 0) dim = kind == TraceKind::Interval ? 1 : 2;
    const TraceCheck t = check_trace(kind, p, dim, k, samples);
    std::printf("kind=%s p=%d d=%d bound=%.12g samples=%d max_random_fraction=%.12f", to_string(t.kind).c_str(), t.p,
                t.dim, t.bound, t.samples, t.max_random_fraction);
    if (t.extremal_fraction >= 0.0) std::printf(" extremal_fraction=%.12f", t.extremal_fraction);
    const bool ok = t.worst_slack() >= -1e-10 &&
                    (t.extremal_fraction < 0.0 || std::abs(t.extremal_fraction - 1.0) <= 1e-9);
    std::printf(" %s\n", ok ? "ok" : "VIOLATED");
    return ok ? 0 : 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int cmd_mesh_info(const std::string& path) {
  try {
    const Mesh m = read_mesh_file(path);
    std::size_t bverts = 0;
    for (bool b : m.boundary_vertices()) bverts += b;
    double hmin = 1e300, hmax = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
      hmin = std::min(hmin, m.lengths(e).h0);
      hmax = std::max(hmax, m.lengths(e).diameter);
    }
    std::printf("kind: %s\n", m.kind() == MeshKind::Tensor ? "tensor" : "simplicial");
    std::printf("dim: %d\n", m.dim());
    std::printf("vertices: %zu (%zu on the boundary)\n", m.num_vertices(), bverts);
    std::printf("elements: %zu\n", m.num_elements());
    std::printf("interior faces: %zu\n", m.interfaces().size());
    std::printf("boundary faces: %zu\n", m.boundary_faces().size());
    std::printf("measure: %.12g\n", m.measure());
    std::printf("h0 min: %.6g  diameter max: %.6g\n", hmin, hmax);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral experiments for softened finite elements"};
  app.require_subcommand(1);

  std::string target, out, eta;
  long modes = -1;
  bool stiffen = false;
  auto* run = app.add_subcommand("run", "run a config file or a named preset");
  run->add_option("config", target, "config.json or preset name")->required();
  run->add_option("--out", out, "output directory");
  run->add_option("--modes", modes, "rows per spectrum.csv (0 = all)");
  run->add_option("--eta", eta, "softness parameter: a number, default, or 0");
  run->add_flag("--stiffen", stiffen, "add the penalty instead of subtracting it");

  int p = 1, dim = 0, samples = 1000;
  std::string kind;
  std::vector<int> k;
  auto* trace = app.add_subcommand("trace-check", "sample discrete trace inequalities");
  trace->add_option("--p", p, "polynomial degree")->required();
  trace->add_option("--kind", kind, "interval, cuboid-grad, cuboid-partial, simplex-grad")->required();
  trace->add_option("--dim", dim, "dimension (interval: 1, others default 2)");
  trace->add_option("--k", k, "derivative order, or one per axis for cuboid-partial");
  trace->add_option("--samples", samples, "random polynomials to test");

  std::string mesh_path;
  auto* info = app.add_subcommand("mesh-info", "summarize a mesh file");
  info->add_option("meshfile", mesh_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*run) return cmd_run(target, out, modes, eta, stiffen);
  if (*trace) return cmd_trace(p, kind, dim, k, samples);
  return cmd_mesh_info(mesh_path);
}
