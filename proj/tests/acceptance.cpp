// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "softfem/assembly.hpp"
#include "softfem/coefficient.hpp"
#include "softfem/experiment.hpp"
#include "softfem/gevp.hpp"
#include "softfem/oracle.hpp"
#include "softfem/speclab.hpp"

using namespace softfem;

namespace {

constexpr double kPi = std::numbers::pi;
const CoefficientField one = CoefficientField::constant(1.0);

struct Outcome {
  bool pass = true;
  std::string detail;
  int checks = 0, failures = 0;
  std::vector<std::string> notes;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) {
      ++failures;
      pass = false;
      if (notes.size() < 24) notes.push_back(what);
    }
  }
};

// |x - ref| within half a unit in the n-th significant digit of ref
bool sig_digits(double x, double ref, int n) {
  if (ref == 0.0) return x == 0.0;
  const double e = std::floor(std::log10(std::abs(ref)));
  return std::abs(x - ref) <= 0.5 * std::pow(10.0, e - n + 1) * (1.0 + 1e-12);
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

struct Pencil {
  FeSpace space;
  SymMatrix K, M, S;
};

Pencil pencil(const Mesh& mesh, int p, const CoefficientField& kappa = one, PenaltyOptions opt = {}) {
  FeSpace s = build_space(mesh, p);
  SymMatrix K = assemble_stiffness(s, kappa), M = assemble_mass(s), S = assemble_penalty(s, kappa, DofSet::Free, opt);
  return {std::move(s), std::move(K), std::move(M), std::move(S)};
}

// ---- 1 ----
Outcome golden_stencils() {
  Outcome o;
  for (int N : {2, 3, 4, 8, 16, 33}) {
    const double h = 1.0 / N;
    const auto P = pencil(build_uniform_mesh(1, N), 1);
    const Eigen::MatrixXd K(P.K), M(P.M), S(P.S);
    const int n = N - 1;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int d = std::abs(i - j);
        const double k = (d == 0 ? 2.0 : d == 1 ? -1.0 : 0.0) / h;
        const double m = h * (d == 0 ? 2.0 / 3 : d == 1 ? 1.0 / 6 : 0.0);
        // interior pattern (1,-4,6,-4,1)/h, the rows next to the boundary start at 5
        double s = (d == 0 ? 6.0 : d == 1 ? -4.0 : d == 2 ? 1.0 : 0.0) / h;
        if (d == 0 && (i == 0 || i == n - 1)) s = 5.0 / h;
        if (n == 1) s = 4.0 / h;  // one interface: h (2/h)^2
        auto near = [](double a, double b, double scale) { return std::abs(a - b) <= 1e-13 * std::max(std::abs(b), scale); };
        o.expect(near(K(i, j), k, 1.0 / h), fmt("K N=%g entry %g", N, i * n + j));
        o.expect(near(M(i, j), m, h), fmt("M N=%g entry %g", N, i * n + j));
        o.expect(near(S(i, j), s, 1.0 / h), fmt("S N=%g entry %g", N, i * n + j));
      }
  }
  o.detail = std::to_string(o.checks) + " entries";
  return o;
}

// ---- 2 ----
Outcome closed_forms() {
  Outcome o;
  double worst = 0.0;
  for (int N = 2; N <= 64; ++N) {
    const auto P = pencil(build_uniform_mesh(1, N), 1);
    for (double eta : {0.0, 1.0 / 12}) {
      const auto s = solve_gmevp(soften(P.K, P.S, eta), P.M);
      std::vector<double> cf;
      for (int j = 1; j < N; ++j) {
        const auto v = closed_form_linear_eigenvalue(N, j, eta);
        cf.push_back(eta == 0.0 ? v.fem : v.soft);
      }
      std::sort(cf.begin(), cf.end());
      for (int j = 0; j < N - 1; ++j) {
        const double rel = std::abs(s.values(j) - cf[j]) / std::abs(cf[j]);
        worst = std::max(worst, rel);
        o.expect(rel <= 1e-10, fmt("N=%g j=%g", N, j + 1));
      }
    }
  }
  o.detail = fmt("max rel diff %.2e over %g eigenvalues", worst, o.checks);
  return o;
}

// ---- 3 ----
Outcome table3() {
  Outcome o;
  const double target[5][7] = {{9.8698, 4.7991e5, 3.1995e5, 4.8624e4, 3.2417e4, 1.5000, 33.33},
                              {9.8696, 2.3998e6, 1.2000e6, 2.4315e5, 1.2158e5, 1.9999, 50.00},
                              {9.8696, 6.8046e6, 2.7255e6, 6.8945e5, 2.7615e5, 2.4967, 59.95},
                              {9.8696, 1.5209e7, 5.1587e6, 1.5410e6, 5.2269e5, 2.9482, 66.08},
                              {9.8696, 2.9555e7, 9.1006e6, 2.9946e6, 9.2208e5, 3.2476, 69.21}};
  const char* names[7] = {"lambda_min", "lambda_max", "lambda_soft_max", "sigma", "sigma_soft", "rho", "varrho"};
  for (int p = 1; p <= 5; ++p) {
    const auto P = pencil(build_uniform_mesh(1, 200), p);
    const double eta = softness_parameters(p, MeshKind::Tensor, 1).eta_default;
    const auto m = stiffness_reduction(solve_gmevp(P.K, P.M), solve_gmevp(soften(P.K, P.S, eta), P.M));
    const double ours[7] = {m.lambda_min, m.lambda_max, m.lambda_soft_max, m.sigma, m.sigma_soft, m.rho, m.varrho};
    for (int c = 0; c < 7; ++c)
      o.expect(sig_digits(ours[c], target[p - 1][c], 4),
               "p=" + std::to_string(p) + " " + names[c] + fmt(" %.6g vs %.5g", ours[c], target[p - 1][c]));
  }
  o.detail = std::to_string(o.checks - o.failures) + "/" + std::to_string(o.checks) + " cells";
  return o;
}

// ---- 4 ----
Outcome table1() {
  Outcome o;
  struct Row {
    int p, N;
    double v[6];
  };
  const std::vector<Row> rows = {
      {1, 8, {6.54e-5, 3.58e-1, 5.85e-3, 2.10e-2, 1.40e1, 3.56e-1}},
      {1, 16, {4.12e-6, 1.78e-1, 1.44e-3, 4.80e-3, 6.63, 6.06e-2}},
      {1, 32, {2.58e-7, 8.91e-2, 3.60e-4, 3.27e-4, 3.23, 1.35e-2}},
      {1, 64, {1.61e-8, 4.45e-2, 8.98e-5, 2.08e-5, 1.61, 3.27e-3}},
      {2, 4, {4.38e-4, 7.57e-2, 2.54e-3, 3.08e-2, 1.37e1, 2.82e-1}},
      {2, 8, {3.15e-5, 1.84e-2, 3.40e-4, 1.11e-2, 3.95, 4.47e-2}},
      {2, 16, {2.04e-6, 4.53e-3, 4.33e-5, 1.80e-3, 1.04, 7.78e-3}},
      {2, 32, {1.29e-7, 1.13e-3, 5.43e-6, 1.50e-4, 2.52e-1, 1.11e-3}},
      {2, 64, {8.06e-9, 2.82e-4, 6.80e-7, 1.02e-5, 6.15e-2, 1.45e-4}},
      {3, 4, {1.16e-7, 5.82e-3, 8.08e-5, 4.32e-2, 5.24, 1.04e-1}},
      {3, 8, {4.47e-10, 7.19e-4, 4.80e-6, 7.64e-4, 9.12e-1, 9.29e-3}},
      {3, 16, {2.08e-12, 8.96e-5, 2.96e-7, 3.02e-6, 1.20e-1, 4.41e-4}},
      {3, 32, {4.04e-13, 1.12e-5, 1.85e-8, 1.15e-8, 1.46e-2, 2.48e-5}},
      {4, 4, {4.55e-9, 2.71e-4, 4.54e-6, 2.29e-4, 2.12, 2.39e-2}},
      {4, 8, {2.09e-11, 1.55e-5, 1.47e-7, 6.70e-6, 1.38e-1, 7.88e-4}},
      {4, 16, {1.25e-13, 9.38e-7, 4.65e-9, 9.01e-8, 8.72e-3, 3.24e-5}},
  };
  const double rates[4][6] = {{4.00, 1.00, 2.01, 3.38, 1.04, 2.25},
                              {3.94, 2.02, 2.97, 2.93, 1.96, 2.72},
                              {6.21, 3.01, 4.03, 7.35, 2.84, 4.05},
                              {7.58, 4.09, 4.97, 5.65, 3.96, 4.77}};
  const char* cols[6] = {"rel1", "H1_1", "L2_1", "rel6", "H1_6", "L2_6"};
  std::vector<std::vector<double>> h(5), ours_by_p[5];
  for (int p = 1; p <= 4; ++p) ours_by_p[p].assign(6, {});
  for (const auto& r : rows) {
    const auto P = pencil(build_uniform_mesh(1, r.N), r.p);
    const double eta = softness_parameters(r.p, MeshKind::Tensor, 1).eta_default;
    const auto s = solve_gmevp(soften(P.K, P.S, eta), P.M, SolveMode::WithVectors);
    const auto exact = exact_laplace_spectrum(1, static_cast<std::size_t>(s.order()));
    const auto rel = eigenvalue_error_curve(s.values, exact.values);
    const auto e1 = eigenfunction_errors(P.space, s, exact, 0);
    const auto e6 = eigenfunction_errors(P.space, s, exact, 5);
    const double v[6] = {rel(0), e1.h1, e1.l2, rel(5), e6.h1, e6.l2};
    h[r.p].push_back(1.0 / r.N);
    for (int c = 0; c < 6; ++c) {
      ours_by_p[r.p][c].push_back(v[c]);
      o.expect(std::abs(v[c] - r.v[c]) <= 0.02 * r.v[c],
               "p=" + std::to_string(r.p) + " N=" + std::to_string(r.N) + " " + cols[c] + fmt(" %.3e vs %.3g", v[c], r.v[c]));
    }
  }
  for (int p = 1; p <= 4; ++p)
    for (int c = 0; c < 6; ++c) {
      const double rate = convergence_rate(h[p], ours_by_p[p][c]).rate;
      o.expect(std::abs(rate - rates[p - 1][c]) <= 0.2,
               "p=" + std::to_string(p) + " rate " + cols[c] + fmt(" %.2f vs %.2f", rate, rates[p - 1][c]));
    }
  o.detail = std::to_string(o.checks - o.failures) + "/" + std::to_string(o.checks) + " entries and rates";
  return o;
}

// ---- 5 ----
Outcome superconvergence() {
  Outcome o;
  for (int N : {8, 16, 32, 64}) {
    const auto P = pencil(build_uniform_mesh(1, N), 1);
    const auto s = solve_gmevp(soften(P.K, P.S, 1.0 / 12), P.M);
    const auto exact = exact_laplace_spectrum(1, static_cast<std::size_t>(s.order()));
    const auto rel = eigenvalue_error_curve(s.values, exact.values);
    for (Eigen::Index j = 0; j < rel.size(); ++j)
      o.expect(rel(j) < superconvergence_bound(static_cast<int>(j + 1), 1.0 / N), fmt("N=%g j=%g", N, j + 1));
  }
  o.detail = std::to_string(o.failures) + " violations over " + std::to_string(o.checks) + " modes";
  return o;
}

// ---- 6 ----
Outcome coercivity() {
  Outcome o;
  std::string d;
  for (int p = 1; p <= 3; ++p) {
    const auto P = pencil(build_uniform_mesh(1, 1000), p);
    const double em = softness_parameters(p, MeshKind::Tensor, 1).eta_max;
    const double below = coercivity_margin(soften(P.K, P.S, 0.95 * em), P.M);
    const double above = coercivity_margin(soften(P.K, P.S, 1.05 * em), P.M);
    o.expect(below > 0.0, fmt("p=%g margin at 0.95 eta_max = %g", p, below));
    o.expect(above <= 0.0, fmt("p=%g margin at 1.05 eta_max = %g", p, above));
    d += fmt("p=%g: %+.3g", p, below) + fmt(" / %+.3g", above, 0.0) + (p < 3 ? "; " : "");
  }
  o.detail = "margins below/above: " + d;
  return o;
}

// ---- 7 ----
Outcome bounds() {
  Outcome o;
  struct Case {
    std::string name;
    std::function<Mesh()> mesh;
    int pmax;
  };
  const std::vector<Case> cases = {
      {"1D N=50", [] { return build_uniform_mesh(1, 50); }, 5},
      {"1D N=200", [] { return build_uniform_mesh(1, 200); }, 5},
      {"2D 20x20", [] { return build_uniform_mesh(2, 20); }, 3},
      {"triangles n=16", [] { return build_unit_square_triangulation(16); }, 3},
      {"L-shape n=8", [] { return build_lshape_triangulation(8); }, 3},
      {"3D 6x6x6", [] { return build_uniform_mesh(3, 6); }, 3},
  };
  long modes = 0;
  int upper_total = 0, ties_total = 0;
  for (const auto& c : cases) {
    const Mesh mesh = c.mesh();
    for (int p = 1; p <= c.pmax; ++p) {
      const auto P = pencil(mesh, p);
      const int d = mesh.dim();
      const double eta = softness_parameters(p, mesh.kind(), std::max(d, mesh.kind() == MeshKind::Simplicial ? 2 : 1)).eta_default;
      const double gamma = gamma_p(p, mesh.kind(), d).gamma;
      const auto fem = solve_gmevp(P.K, P.M), soft = solve_gmevp(soften(P.K, P.S, eta), P.M);
      int lower = 0, upper = 0, ties = 0;
      const double floor = 8.0 * std::numeric_limits<double>::epsilon() * fem.values(fem.order() - 1);
      for (Eigen::Index j = 0; j < fem.order(); ++j) {
        if (soft.values(j) < gamma * fem.values(j)) ++lower;
        if (!(soft.values(j) < fem.values(j))) {
          ++upper;
          if (soft.values(j) - fem.values(j) <= floor) ++ties;
        }
      }
      modes += fem.order();
      upper_total += upper;
      ties_total += ties;
      o.expect(lower == 0 && upper == 0, c.name + " p=" + std::to_string(p) + fmt(": %g lower, %g upper", lower, upper) +
                                             fmt(" (%g within 8 eps lambda_max)", ties, 0.0));
    }
  }
  o.detail = std::to_string(o.failures) + " failing cases, " + std::to_string(modes) + " modes checked";
  if (upper_total > 0)
    o.detail += "; " + std::to_string(ties_total) + " of " + std::to_string(upper_total) +
                " upper violations are ties within 8 eps lambda_max";
  return o;
}

// ---- 8 ----
Outcome traces() {
  Outcome o;
  double worst = 1.0, extremal_dev = 0.0;
  auto take = [&](const TraceCheck& t, const std::string& what) {
    worst = std::min(worst, t.worst_slack());
    o.expect(t.worst_slack() >= -1e-10, what + fmt(" slack %.3g", t.worst_slack(), 0.0));
    if (t.extremal_fraction >= 0.0) {
      extremal_dev = std::max(extremal_dev, std::abs(t.extremal_fraction - 1.0));
      o.expect(std::abs(t.extremal_fraction - 1.0) <= 1e-9, what + " extremal");
    }
  };
  for (int p = 1; p <= 5; ++p) {
    for (int k = 0; k <= p; ++k) take(check_trace(TraceKind::Interval, p, 1, {k}, 1000), fmt("interval p=%g k=%g", p, k));
    for (int d = 1; d <= 3; ++d) {
      take(check_trace(TraceKind::CuboidGrad, p, d, {}, 1000), fmt("cuboid-grad p=%g d=%g", p, d));
      std::vector<int> k(d, 0);
      take(check_trace(TraceKind::CuboidPartial, p, d, k, 1000), fmt("cuboid-partial p=%g d=%g", p, d));
      k[0] = std::min(p, 1);
      if (d > 1) k[d - 1] = std::min(p, 2);
      take(check_trace(TraceKind::CuboidPartial, p, d, k, 1000), fmt("cuboid-partial mixed p=%g d=%g", p, d));
    }
    for (int d = 2; d <= 3; ++d) take(check_trace(TraceKind::SimplexGrad, p, d, {}, 1000), fmt("simplex-grad p=%g d=%g", p, d));
  }
  o.detail = fmt("worst slack %.3g, max extremal deviation %.2e", worst, extremal_dev);
  return o;
}

// ---- 9 ----
Outcome branches() {
  Outcome o;
  double worst = 0.0;
  for (int p = 1; p <= 3; ++p) {
    const auto P = pencil(build_uniform_mesh(1, 40), p);
    const auto s = solve_gmevp(P.K, P.M);
    const auto b = branch_spectrum(p, 40);
    o.expect(static_cast<Eigen::Index>(b.size()) == s.order(), fmt("p=%g count %g", p, static_cast<double>(b.size())));
    if (static_cast<Eigen::Index>(b.size()) != s.order()) continue;
    for (Eigen::Index j = 0; j < s.order(); ++j) {
      const double rel = std::abs(s.values(j) - b[j]) / b[j];
      worst = std::max(worst, rel);
      o.expect(rel <= 1e-9, fmt("p=%g j=%g", p, j + 1));
    }
  }
  const auto sb = stopping_bands(2);
  o.expect(sb.size() == 1 && std::abs(sb[0] - 10.0) <= 1e-9 * 10.0, "p=2 stopping band 10/h^2");
  o.detail = fmt("max rel diff %.2e over %g eigenvalues", worst, o.checks);
  return o;
}

// ---- 10 ----
Outcome presets() {
  Outcome o;
  const auto out = std::filesystem::temp_directory_path() / "softfem_acceptance";
  std::filesystem::remove_all(out);
  int cases = 0;
  std::vector<CaseResult> table4, nonuniform;
  for (const auto& name : preset_names()) {
    const auto r = run_experiment(preset_config(name), (out / name).string());
    o.expect(!r.coercivity_violation, name + ": coercivity violation");
    for (const auto& c : r.cases) {
      if (c.policy != EtaSetting::Policy::Default || c.stiffen) continue;
      ++cases;
      o.expect(c.top_decile_soft < c.top_decile_fem,
               name + " " + c.run + "/" + c.name + fmt(": top decile %.3e vs %.3e", c.top_decile_soft, c.top_decile_fem));
    }
    if (name == "table4") table4 = r.cases;
    if (name == "table-nonuniform") nonuniform = r.cases;
  }
  const double t4[5][7] = {{8.2832, 6.3326e5, 4.2263e5, 7.6451e4, 5.1023e4, 1.4984, 33.26},
                           {8.2829, 3.1795e6, 1.5936e6, 3.8386e5, 1.9240e5, 1.9951, 49.88},
                           {8.2829, 9.0280e6, 3.6298e6, 1.0900e6, 4.3823e5, 2.4872, 59.79},
                           {8.2829, 2.0194e7, 6.8865e6, 2.4380e6, 8.3141e5, 2.9323, 65.90},
                           {8.2829, 3.9263e7, 1.2129e7, 4.7402e6, 1.4643e6, 3.2371, 69.11}};
  const double nu[5][7] = {{9.9653, 1.2631e3, 8.0985e2, 1.2675e2, 8.1267e1, 1.5597, 35.88},
                           {9.8698, 7.2767e3, 3.2585e3, 7.3727e2, 3.3014e2, 2.2332, 55.22},
                           {9.8696, 2.1782e4, 7.6596e3, 2.2070e3, 7.7608e2, 2.8438, 64.84},
                           {9.8696, 5.0056e4, 1.5948e4, 5.0717e3, 1.6159e3, 3.1387, 68.14},
                           {9.8696, 9.9119e4, 2.9618e4, 1.0043e4, 3.0009e3, 3.3466, 70.12}};
  const char* names[7] = {"lambda_min", "lambda_max", "lambda_soft_max", "sigma", "sigma_soft", "rho", "varrho"};
  auto compare = [&](const std::vector<CaseResult>& got, const double (&want)[5][7], const std::string& label) {
    o.expect(got.size() == 5, label + ": expected 5 cases");
    for (const auto& c : got) {
      if (!c.metrics || c.degree < 1 || c.degree > 5) {
        o.expect(false, label + ": missing metrics");
        continue;
      }
      const auto& m = *c.metrics;
      const double ours[7] = {m.lambda_min, m.lambda_max, m.lambda_soft_max, m.sigma, m.sigma_soft, m.rho, m.varrho};
      for (int k = 0; k < 7; ++k)
        o.expect(sig_digits(ours[k], want[c.degree - 1][k], 3),
                 label + " p=" + std::to_string(c.degree) + " " + names[k] + fmt(" %.5g vs %.5g", ours[k], want[c.degree - 1][k]));
    }
  };
  compare(table4, t4, "variable kappa");
  compare(nonuniform, nu, "non-uniform");
  o.detail = std::to_string(cases) + " preset cases, " + std::to_string(o.checks - o.failures) + "/" +
             std::to_string(o.checks) + " checks";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"golden p=1 stencils", golden_stencils},
      {"closed-form p=1 spectra", closed_forms},
      {"uniform 1D stiffness metrics (N=200, p=1..5)", table3},
      {"1D eigenpair errors and rates (p=1..4)", table1},
      {"p=1 superconvergence bound", superconvergence},
      {"coercivity limit is sharp", coercivity},
      {"two-sided eigenvalue bounds", bounds},
      {"discrete trace constants", traces},
      {"branch polynomials and stopping bands", branches},
      {"preset properties and variable/non-uniform metrics", presets},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2zu %s: %s (%s; %.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    for (const auto& n : o.notes) std::printf("    failed: %s\n", n.c_str());
    if (o.failures > static_cast<int>(o.notes.size()))
      std::printf("    ... and %d more\n", o.failures - static_cast<int>(o.notes.size()));
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
