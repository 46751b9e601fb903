#include "doctest.h"

#include <cmath>
#include <numbers>

#include "softfem/assembly.hpp"
#include "softfem/coefficient.hpp"
#include "softfem/error.hpp"
#include "softfem/gevp.hpp"
#include "softfem/oracle.hpp"
#include "softfem/speclab.hpp"

using namespace softfem;

namespace {

const CoefficientField one = CoefficientField::constant(1.0);

struct Solved {
  FeSpace space;
  SymMatrix K, M, S;
  Spectrum<double> spectrum;
};

Solved solve_1d(int N, int p, double eta, bool vectors = true) {
  FeSpace s = build_space(build_uniform_mesh(1, N), p);
  SymMatrix K = assemble_stiffness(s, one), M = assemble_mass(s), S = assemble_penalty(s, one);
  auto sp = solve_gmevp(soften(K, S, eta), M, vectors ? SolveMode::WithVectors : SolveMode::ValuesOnly);
  return {std::move(s), std::move(K), std::move(M), std::move(S), std::move(sp)};
}

}  // namespace

TEST_CASE("eigenvalue error curves") {
  const auto exact = exact_laplace_spectrum(1, 99);
  CHECK(eigenvalue_error_curve(exact.values, exact.values).cwiseAbs().maxCoeff() == 0.0);
  const auto g = solve_1d(100, 1, 0.0, false);
  const auto e = eigenvalue_error_curve(g.spectrum.values, exact.values);
  // top mode against the closed form at t = 99 pi / 100
  const double lh = closed_form_linear_eigenvalue(100, 99, 0.0).fem;
  CHECK(e(98) == doctest::Approx(std::abs(lh - exact.values(98)) / exact.values(98)).epsilon(1e-10));
  CHECK(e(98) == doctest::Approx(0.2396).epsilon(1e-3));
  const auto s = solve_1d(8, 1, 1.0 / 12, false);
  CHECK(eigenvalue_error_curve(s.spectrum.values, exact.values)(0) == doctest::Approx(6.54e-5).epsilon(0.01));
  CHECK_THROWS_AS(eigenvalue_error_curve(g.spectrum.values, exact.values.head(10)), DomainError);
}

TEST_CASE("top decile mean") {
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(20, 1.0, 20.0);
  CHECK(top_decile_mean(v) == doctest::Approx(19.5));
  CHECK(top_decile_mean(Eigen::VectorXd::Constant(3, 2.0)) == doctest::Approx(2.0));
}

TEST_CASE("eigenfunction errors") {
  const auto r = solve_1d(16, 2, 1.0 / 24);
  const auto exact = exact_laplace_spectrum(1, r.spectrum.order());
  const auto e = eigenfunction_errors(r.space, r.spectrum, exact, 0);
  CHECK(e.h1 == doctest::Approx(4.53e-3).epsilon(0.02));
  CHECK(e.l2 == doctest::Approx(4.33e-5).epsilon(0.02));

  // p=1: both methods share eigenvectors
  const auto a = solve_1d(10, 1, 0.0), b = solve_1d(10, 1, 1.0 / 12);
  const auto ex = exact_laplace_spectrum(1, 9);
  for (std::size_t j = 0; j < 9; ++j) {
    CHECK(eigenfunction_errors(a.space, a.spectrum, ex, j).h1 ==
          doctest::Approx(eigenfunction_errors(b.space, b.spectrum, ex, j).h1).epsilon(1e-9));
  }
  CHECK_THROWS_AS(eigenfunction_errors(a.space, solve_1d(10, 1, 0.0, false).spectrum, ex, 0), DomainError);
}

TEST_CASE("eigenfunction errors refuse clustered modes") {
  FeSpace s = build_space(build_uniform_mesh(2, 4), 2);
  const auto sp = solve_gmevp(assemble_stiffness(s, one), assemble_mass(s), SolveMode::WithVectors);
  const auto ex = exact_laplace_spectrum(2, sp.order());
  CHECK_NOTHROW(eigenfunction_errors(s, sp, ex, 0));
  CHECK_THROWS_AS(eigenfunction_errors(s, sp, ex, 1), MultiplicityError);
}

TEST_CASE("interpolated exact eigenfunction gives the interpolation error") {
  FeSpace s = build_space(build_uniform_mesh(1, 6), 2);
  const auto ex = exact_laplace_spectrum(1, s.num_dofs());
  Spectrum<double> fake;
  fake.values = ex.values;
  const Eigen::VectorXd u = interpolate(s, [&](const Eigen::Ref<const Eigen::VectorXd>& x) { return ex.value(0, Eigen::VectorXd(x)); });
  fake.vectors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.num_dofs()), ex.values.size());
  fake.vectors.col(0) = restrict_to_free(s, u);
  const auto e = eigenfunction_errors(s, fake, ex, 0);
  CHECK(e.h1 > 0.0);
  CHECK(e.l2 > 0.0);
  CHECK(e.l2 < 1e-2);
}

TEST_CASE("jump energy ratios") {
  const auto r = solve_1d(40, 1, 1.0 / 12);
  const auto ratio = jump_energy_ratio(r.K, r.S, r.spectrum, 1.0 / 12);
  CHECK(ratio.minCoeff() >= 0.0);
  CHECK(ratio.maxCoeff() <= 1.0 / 3 + 1e-12);  // eta / eta_max with eta_max = 1/4
  const auto zero = jump_energy_ratio(r.K, r.S, r.spectrum, 0.0);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
  const auto same = jump_energy_ratio(r.space, r.spectrum, 1.0 / 12, one);
  CHECK((same - ratio).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jump energy grows toward the top of the spectrum") {
  const auto r = solve_1d(240, 1, 1.0 / 12);
  const auto ratio = jump_energy_ratio(r.K, r.S, r.spectrum, 1.0 / 12);
  const Eigen::Index n = ratio.size();
  std::vector<double> smooth;
  for (Eigen::Index j = 0; j + 5 <= n; ++j) smooth.push_back(ratio.segment(j, 5).mean());
  for (std::size_t j = 1; j < smooth.size(); ++j) CHECK(smooth[j] >= smooth[j - 1] - 1e-12);
  Eigen::Index arg = 0;
  ratio.maxCoeff(&arg);
  CHECK(arg >= n - n / 10);
}

TEST_CASE("Pythagorean identity") {
  const auto g = solve_1d(32, 1, 0.0);
  const auto ex = exact_laplace_spectrum(1, g.spectrum.order());
  const auto p0 = pythagorean_residual(g.space, g.spectrum, ex, 0, 0.0, one);
  CHECK(p0.residual <= 1e-6 * ex.values(0));

  const auto s = solve_1d(16, 2, 1.0 / 24);
  const auto ex2 = exact_laplace_spectrum(1, s.spectrum.order());
  const std::size_t top = static_cast<std::size_t>(s.spectrum.order() - 1);
  const auto pt = pythagorean_residual(s.space, s.spectrum, ex2, top, 1.0 / 24, one);
  CHECK(pt.residual <= 10.0 * pt.scale);

  // residual decays under refinement at least like h^(2p)
  for (int p : {1, 2}) {
    const double eta = 1.0 / (2.0 * (p + 1) * (p + 2));
    std::vector<double> h, res;
    for (int N : {4, 8, 16}) {
      const auto r = solve_1d(N, p, eta);
      const auto e = exact_laplace_spectrum(1, r.spectrum.order());
      h.push_back(1.0 / N);
      res.push_back(pythagorean_residual(r.space, r.spectrum, e, 0, eta, one).residual + 1e-300);
    }
    bool all_tiny = true;
    for (double v : res) all_tiny = all_tiny && v < 1e-12;
    if (!all_tiny) CHECK(convergence_rate(h, res).rate >= 2.0 * p - 0.2);
  }
}

TEST_CASE("convergence rate fits") {
  const std::vector<double> h{0.5, 0.25, 0.125}, e{1.0, 0.25, 0.0625};
  const auto f = convergence_rate(h, e);
  CHECK(f.rate == doctest::Approx(2.0));
  CHECK(f.used == 3);
  const auto g = convergence_rate({0.5, 0.25, 0.125}, {1e-10, 1e-12, 1e-15});
  CHECK(g.used == 2);
  CHECK(g.dropped == 1);
  CHECK_THROWS_AS(convergence_rate({0.5, 0.25}, {1e-15, 1e-16}), NumericError);

  // Galerkin p=1 first eigenvalue converges at rate 2
  std::vector<double> hh, ee;
  for (int N : {8, 16, 32, 64}) {
    const auto r = solve_1d(N, 1, 0.0, false);
    hh.push_back(1.0 / N);
    ee.push_back(std::abs(r.spectrum.values(0) - std::numbers::pi * std::numbers::pi) / (std::numbers::pi * std::numbers::pi));
  }
  CHECK(convergence_rate(hh, ee).rate == doctest::Approx(2.0).epsilon(0.02));
}
