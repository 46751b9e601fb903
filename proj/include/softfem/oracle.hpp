#pragma once

// Reference values: exact Laplace spectra on unit boxes, the p=1 closed forms,
// the 1D branch polynomials, discrete trace constants, and a high-order
// Galerkin reference for problems without a closed form.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "softfem/coefficient.hpp"
#include "softfem/mesh.hpp"

namespace softfem {

/// Dirichlet Laplace spectrum of (0,1)^d with L2-normalized eigenfunctions
/// prod_a sqrt(2) sin(k_a pi x_a).
struct ExactSpectrum {
  int dim = 1;
  Eigen::VectorXd values;
  std::vector<std::array<int, 3>> indices;  // unused axes hold 0

  double value(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

ExactSpectrum exact_laplace_spectrum(int dim, std::size_t count);

struct LinearEigenvalue {
  double fem = 0.0;
  double soft = 0.0;
};

/// 1D, p=1, N uniform elements on (0,1), mode 1 <= j <= N-1, 0 <= eta < 1/4.
LinearEigenvalue closed_form_linear_eigenvalue(int N, int j, double eta);

/// Coefficients of f_p(Lambda) in ascending powers, Lambda = lambda h^2, p in {1,2,3}.
std::vector<double> branch_polynomial(int p, double zeta);
/// Real roots of f_p, ascending.
std::vector<double> branch_roots(int p, double zeta);
/// Bubble ("stopping band") values of Lambda: eigenvalues of the interior-mode
/// pencil on a unit element. Empty for p=1; {10} for p=2.
std::vector<double> stopping_bands(int p);
/// All Galerkin eigenvalues of the 1D uniform mesh predicted by the branch
/// polynomials and stopping bands, ascending.
std::vector<double> branch_spectrum(int p, int N);

/// (j pi h)^4 / 360.
double superconvergence_bound(int j, double h);

struct GammaP {
  double gamma = 0.0;
  double best_ratio = 0.0;  // 1/gamma
};
GammaP gamma_p(int p, MeshKind kind, int dim);

// ---- discrete trace inequalities ----

enum class TraceKind { Interval, CuboidGrad, CuboidPartial, SimplexGrad };
TraceKind parse_trace_kind(const std::string& name);
std::string to_string(TraceKind kind);

/// C_1(k,p) = sqrt((p-k+1)(p-k+2)).
double interval_trace_constant(int k, int p);
/// sqrt(p(p+1) / h0).
double cuboid_grad_trace_constant(int p, double h0);
/// sqrt(p(p+d-1) / h0).
double simplex_grad_trace_constant(int p, int dim, double h0);
/// sqrt(sum_a (p-k_a+1)(p-k_a+2) / extent_a).
double cuboid_partial_trace_constant(const std::vector<int>& k, int p, const std::vector<double>& extents);

/// Degree-p polynomial on [-1,1] vanishing at the interior nodes of the
/// (p+2)-point Gauss-Lobatto rule, ascending power coefficients.
std::vector<double> extremal_trace_polynomial(int p);

struct TraceCheck {
  TraceKind kind = TraceKind::Interval;
  int p = 1;
  int dim = 1;
  double bound = 0.0;                // squared constant on the unit cell (unit-cube extents)
  double extremal_fraction = -1.0;   // extremal ratio / bound; negative when not constructed
  double max_random_fraction = 0.0;  // max over samples of ratio / bound
  int samples = 0;

  double worst_slack() const { return 1.0 - max_random_fraction; }
};

/// Ratio ||w||^2_boundary / ||w||^2_cell for random polynomials on random cells
/// against the squared constant; `k` is the derivative order (interval) or the
/// multi-index (cuboid-partial).
TraceCheck check_trace(TraceKind kind, int p, int dim, const std::vector<int>& k, int samples,
                       std::uint64_t seed = 20240611);

// ---- high-order reference ----

struct ReferenceSpectrum {
  Eigen::VectorXd values;
  Eigen::VectorXd error_estimate;  // |fine - coarse| per mode
  int degree = 7;
  std::size_t num_dofs = 0;
};

/// Galerkin eigenvalues of degree `degree` on `mesh` refined `refine` times per
/// edge; the error estimate compares with a half-as-fine level.
ReferenceSpectrum reference_spectrum(const Mesh& mesh, const CoefficientField& kappa, std::size_t count,
                                     int degree = 7, int refine = 4);

}  // namespace softfem
