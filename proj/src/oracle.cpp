#include "softfem/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "softfem/assembly.hpp"
#include "softfem/error.hpp"
#include "softfem/gevp.hpp"
#include "softfem/polyref.hpp"

namespace softfem {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double ExactSpectrum::value(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto& k = indices.at(j);
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= std::numbers::sqrt2 * std::sin(k[a] * kPi * x(a));
  return v;
}

Eigen::VectorXd ExactSpectrum::gradient(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const auto& k = indices.at(j);
  Eigen::VectorXd g(dim);
  for (int a = 0; a < dim; ++a) {
    double v = std::numbers::sqrt2 * k[a] * kPi * std::cos(k[a] * kPi * x(a));
    for (int b = 0; b < dim; ++b)
      if (b != a) v *= std::numbers::sqrt2 * std::sin(k[b] * kPi * x(b));
    g(a) = v;
  }
  return g;
}

ExactSpectrum exact_laplace_spectrum(int dim, std::size_t count) {
  if (dim < 1 || dim > 3) throw DomainError("exact_laplace_spectrum: dimension must be 1, 2 or 3");
  if (count == 0) throw DomainError("exact_laplace_spectrum: count must be >= 1");
  int K = static_cast<int>(std::ceil(std::pow(double(count), 1.0 / dim))) + 1;
  for (;;) {
    std::vector<std::array<int, 3>> tuples;
    std::array<int, 3> k{1, 1, 1};
    for (k[2] = 1; k[2] <= (dim > 2 ? K : 1); ++k[2])
      for (k[1] = 1; k[1] <= (dim > 1 ? K : 1); ++k[1])
        for (k[0] = 1; k[0] <= K; ++k[0]) tuples.push_back({k[0], dim > 1 ? k[1] : 0, dim > 2 ? k[2] : 0});
    auto norm2 = [](const std::array<int, 3>& t) { return t[0] * t[0] + t[1] * t[1] + t[2] * t[2]; };
    std::sort(tuples.begin(), tuples.end(), [&](const auto& a, const auto& b) {
      const int na = norm2(a), nb = norm2(b);
      return na != nb ? na < nb : a < b;
    });
    // any tuple outside the box has squared norm at least (K+1)^2 + (dim-1)
    if (tuples.size() >= count && norm2(tuples[count - 1]) < (K + 1) * (K + 1) + (dim - 1)) {
      ExactSpectrum s;
      s.dim = dim;
      s.values.resize(static_cast<Eigen::Index>(count));
      s.indices.assign(tuples.begin(), tuples.begin() + static_cast<long>(count));
      for (std::size_t j = 0; j < count; ++j) s.values(j) = norm2(s.indices[j]) * kPi * kPi;
      return s;
    }
    K *= 2;
  }
}

LinearEigenvalue closed_form_linear_eigenvalue(int N, int j, double eta) {
  if (N < 2) throw DomainError("closed_form_linear_eigenvalue: need N >= 2");
  if (j < 1 || j > N - 1) throw DomainError("closed_form_linear_eigenvalue: mode index out of range");
  if (!(eta >= 0.0 && eta < 0.25)) throw DomainError("closed_form_linear_eigenvalue: eta must lie in [0, 1/4)");
  const double h = 1.0 / N;
  const double t = j * kPi * h;
  const double c = std::cos(t);
  const double scale = 6.0 / (h * h) / (2.0 + c);
  LinearEigenvalue out;
  out.fem = scale * (1.0 - c);
  out.soft = scale * (1.0 - 3.0 * eta - (1.0 - 4.0 * eta) * c - eta * std::cos(2.0 * t));
  return out;
}

std::vector<double> branch_polynomial(int p, double zeta) {
  if (std::abs(zeta) > 1.0) throw DomainError("branch_polynomial: |zeta| must be <= 1");
  switch (p) {
    case 1:
      return {-6.0 * (1.0 - zeta), 2.0 + zeta};
    case 2:
      return {480.0 * (1.0 - zeta), -16.0 * (13.0 + 2.0 * zeta), 2.0 * (3.0 - zeta)};
    case 3:
      return {-25200.0 * (1.0 - zeta), 360.0 * (32.0 + 3.0 * zeta), -30.0 * (18.0 - zeta), 4.0 + zeta};
    default:
      throw DomainError("branch_polynomial: p must be 1, 2 or 3");
  }
}

std::vector<double> branch_roots(int p, double zeta) {
  const auto c = branch_polynomial(p, zeta);
  const int n = static_cast<int>(c.size()) - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -c[i] / c[n];
  Eigen::EigenSolver<Eigen::MatrixXd> eig(companion, false);
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    double x = eig.eigenvalues()(i).real();
    // polish; the roots are real and simple for |zeta| < 1
    for (int it = 0; it < 4; ++it) {
      double f = 0.0, df = 0.0;
      for (int k = n; k >= 0; --k) {
        df = df * x + f;
        f = f * x + c[k];
      }
      if (df == 0.0) break;
      x -= f / df;
    }
    roots.push_back(x);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> stopping_bands(int p) {
  if (p < 1) throw DomainError("stopping_bands: p must be >= 1");
  if (p == 1) return {};
  const ReferenceBasis basis(CellShape::Cuboid, 1, p);
  const auto rule = tensor_rule(gauss_legendre_rule<double>(p + 2), 1);
  const auto tab = tabulate(basis, rule);
  std::vector<int> bubbles;
  for (int l = 0; l < basis.size(); ++l)
    if (basis.multi_index()[l][0] != 0 && basis.multi_index()[l][0] != p) bubbles.push_back(l);
  const auto nb = static_cast<Eigen::Index>(bubbles.size());
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nb, nb), M = Eigen::MatrixXd::Zero(nb, nb);
  for (int q = 0; q < rule.size(); ++q)
    for (Eigen::Index a = 0; a < nb; ++a)
      for (Eigen::Index b = 0; b < nb; ++b) {
        // [-1,1] -> [0,1]: derivatives scale by 2, the measure by 1/2
        K(a, b) += rule.weights(q) * 2.0 * tab.gradients[q](0, bubbles[a]) * tab.gradients[q](0, bubbles[b]);
        M(a, b) += rule.weights(q) * 0.5 * tab.values[q](bubbles[a]) * tab.values[q](bubbles[b]);
      }
  const auto s = solve_gmevp<double>(K, M, SolveMode::ValuesOnly);
  return std::vector<double>(s.values.data(), s.values.data() + s.values.size());
}

std::vector<double> branch_spectrum(int p, int N) {
  if (N < 2) throw DomainError("branch_spectrum: need N >= 2");
  const double inv_h2 = double(N) * N;
  std::vector<double> out;
  for (int j = 1; j < N; ++j)
    for (double r : branch_roots(p, std::cos(j * kPi / N))) out.push_back(r * inv_h2);
  for (double b : stopping_bands(p)) out.push_back(b * inv_h2);
  std::sort(out.begin(), out.end());
  return out;
}

double superconvergence_bound(int j, double h) {
  const double t = j * kPi * h;
  return t * t * t * t / 360.0;
}

GammaP gamma_p(int p, MeshKind kind, int dim) {
  if (p < 1) throw DomainError("gamma_p: p must be >= 1");
  GammaP g;
  if (kind == MeshKind::Tensor) {
    g.gamma = 2.0 / (p + 2.0);
  } else {
    if (dim != 2 && dim != 3) throw DomainError("gamma_p: simplicial meshes need d in {2,3}");
    g.gamma = (4.0 - dim) / (p + 4.0 - dim);
  }
  g.best_ratio = 1.0 / g.gamma;
  return g;
}

ReferenceSpectrum reference_spectrum(const Mesh& mesh, const CoefficientField& kappa, std::size_t count,
                                     int degree, int refine) {
  if (degree < 1 || refine < 1) throw DomainError("reference_spectrum: degree and refine must be >= 1");
  auto solve = [&](int r, int q) {
    const auto fine = std::make_shared<const Mesh>(refine_mesh(mesh, r));
    const FeSpace space = build_space(fine, q);
    if (space.num_dofs() < count) throw DomainError("reference_spectrum: reference space too small");
    const auto s = solve_gmevp(assemble_stiffness(space, kappa), assemble_mass(space), SolveMode::ValuesOnly);
    return std::make_pair(Eigen::VectorXd(s.values.head(static_cast<Eigen::Index>(count))), space.num_dofs());
  };
  ReferenceSpectrum out;
  out.degree = degree;
  auto [fine, n] = solve(refine, degree);
  out.values = fine;
  out.num_dofs = n;
  // the comparison level halves the refinement, or lowers the degree when unrefined
  const auto coarse = (refine >= 2) ? solve(refine / 2, degree).first : solve(1, std::max(1, degree - 1)).first;
  out.error_estimate = (fine - coarse).cwiseAbs();
  return out;
}

}  // namespace softfem
