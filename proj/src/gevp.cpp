#include "softfem/gevp.hpp"

namespace softfem {

Spectrum<double> solve_gmevp(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                             SolveMode mode) {
  return solve_gmevp<double>(Eigen::MatrixXd(A), Eigen::MatrixXd(M), mode);
}

double rayleigh_quotient(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                         const Eigen::VectorXd& x) {
  if (A.rows() != x.size() || M.rows() != x.size()) throw DomainError("rayleigh_quotient: size mismatch");
  const double den = x.dot(M * x);
  if (x.squaredNorm() == 0.0 || den == 0.0) throw DomainError("rayleigh_quotient: zero vector");
  return x.dot(A * x) / den;
}

StiffnessMetrics stiffness_reduction(const Spectrum<double>& fem, const Spectrum<double>& soft) {
  if (fem.order() != soft.order()) throw DomainError("stiffness_reduction: spectra differ in order");
  StiffnessMetrics m;
  m.sigma = condition_number(fem);
  m.sigma_soft = condition_number(soft);
  m.rho = m.sigma / m.sigma_soft;
  m.varrho = 100.0 * (1.0 - 1.0 / m.rho);
  m.lambda_min = fem.values(0);
  m.lambda_max = fem.values(fem.order() - 1);
  m.lambda_soft_min = soft.values(0);
  m.lambda_soft_max = soft.values(soft.order() - 1);
  return m;
}

double coercivity_margin(const Eigen::SparseMatrix<double>& K_soft, const Eigen::SparseMatrix<double>& M) {
  const auto s = solve_gmevp(K_soft, M, SolveMode::ValuesOnly);
  if (s.order() == 0) throw DomainError("coercivity_margin: empty system");
  return s.values(0);
}

std::vector<bool> clustered(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  std::vector<bool> out(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    if (same_cluster(values(i), values(i + 1))) out[i] = out[i + 1] = true;
  return out;
}

SolveCheck check_spectrum(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                          const Spectrum<double>& s) {
  if (!s.has_vectors()) throw DomainError("check_spectrum: spectrum has no eigenvectors");
  auto norm1 = [](const Eigen::SparseMatrix<double>& X) {
    Eigen::VectorXd col = Eigen::VectorXd::Zero(X.cols());
    for (int k = 0; k < X.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(X, k); it; ++it) col(it.col()) += std::abs(it.value());
    return col.size() ? col.maxCoeff() : 0.0;
  };
  const double a1 = norm1(A), m1 = norm1(M);
  SolveCheck c;
  const Eigen::MatrixXd AU = A * s.vectors;
  const Eigen::MatrixXd MU = M * s.vectors;
  for (Eigen::Index j = 0; j < s.order(); ++j) {
    const double l = s.values(j);
    const double r = (AU.col(j) - l * MU.col(j)).norm() / (a1 + std::abs(l) * m1);
    c.max_residual = std::max(c.max_residual, r);
  }
  Eigen::MatrixXd G = s.vectors.transpose() * MU;
  G.diagonal().array() -= 1.0;
  c.max_orthogonality = G.cwiseAbs().maxCoeff();
  return c;
}

}  // namespace softfem
