#pragma once

// Dense generalized symmetric eigensolver A u = lambda M u by Cholesky
// reduction, plus condition-number and stiffness-reduction metrics.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <vector>

#include "softfem/error.hpp"
#include "softfem/polyref.hpp"

namespace softfem {

template <typename Scalar = double>
struct Spectrum {
  VectorX<Scalar> values;   // ascending
  MatrixX<Scalar> vectors;  // M-orthonormal columns; empty for a values-only solve
  Eigen::Index order() const { return values.size(); }
  bool has_vectors() const { return vectors.cols() == values.size() && values.size() > 0; }
};

enum class SolveMode { ValuesOnly, WithVectors };

namespace detail {

/// Flips each column so that its first entry above roundoff is positive.
template <typename Scalar>
void normalize_signs(MatrixX<Scalar>& U) {
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    const Scalar cutoff = Scalar(1e-10) * U.col(j).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
      if (std::abs(U(i, j)) > cutoff) {
        if (U(i, j) < Scalar(0)) U.col(j) = -U.col(j);
        break;
      }
    }
  }
}

}  // namespace detail

/// Full spectrum of the pencil (A, M). Both matrices are read from their lower
/// triangles. Negative eigenvalues are returned as they are.
template <typename Scalar>
Spectrum<Scalar> solve_gmevp(const MatrixX<Scalar>& A, const MatrixX<Scalar>& M,
                             SolveMode mode = SolveMode::WithVectors) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows())
    throw DomainError("solve_gmevp: matrices must be square and of the same order");
  Spectrum<Scalar> out;
  if (A.rows() == 0) return out;

  Eigen::LLT<MatrixX<Scalar>> llt(M);
  if (llt.info() != Eigen::Success) throw MassNotSpd();
  const auto L = llt.matrixL();

  MatrixX<Scalar> C = A.template selfadjointView<Eigen::Lower>();
  L.solveInPlace(C);
  C.transposeInPlace();
  L.solveInPlace(C);
  C = Scalar(0.5) * (C + C.transpose()).eval();

  const bool vectors = mode == SolveMode::WithVectors;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(C, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("solve_gmevp: symmetric eigensolver did not converge");
  out.values = eig.eigenvalues();
  if (vectors) {
    out.vectors = eig.eigenvectors();
    llt.matrixU().solveInPlace(out.vectors);
    detail::normalize_signs(out.vectors);
  }
  return out;
}

/// Sparse input is densified; intended for orders up to a few thousand.
Spectrum<double> solve_gmevp(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                             SolveMode mode = SolveMode::WithVectors);

template <typename Scalar>
Scalar rayleigh_quotient(const MatrixX<Scalar>& A, const MatrixX<Scalar>& M, const VectorX<Scalar>& x) {
  const Scalar den = x.dot(M * x);
  if (x.squaredNorm() == Scalar(0) || den == Scalar(0)) throw DomainError("rayleigh_quotient: zero vector");
  return x.dot(A * x) / den;
}

double rayleigh_quotient(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                         const Eigen::VectorXd& x);

/// sigma = lambda_max / lambda_min; IndefinitePencil when lambda_min <= 0.
template <typename Scalar>
Scalar condition_number(const Spectrum<Scalar>& s) {
  if (s.order() == 0) throw DomainError("condition_number: empty spectrum");
  const Scalar lo = s.values(0), hi = s.values(s.order() - 1);
  if (!(lo > Scalar(0))) throw IndefinitePencil(static_cast<double>(lo));
  return hi / lo;
}

struct StiffnessMetrics {
  double sigma = 0.0;       // Galerkin
  double sigma_soft = 0.0;  // softened
  double rho = 0.0;         // sigma / sigma_soft
  double varrho = 0.0;      // 100 (1 - 1/rho)
  double lambda_min = 0.0, lambda_max = 0.0;
  double lambda_soft_min = 0.0, lambda_soft_max = 0.0;
};

StiffnessMetrics stiffness_reduction(const Spectrum<double>& fem, const Spectrum<double>& soft);

/// Smallest eigenvalue of (K_soft, M); positive iff K_soft is positive definite.
double coercivity_margin(const Eigen::SparseMatrix<double>& K_soft, const Eigen::SparseMatrix<double>& M);

/// |a - b| <= 1e-8 max(a, b, 1).
inline bool same_cluster(double a, double b) {
  return std::abs(a - b) <= 1e-8 * std::max({a, b, 1.0});
}

/// For each index, whether its eigenvalue shares a cluster with a neighbour.
std::vector<bool> clustered(const Eigen::VectorXd& values);

/// Relative residuals ||A u - l M u|| / (||A||_1 + |l| ||M||_1) and the largest
/// deviation of U^T M U from the identity.
struct SolveCheck {
  double max_residual = 0.0;
  double max_orthogonality = 0.0;
};
SolveCheck check_spectrum(const Eigen::SparseMatrix<double>& A, const Eigen::SparseMatrix<double>& M,
                          const Spectrum<double>& s);

}  // namespace softfem
