#pragma once

// Reference-element polynomials and quadrature.
//
// Reference cells: the interval and cuboid live on [-1,1]^d, the simplex is
// {xi_i >= 0, sum_i xi_i <= 1}. Quadrature generators are templated on the
// scalar so the oracles can run them in extended precision.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "softfem/error.hpp"

namespace softfem {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct LegendreValue {
  Scalar value;
  Scalar derivative;
};

/// L_n(x) and L_n'(x) by the three-term recurrence.
template <typename Scalar>
LegendreValue<Scalar> legendre_eval(int n, Scalar x) {
  if (n < 0) throw DomainError("legendre_eval: negative degree");
  if (n == 0) return {Scalar(1), Scalar(0)};
  Scalar prev(1), cur = x;
  Scalar dprev(0), dcur(1);
  for (int k = 1; k < n; ++k) {
    // (k+1) L_{k+1} = (2k+1) x L_k - k L_{k-1}
    const Scalar next = (Scalar(2 * k + 1) * x * cur - Scalar(k) * prev) / Scalar(k + 1);
    const Scalar dnext = dprev + Scalar(2 * k + 1) * cur;
    prev = cur;
    cur = next;
    dprev = dcur;
    dcur = dnext;
  }
  return {cur, dcur};
}

/// Points and weights on a reference cell (one column of `nodes` per point).
template <typename Scalar = double>
struct QuadratureRule {
  MatrixX<Scalar> nodes;
  VectorX<Scalar> weights;
  int exactness = 0;

  int dim() const { return static_cast<int>(nodes.rows()); }
  int size() const { return static_cast<int>(weights.size()); }
};

namespace detail {

template <typename Scalar>
Scalar newton_tolerance() {
  return std::max(Scalar(1e-15), Scalar(16) * std::numeric_limits<Scalar>::epsilon());
}

// Newton on f with derivative df, kept inside the bracket (lo, hi); bisection
// takes over whenever a step would leave it.
template <typename Scalar, typename F>
Scalar safeguarded_newton(F&& fdf, Scalar x, Scalar lo, Scalar hi) {
  const Scalar tol = newton_tolerance<Scalar>();
  for (int it = 0; it < 100; ++it) {
    const auto [f, df] = fdf(x);
    Scalar next = (df != Scalar(0)) ? x - f / df : (lo + hi) / 2;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    const auto [fl, dfl] = fdf(lo);
    (void)dfl;
    if ((fl < 0) == (f < 0))
      lo = x;
    else
      hi = x;
    if (std::abs(next - x) <= tol * std::max(Scalar(1), std::abs(x))) return next;
    x = next;
  }
  throw NumericError("quadrature: Newton iteration did not converge in 100 steps");
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1,1], exact to degree 2n-1.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_legendre_rule(int n) {
  if (n < 1 || n > 64) throw DomainError("gauss_legendre_rule: point count must be in [1, 64]");
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(1, n);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 1;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  for (int i = 0; i < n; ++i) {
    // Roots of L_n interlace with the Chebyshev-like angles below, so the
    // bracket between neighbouring guesses isolates exactly one root.
    const Scalar guess = -std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    const Scalar lo = -std::cos(pi * Scalar(i) / Scalar(n));
    const Scalar hi = -std::cos(pi * Scalar(i + 1) / Scalar(n));
    auto fdf = [n](Scalar x) {
      const auto l = legendre_eval<Scalar>(n, x);
      return std::pair<Scalar, Scalar>{l.value, l.derivative};
    };
    const Scalar x = (n == 1) ? Scalar(0) : detail::safeguarded_newton<Scalar>(fdf, guess, lo, hi);
    const Scalar d = legendre_eval<Scalar>(n, x).derivative;
    rule.nodes(0, i) = x;
    rule.weights(i) = Scalar(2) / ((Scalar(1) - x * x) * d * d);
  }
  if (n % 2 == 1) rule.nodes(0, n / 2) = Scalar(0);
  return rule;
}

/// n-point Gauss-Lobatto rule on [-1,1] (endpoints included), exact to degree 2n-3.
template <typename Scalar = double>
QuadratureRule<Scalar> gauss_lobatto_rule(int n) {
  if (n < 2 || n > 64) throw DomainError("gauss_lobatto_rule: point count must be in [2, 64]");
  const int N = n - 1;  // interior nodes are the roots of L_N'
  QuadratureRule<Scalar> rule;
  rule.nodes.resize(1, n);
  rule.weights.resize(n);
  rule.exactness = 2 * n - 3;
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar end_weight = Scalar(2) / (Scalar(N) * Scalar(N + 1));
  rule.nodes(0, 0) = Scalar(-1);
  rule.nodes(0, N) = Scalar(1);
  rule.weights(0) = end_weight;
  rule.weights(N) = end_weight;
  auto fdf = [N](Scalar x) {
    const auto l = legendre_eval<Scalar>(N, x);
    // (1 - x^2) L'' = 2x L' - N(N+1) L
    const Scalar second = (Scalar(2) * x * l.derivative - Scalar(N) * Scalar(N + 1) * l.value) /
                          (Scalar(1) - x * x);
    return std::pair<Scalar, Scalar>{l.derivative, second};
  };
  // roots of L_N' interlace with the Gauss points of L_N
  const auto gauss = gauss_legendre_rule<Scalar>(N);
  for (int i = 1; i < N; ++i) {
    const Scalar lo = gauss.nodes(0, i - 1);
    const Scalar hi = gauss.nodes(0, i);
    Scalar guess = -std::cos(pi * Scalar(i) / Scalar(N));
    if (!(guess > lo && guess < hi)) guess = (lo + hi) / 2;
    const Scalar x = detail::safeguarded_newton<Scalar>(fdf, guess, lo, hi);
    const Scalar l = legendre_eval<Scalar>(N, x).value;
    rule.nodes(0, i) = x;
    rule.weights(i) = end_weight / (l * l);
  }
  if (n % 2 == 1) rule.nodes(0, N / 2) = Scalar(0);
  return rule;
}

/// Tensor product of a 1D rule on [-1,1]^d; point index runs with axis 0 fastest.
QuadratureRule<double> tensor_rule(const QuadratureRule<double>& line, int dim);

/// Rule exact to `degree` on the reference simplex of dimension 2 or 3 (collapsed Gauss-Legendre).
QuadratureRule<double> simplex_rule(int dim, int degree);

/// Affine map of a 1D rule from [-1,1] to [0,1].
QuadratureRule<double> unit_interval_rule(int points);

enum class CellShape { Cuboid, Simplex };

/// Values (n) and reference gradients (dim x n) of a basis at one point.
struct BasisValues {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;
};

/// Nodal Lagrange basis on a reference cell.
///
/// Cuboid (dim 1..3): Q_p with Gauss-Lobatto tensor nodes, local index
/// sum_a i_a (p+1)^a. Simplex (dim 2..3): P_p on the principal lattice.
class ReferenceBasis {
 public:
  ReferenceBasis(CellShape shape, int dim, int degree);

  CellShape shape() const { return shape_; }
  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(nodes_.cols()); }

  /// Interpolation nodes, one reference point per column.
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  /// Per-node lattice multi-index: per-axis indices (cuboid) or barycentric counts (simplex, entry 0 is lambda_0).
  const std::vector<std::array<int, 4>>& multi_index() const { return index_; }
  /// 1D Gauss-Lobatto node set used along each cuboid axis.
  const std::vector<double>& line_nodes() const { return line_nodes_; }

  BasisValues eval(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  void eval(const Eigen::Ref<const Eigen::VectorXd>& point, Eigen::Ref<Eigen::VectorXd> values,
            Eigen::Ref<Eigen::MatrixXd> gradients) const;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& point, double tol = 1e-12) const;

 private:
  void eval_line(double x, double* values, double* derivs) const;

  CellShape shape_;
  int dim_;
  int degree_;
  Eigen::MatrixXd nodes_;
  std::vector<std::array<int, 4>> index_;
  std::vector<double> line_nodes_;
  std::vector<double> line_denominators_;
};

/// Basis values and gradients tabulated at every point of a rule.
struct Tabulation {
  std::vector<Eigen::VectorXd> values;     // per point
  std::vector<Eigen::MatrixXd> gradients;  // per point, dim x n
};

Tabulation tabulate(const ReferenceBasis& basis, const QuadratureRule<double>& rule);

}  // namespace softfem
