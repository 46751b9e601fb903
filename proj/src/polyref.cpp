#include "softfem/polyref.hpp"

#include <cassert>

namespace softfem {

QuadratureRule<double> tensor_rule(const QuadratureRule<double>& line, int dim) {
  if (dim < 1 || dim > 3) throw DomainError("tensor_rule: dimension must be 1, 2 or 3");
  const int n = line.size();
  int total = 1;
  for (int a = 0; a < dim; ++a) total *= n;
  QuadratureRule<double> rule;
  rule.nodes.resize(dim, total);
  rule.weights.resize(total);
  rule.exactness = line.exactness;
  for (int q = 0; q < total; ++q) {
    int rem = q;
    double w = 1.0;
    for (int a = 0; a < dim; ++a) {
      const int i = rem % n;
      rem /= n;
      rule.nodes(a, q) = line.nodes(0, i);
      w *= line.weights(i);
    }
    rule.weights(q) = w;
  }
  return rule;
}

QuadratureRule<double> unit_interval_rule(int points) {
  auto rule = gauss_legendre_rule<double>(points);
  rule.nodes = (rule.nodes.array() + 1.0) * 0.5;
  rule.weights *= 0.5;
  return rule;
}

QuadratureRule<double> simplex_rule(int dim, int degree) {
  if (dim != 2 && dim != 3) throw DomainError("simplex_rule: dimension must be 2 or 3");
  if (degree < 0) throw DomainError("simplex_rule: negative degree");
  // The collapsed map raises the degree in the collapsed directions by the
  // Jacobian factor (1-v)(1-w)^2, so size the line rule for degree + dim - 1.
  const int n = (degree + dim) / 2 + 1;
  const auto line = unit_interval_rule(n);
  QuadratureRule<double> rule;
  rule.exactness = degree;
  if (dim == 2) {
    rule.nodes.resize(2, n * n);
    rule.weights.resize(n * n);
    int q = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i, ++q) {
        const double u = line.nodes(0, i), v = line.nodes(0, j);
        rule.nodes(0, q) = u * (1.0 - v);
        rule.nodes(1, q) = v;
        rule.weights(q) = line.weights(i) * line.weights(j) * (1.0 - v);
      }
  } else {
    rule.nodes.resize(3, n * n * n);
    rule.weights.resize(n * n * n);
    int q = 0;
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i, ++q) {
          const double u = line.nodes(0, i), v = line.nodes(0, j), w = line.nodes(0, k);
          rule.nodes(0, q) = u * (1.0 - v) * (1.0 - w);
          rule.nodes(1, q) = v * (1.0 - w);
          rule.nodes(2, q) = w;
          rule.weights(q) = line.weights(i) * line.weights(j) * line.weights(k) * (1.0 - v) *
                            (1.0 - w) * (1.0 - w);
        }
  }
  return rule;
}

ReferenceBasis::ReferenceBasis(CellShape shape, int dim, int degree)
    : shape_(shape), dim_(dim), degree_(degree) {
  if (degree < 1 || degree > 10) throw DomainError("ReferenceBasis: degree must be in [1, 10]");
  const int p = degree;
  if (shape == CellShape::Cuboid) {
    if (dim < 1 || dim > 3) throw DomainError("ReferenceBasis: cuboid dimension must be 1..3");
    const auto gll = gauss_lobatto_rule<double>(p + 1);
    line_nodes_.assign(gll.nodes.data(), gll.nodes.data() + p + 1);
    line_denominators_.resize(p + 1);
    for (int i = 0; i <= p; ++i) {
      double d = 1.0;
      for (int m = 0; m <= p; ++m)
        if (m != i) d *= line_nodes_[i] - line_nodes_[m];
      line_denominators_[i] = d;
    }
    int total = 1;
    for (int a = 0; a < dim; ++a) total *= p + 1;
    nodes_.resize(dim, total);
    index_.resize(total);
    for (int l = 0; l < total; ++l) {
      int rem = l;
      std::array<int, 4> idx{0, 0, 0, 0};
      for (int a = 0; a < dim; ++a) {
        idx[a] = rem % (p + 1);
        rem /= p + 1;
        nodes_(a, l) = line_nodes_[idx[a]];
      }
      index_[l] = idx;
    }
  } else {
    if (dim != 2 && dim != 3) throw DomainError("ReferenceBasis: simplex dimension must be 2 or 3");
    for (int k = 0; k <= (dim == 3 ? p : 0); ++k)
      for (int j = 0; j + k <= p; ++j)
        for (int i = 0; i + j + k <= p; ++i) index_.push_back({p - i - j - k, i, j, k});
    nodes_.resize(dim, static_cast<Eigen::Index>(index_.size()));
    for (std::size_t l = 0; l < index_.size(); ++l)
      for (int a = 0; a < dim; ++a) nodes_(a, l) = double(index_[l][a + 1]) / p;
  }
}

bool ReferenceBasis::contains(const Eigen::Ref<const Eigen::VectorXd>& point, double tol) const {
  if (point.size() != dim_) return false;
  if (shape_ == CellShape::Cuboid) return (point.array().abs() <= 1.0 + tol).all();
  return (point.array() >= -tol).all() && point.sum() <= 1.0 + tol;
}

void ReferenceBasis::eval_line(double x, double* values, double* derivs) const {
  const int n = degree_ + 1;
  for (int i = 0; i < n; ++i) {
    double v = 1.0, dv = 0.0;
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      // product rule accumulated in one pass
      dv = dv * (x - line_nodes_[m]) + v;
      v *= x - line_nodes_[m];
    }
    values[i] = v / line_denominators_[i];
    derivs[i] = dv / line_denominators_[i];
  }
}

BasisValues ReferenceBasis::eval(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  BasisValues out{Eigen::VectorXd(size()), Eigen::MatrixXd(dim_, size())};
  eval(point, out.values, out.gradients);
  return out;
}

void ReferenceBasis::eval(const Eigen::Ref<const Eigen::VectorXd>& point,
                          Eigen::Ref<Eigen::VectorXd> values,
                          Eigen::Ref<Eigen::MatrixXd> gradients) const {
  if (!contains(point)) throw DomainError("ReferenceBasis::eval: point outside the reference cell");
  const int p = degree_;
  const int n = size();
  if (shape_ == CellShape::Cuboid) {
    double lv[3][11], ld[3][11];
    for (int a = 0; a < dim_; ++a) eval_line(point(a), lv[a], ld[a]);
    for (int l = 0; l < n; ++l) {
      const auto& idx = index_[l];
      double v = 1.0;
      for (int a = 0; a < dim_; ++a) v *= lv[a][idx[a]];
      values(l) = v;
      for (int g = 0; g < dim_; ++g) {
        double dv = 1.0;
        for (int a = 0; a < dim_; ++a) dv *= (a == g) ? ld[a][idx[a]] : lv[a][idx[a]];
        gradients(g, l) = dv;
      }
    }
    return;
  }
  // Barycentric product form: phi_alpha = prod_i prod_{k<alpha_i} (p lambda_i - k)/(k+1).
  double lambda[4];
  lambda[0] = 1.0 - point.sum();
  for (int a = 0; a < dim_; ++a) lambda[a + 1] = point(a);
  // factor[i][a] = prod_{k<a} (p lambda_i - k)/(k+1) and its lambda-derivative
  double factor[4][11], dfactor[4][11];
  for (int i = 0; i <= dim_; ++i) {
    factor[i][0] = 1.0;
    dfactor[i][0] = 0.0;
    for (int a = 1; a <= p; ++a) {
      const double t = (p * lambda[i] - (a - 1)) / a;
      dfactor[i][a] = dfactor[i][a - 1] * t + factor[i][a - 1] * double(p) / a;
      factor[i][a] = factor[i][a - 1] * t;
    }
  }
  for (int l = 0; l < n; ++l) {
    const auto& alpha = index_[l];
    double v = 1.0;
    for (int i = 0; i <= dim_; ++i) v *= factor[i][alpha[i]];
    values(l) = v;
    double dl[4];
    for (int i = 0; i <= dim_; ++i) {
      double d = dfactor[i][alpha[i]];
      for (int m = 0; m <= dim_; ++m)
        if (m != i) d *= factor[m][alpha[m]];
      dl[i] = d;
    }
    for (int a = 0; a < dim_; ++a) gradients(a, l) = dl[a + 1] - dl[0];
  }
}

Tabulation tabulate(const ReferenceBasis& basis, const QuadratureRule<double>& rule) {
  assert(rule.dim() == basis.dim());
  Tabulation tab;
  tab.values.reserve(rule.size());
  tab.gradients.reserve(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    auto bv = basis.eval(rule.nodes.col(q));
    tab.values.push_back(std::move(bv.values));
    tab.gradients.push_back(std::move(bv.gradients));
  }
  return tab;
}

}  // namespace softfem
