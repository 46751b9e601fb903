#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace softfem {

/// Diffusion coefficient kappa parsed from an arithmetic expression over x, y, z.
///
/// Grammar: + - * / ^ (right-associative, binds tighter than unary minus),
/// parentheses, the functions sin, cos, exp, and the constant pi.
class CoefficientField {
 public:
  /// Throws ParseError carrying the byte offset of the offending token.
  static CoefficientField parse(const std::string& text);
  static CoefficientField constant(double value);

  const std::string& text() const { return text_; }
  bool is_constant() const { return constant_; }

  /// Throws DomainError on division by zero or a non-finite result.
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& point) const;
  double operator()(double x, double y = 0.0, double z = 0.0) const;

  struct Node {
    enum class Op { Number, VarX, VarY, VarZ, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp } op;
    double value = 0.0;
    int lhs = -1;
    int rhs = -1;
  };

 private:
  double eval(int node, const double* xyz) const;

  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  bool constant_ = true;
};

inline CoefficientField parse_coefficient(const std::string& text) { return CoefficientField::parse(text); }

}  // namespace softfem
