#include "softfem/coefficient.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "softfem/error.hpp"

namespace softfem {

namespace {

using Node = CoefficientField::Node;
using Op = Node::Op;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  int parse_all(std::vector<Node>& out) {
    nodes_ = &out;
    skip();
    if (pos_ == s_.size()) throw ParseError("empty expression", pos_);
    const int root = expr();
    skip();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    return root;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  int push(Node n) {
    nodes_->push_back(n);
    return static_cast<int>(nodes_->size()) - 1;
  }
  int binary(Op op, int l, int r) { return push({op, 0.0, l, r}); }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = binary(Op::Add, lhs, term());
      else if (accept('-'))
        lhs = binary(Op::Sub, lhs, term());
      else
        return lhs;
    }
  }
  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = binary(Op::Mul, lhs, unary());
      else if (accept('/'))
        lhs = binary(Op::Div, lhs, unary());
      else
        return lhs;
    }
  }
  int unary() {
    if (accept('-')) return push({Op::Neg, 0.0, unary(), -1});
    if (accept('+')) return unary();
    return power();
  }
  int power() {
    const int base = primary();
    if (accept('^')) return binary(Op::Pow, base, unary());
    return base;
  }
  int primary() {
    skip();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const std::size_t start = pos_;
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", start);
      pos_ += static_cast<std::size_t>(end - begin);
      return push({Op::Number, v, -1, -1});
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return push({Op::VarX, 0.0, -1, -1});
      if (name == "y") return push({Op::VarY, 0.0, -1, -1});
      if (name == "z") return push({Op::VarZ, 0.0, -1, -1});
      if (name == "pi") return push({Op::Number, std::numbers::pi, -1, -1});
      Op fn;
      if (name == "sin")
        fn = Op::Sin;
      else if (name == "cos")
        fn = Op::Cos;
      else if (name == "exp")
        fn = Op::Exp;
      else
        throw ParseError("unknown identifier '" + name + "'", start);
      if (!accept('(')) throw ParseError("expected '(' after " + name, pos_);
      const int arg = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return push({fn, 0.0, arg, -1});
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", start);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  std::vector<Node>* nodes_ = nullptr;
};

}  // namespace

CoefficientField CoefficientField::parse(const std::string& text) {
  auto nodes = std::make_shared<std::vector<Node>>();
  Parser parser(text);
  CoefficientField field;
  field.root_ = parser.parse_all(*nodes);
  field.text_ = text;
  field.constant_ = true;
  for (const auto& n : *nodes)
    if (n.op == Op::VarX || n.op == Op::VarY || n.op == Op::VarZ) field.constant_ = false;
  field.nodes_ = std::move(nodes);
  return field;
}

CoefficientField CoefficientField::constant(double value) {
  auto nodes = std::make_shared<std::vector<Node>>();
  nodes->push_back({Op::Number, value, -1, -1});
  CoefficientField field;
  field.root_ = 0;
  field.text_ = std::to_string(value);
  field.nodes_ = std::move(nodes);
  return field;
}

double CoefficientField::eval(int node, const double* xyz) const {
  const Node& n = (*nodes_)[node];
  switch (n.op) {
    case Op::Number:
      return n.value;
    case Op::VarX:
      return xyz[0];
    case Op::VarY:
      return xyz[1];
    case Op::VarZ:
      return xyz[2];
    case Op::Neg:
      return -eval(n.lhs, xyz);
    case Op::Add:
      return eval(n.lhs, xyz) + eval(n.rhs, xyz);
    case Op::Sub:
      return eval(n.lhs, xyz) - eval(n.rhs, xyz);
    case Op::Mul:
      return eval(n.lhs, xyz) * eval(n.rhs, xyz);
    case Op::Div: {
      const double den = eval(n.rhs, xyz);
      if (den == 0.0) throw DomainError("coefficient: division by zero");
      return eval(n.lhs, xyz) / den;
    }
    case Op::Pow:
      return std::pow(eval(n.lhs, xyz), eval(n.rhs, xyz));
    case Op::Sin:
      return std::sin(eval(n.lhs, xyz));
    case Op::Cos:
      return std::cos(eval(n.lhs, xyz));
    case Op::Exp:
      return std::exp(eval(n.lhs, xyz));
  }
  return 0.0;
}

double CoefficientField::operator()(double x, double y, double z) const {
  const double xyz[3] = {x, y, z};
  const double v = eval(root_, xyz);
  if (!std::isfinite(v)) throw DomainError("coefficient: non-finite value");
  return v;
}

double CoefficientField::operator()(const Eigen::Ref<const Eigen::VectorXd>& point) const {
  double xyz[3] = {0.0, 0.0, 0.0};
  for (Eigen::Index a = 0; a < point.size() && a < 3; ++a) xyz[a] = point(a);
  return (*this)(xyz[0], xyz[1], xyz[2]);
}

}  // namespace softfem
