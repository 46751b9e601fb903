#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "softfem/error.hpp"
#include "softfem/oracle.hpp"
#include "softfem/polyref.hpp"

namespace softfem {

namespace {

double horner(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

// 2 (q(-1)^2 + q(1)^2) / int_{-1}^{1} q^2, the scale-free 1D ratio h ||q||^2_dT / ||q||^2_T.
double interval_ratio(const std::function<double(double)>& q, int degree) {
  const auto rule = gauss_legendre_rule<double>(degree + 1);
  double vol = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double v = q(rule.nodes(0, i));
    vol += rule.weights(i) * v * v;
  }
  const double a = q(-1.0), b = q(1.0);
  return 2.0 * (a * a + b * b) / vol;
}

// Random polynomial of per-axis degrees `deg` in a Legendre tensor basis on [-1,1]^d.
struct TensorPoly {
  std::vector<int> deg;
  std::vector<double> coef;

  double operator()(const Eigen::VectorXd& xi) const {
    const int d = static_cast<int>(deg.size());
    std::vector<std::vector<double>> axis(d);
    for (int a = 0; a < d; ++a)
      for (int n = 0; n <= deg[a]; ++n) axis[a].push_back(legendre_eval(n, xi(a)).value);
    double v = 0.0;
    std::size_t idx = 0;
    std::vector<int> m(d, 0);
    for (;;) {
      double t = coef[idx++];
      for (int a = 0; a < d; ++a) t *= axis[a][m[a]];
      v += t;
      int a = 0;
      while (a < d && ++m[a] > deg[a]) m[a++] = 0;
      if (a == d) break;
    }
    return v;
  }
};

// ||w||^2_dT / ||w||^2_T for a function given on the reference box [-1,1]^d
// mapped onto a box with the given extents; `degree` bounds the per-axis degree
// of w.
double box_partial_ratio(const std::function<double(const Eigen::VectorXd&)>& w, const std::vector<double>& ext,
                         int degree) {
  const int d = static_cast<int>(ext.size());
  const auto line = gauss_legendre_rule<double>(degree + 1);
  const auto vol_rule = tensor_rule(line, d);
  double jac = 1.0;
  for (double e : ext) jac *= 0.5 * e;
  double vol = 0.0;
  for (int q = 0; q < vol_rule.size(); ++q) {
    const double v = w(vol_rule.nodes.col(q));
    vol += vol_rule.weights(q) * jac * v * v;
  }
  double bdry = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    const double face_jac = jac / (0.5 * ext[axis]);
    for (double side : {-1.0, 1.0}) {
      if (d == 1) {
        Eigen::VectorXd xi(1);
        xi(0) = side;
        const double v = w(xi);
        bdry += v * v;
        continue;
      }
      const auto face = tensor_rule(line, d - 1);
      for (int q = 0; q < face.size(); ++q) {
        Eigen::VectorXd xi(d);
        for (int a = 0, t = 0; a < d; ++a) xi(a) = (a == axis) ? side : face.nodes(t++, q);
        const double v = w(xi);
        bdry += face.weights(q) * face_jac * v * v;
      }
    }
  }
  return bdry / vol;
}

// h0 ||grad v . n||^2_dT / ||grad v||^2_T on a box; grad returns the physical gradient.
double box_grad_ratio(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
                      const std::vector<double>& ext, int degree) {
  const int d = static_cast<int>(ext.size());
  const auto line = gauss_legendre_rule<double>(degree + 1);
  const auto vol_rule = tensor_rule(line, d);
  double jac = 1.0;
  for (double e : ext) jac *= 0.5 * e;
  double vol = 0.0;
  for (int q = 0; q < vol_rule.size(); ++q) vol += vol_rule.weights(q) * jac * grad(vol_rule.nodes.col(q)).squaredNorm();
  double bdry = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    const double face_jac = jac / (0.5 * ext[axis]);
    for (double side : {-1.0, 1.0}) {
      if (d == 1) {
        Eigen::VectorXd xi(1);
        xi(0) = side;
        const double g = grad(xi)(0);
        bdry += g * g;
        continue;
      }
      const auto face = tensor_rule(line, d - 1);
      for (int q = 0; q < face.size(); ++q) {
        Eigen::VectorXd xi(d);
        for (int a = 0, t = 0; a < d; ++a) xi(a) = (a == axis) ? side : face.nodes(t++, q);
        const double g = grad(xi)(axis);
        bdry += face.weights(q) * face_jac * g * g;
      }
    }
  }
  return *std::min_element(ext.begin(), ext.end()) * bdry / vol;
}

}  // namespace

TraceKind parse_trace_kind(const std::string& name) {
  if (name == "interval" || name == "interval-k") return TraceKind::Interval;
  if (name == "cuboid-grad") return TraceKind::CuboidGrad;
  if (name == "cuboid-partial") return TraceKind::CuboidPartial;
  if (name == "simplex-grad") return TraceKind::SimplexGrad;
  throw DomainError("unknown trace kind '" + name + "'");
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::Interval:
      return "interval";
    case TraceKind::CuboidGrad:
      return "cuboid-grad";
    case TraceKind::CuboidPartial:
      return "cuboid-partial";
    case TraceKind::SimplexGrad:
      return "simplex-grad";
  }
  return "?";
}

double interval_trace_constant(int k, int p) {
  if (p < 0 || k < 0 || k > p) throw DomainError("interval_trace_constant: need 0 <= k <= p");
  return std::sqrt(double(p - k + 1) * (p - k + 2));
}

double cuboid_grad_trace_constant(int p, double h0) {
  if (p < 1 || !(h0 > 0.0)) throw DomainError("cuboid_grad_trace_constant: need p >= 1 and h0 > 0");
  return std::sqrt(p * (p + 1.0) / h0);
}

double simplex_grad_trace_constant(int p, int dim, double h0) {
  if (p < 1 || dim < 2 || !(h0 > 0.0)) throw DomainError("simplex_grad_trace_constant: need p >= 1, d >= 2, h0 > 0");
  return std::sqrt(p * (p + dim - 1.0) / h0);
}

double cuboid_partial_trace_constant(const std::vector<int>& k, int p, const std::vector<double>& extents) {
  if (k.size() != extents.size() || k.empty())
    throw DomainError("cuboid_partial_trace_constant: multi-index and extents differ in length");
  double s = 0.0;
  for (std::size_t a = 0; a < k.size(); ++a) {
    if (k[a] < 0 || k[a] > p) throw DomainError("cuboid_partial_trace_constant: need 0 <= k_j <= p");
    if (!(extents[a] > 0.0)) throw DomainError("cuboid_partial_trace_constant: extents must be positive");
    s += double(p - k[a] + 1) * (p - k[a] + 2) / extents[a];
  }
  return std::sqrt(s);
}

std::vector<double> extremal_trace_polynomial(int p) {
  if (p < 0) throw DomainError("extremal_trace_polynomial: p must be >= 0");
  std::vector<double> c{1.0};
  if (p == 0) return c;
  const auto gl = gauss_lobatto_rule<double>(p + 2);
  for (int i = 1; i <= p; ++i) {
    const double r = gl.nodes(0, i);
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= r * c[k];
    }
    c = std::move(next);
  }
  return c;
}

TraceCheck check_trace(TraceKind kind, int p, int dim, const std::vector<int>& k, int samples, std::uint64_t seed) {
  if (p < 1) throw DomainError("check_trace: p must be >= 1");
  if (samples < 0) throw DomainError("check_trace: negative sample count");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> extent(0.2, 2.0);

  TraceCheck out;
  out.kind = kind;
  out.p = p;
  out.dim = dim;
  out.samples = samples;

  switch (kind) {
    case TraceKind::Interval: {
      const int order = k.empty() ? 0 : k[0];
      if (order < 0 || order > p) throw DomainError("check_trace: need 0 <= k <= p");
      const int deg = p - order;  // v^(k) ranges over all polynomials of this degree
      out.dim = 1;
      out.bound = std::pow(interval_trace_constant(order, p), 2);
      const auto ext = extremal_trace_polynomial(deg);
      out.extremal_fraction = interval_ratio([&](double x) { return horner(ext, x); }, deg) / out.bound;
      for (int s = 0; s < samples; ++s) {
        std::vector<double> c(deg + 1);
        for (double& v : c) v = normal(rng);
        const double r = interval_ratio([&](double x) { return horner(c, x); }, deg);
        out.max_random_fraction = std::max(out.max_random_fraction, r / out.bound);
      }
      break;
    }
    case TraceKind::CuboidPartial: {
      if (dim < 1 || dim > 3) throw DomainError("check_trace: cuboid dimension must be 1, 2 or 3");
      std::vector<int> kk = k.empty() ? std::vector<int>(dim, 0) : k;
      if (static_cast<int>(kk.size()) != dim) throw DomainError("check_trace: multi-index length must equal d");
      std::vector<int> deg(dim);
      for (int a = 0; a < dim; ++a) {
        if (kk[a] < 0 || kk[a] > p) throw DomainError("check_trace: need 0 <= k_j <= p");
        deg[a] = p - kk[a];
      }
      out.bound = std::pow(cuboid_partial_trace_constant(kk, p, std::vector<double>(dim, 1.0)), 2);
      // product of 1D extremals, on the unit cube
      std::vector<std::vector<double>> ext(dim);
      for (int a = 0; a < dim; ++a) ext[a] = extremal_trace_polynomial(deg[a]);
      auto extremal = [&](const Eigen::VectorXd& xi) {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= horner(ext[a], xi(a));
        return v;
      };
      out.extremal_fraction = box_partial_ratio(extremal, std::vector<double>(dim, 1.0), p) / out.bound;
      std::size_t ncoef = 1;
      for (int a = 0; a < dim; ++a) ncoef *= std::size_t(deg[a] + 1);
      for (int s = 0; s < samples; ++s) {
        std::vector<double> box(dim);
        for (double& e : box) e = extent(rng);
        TensorPoly w{deg, std::vector<double>(ncoef)};
        for (double& v : w.coef) v = normal(rng);
        const double bound = std::pow(cuboid_partial_trace_constant(kk, p, box), 2);
        const double r = box_partial_ratio(w, box, p);
        out.max_random_fraction = std::max(out.max_random_fraction, r / bound);
      }
      break;
    }
    case TraceKind::CuboidGrad: {
      if (dim < 1 || dim > 3) throw DomainError("check_trace: cuboid dimension must be 1, 2 or 3");
      out.bound = p * (p + 1.0);
      const ReferenceBasis basis(CellShape::Cuboid, dim, p);
      // univariate extremal along the shortest edge: v' is the degree p-1 extremal
      {
        std::vector<double> box(dim, 1.0);
        if (dim > 1) box[0] = 0.5;
        const auto psi = extremal_trace_polynomial(p - 1);
        auto grad = [&](const Eigen::VectorXd& xi) {
          Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
          g(0) = horner(psi, xi(0));
          return g;
        };
        out.extremal_fraction = box_grad_ratio(grad, box, p) / out.bound;
      }
      Eigen::VectorXd coef(basis.size());
      for (int s = 0; s < samples; ++s) {
        std::vector<double> box(dim);
        for (double& e : box) e = extent(rng);
        for (int i = 0; i < basis.size(); ++i) coef(i) = normal(rng);
        auto grad = [&](const Eigen::VectorXd& xi) {
          const auto b = basis.eval(xi);
          Eigen::VectorXd g = b.gradients * coef;
          for (int a = 0; a < dim; ++a) g(a) *= 2.0 / box[a];
          return g;
        };
        const double r = box_grad_ratio(grad, box, p);
        out.max_random_fraction = std::max(out.max_random_fraction, r / out.bound);
      }
      break;
    }
    case TraceKind::SimplexGrad: {
      if (dim != 2 && dim != 3) throw DomainError("check_trace: simplex dimension must be 2 or 3");
      out.bound = p * (p + dim - 1.0);
      const ReferenceBasis basis(CellShape::Simplex, dim, p);
      const auto vol_rule = simplex_rule(dim, 2 * p);
      const auto face_rule = (dim == 2) ? unit_interval_rule(p + 1) : simplex_rule(2, 2 * p);
      Eigen::VectorXd coef(basis.size());
      for (int s = 0; s < samples; ++s) {
        // random vertices, rejecting flat simplices
        Eigen::MatrixXd X(dim, dim + 1);
        Eigen::MatrixXd J(dim, dim);
        double det = 0.0;
        do {
          for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
          for (int a = 0; a < dim; ++a) J.col(a) = X.col(a + 1) - X.col(0);
          det = J.determinant();
        } while (std::abs(det) < 0.05 * std::pow(J.colwise().norm().maxCoeff(), dim));
        const Eigen::MatrixXd Jinv_t = J.inverse().transpose();
        for (int i = 0; i < basis.size(); ++i) coef(i) = normal(rng);
        auto grad_at = [&](const Eigen::VectorXd& xi) -> Eigen::VectorXd {
          const Eigen::VectorXd clamped = xi.cwiseMax(0.0);  // roundoff on faces
          return Jinv_t * (basis.eval(clamped.sum() > 1.0 ? Eigen::VectorXd(clamped / clamped.sum()) : clamped)
                               .gradients *
                           coef);
        };
        const double vol_measure = std::abs(det) / (dim == 2 ? 2.0 : 6.0);
        double vol = 0.0;
        for (int q = 0; q < vol_rule.size(); ++q)
          vol += vol_rule.weights(q) * std::abs(det) * grad_at(vol_rule.nodes.col(q)).squaredNorm();
        double bdry = 0.0, bmeasure = 0.0;
        for (int f = 0; f <= dim; ++f) {
          std::vector<int> fv;
          for (int v = 0; v <= dim; ++v)
            if (v != f) fv.push_back(v);
          const Eigen::VectorXd P0 = X.col(fv[0]);
          Eigen::MatrixXd E(dim, dim - 1);
          for (int a = 0; a + 1 < dim; ++a) E.col(a) = X.col(fv[a + 1]) - P0;
          Eigen::VectorXd n(dim);
          double fmeasure = 0.0;
          if (dim == 2) {
            n << E(1, 0), -E(0, 0);
            fmeasure = E.col(0).norm();
          } else {
            const Eigen::Vector3d e0 = E.col(0), e1 = E.col(1);
            n = e0.cross(e1);
            fmeasure = 0.5 * n.norm();
          }
          n.normalize();
          const double scale = (dim == 2) ? fmeasure : 2.0 * fmeasure;  // reference face measure 1 or 1/2
          for (int q = 0; q < face_rule.size(); ++q) {
            const Eigen::VectorXd x = P0 + E * face_rule.nodes.col(q);
            const Eigen::VectorXd xi = J.inverse() * (x - X.col(0));
            const double g = grad_at(xi).dot(n);
            bdry += face_rule.weights(q) * scale * g * g;
          }
          bmeasure += fmeasure;
        }
        const double h0 = dim * vol_measure / bmeasure;
        const double r = h0 * bdry / vol;
        out.max_random_fraction = std::max(out.max_random_fraction, r / out.bound);
      }
      break;
    }
  }
  return out;
}

}  // namespace softfem
