#include "softfem/speclab.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iostream>

#include "softfem/error.hpp"

namespace softfem {

namespace {

QuadratureRule<double> error_rule(const FeSpace& space) {
  const int p = space.degree();
  const int d = space.mesh().dim();
  if (space.mesh().kind() == MeshKind::Tensor) return tensor_rule(gauss_legendre_rule<double>(p + 4), d);
  return simplex_rule(d, 2 * p + 6);
}

void require_simple(const Eigen::VectorXd& values, std::size_t mode, const char* what) {
  const auto j = static_cast<Eigen::Index>(mode);
  if (j >= values.size()) throw DomainError(std::string(what) + ": mode index out of range");
  if ((j > 0 && same_cluster(values(j - 1), values(j))) || (j + 1 < values.size() && same_cluster(values(j), values(j + 1))))
    throw MultiplicityError(std::string(what) + ": eigenvalue " + std::to_string(mode + 1) + " is not simple");
}

}  // namespace

Eigen::VectorXd eigenvalue_error_curve(const Eigen::VectorXd& values, const Eigen::VectorXd& reference) {
  if (reference.size() < values.size()) throw DomainError("eigenvalue_error_curve: reference spectrum too short");
  const Eigen::VectorXd ref = reference.head(values.size());
  return ((values - ref).array().abs() / ref.array()).matrix();
}

double top_decile_mean(const Eigen::VectorXd& errors) {
  if (errors.size() == 0) throw DomainError("top_decile_mean: empty error curve");
  const Eigen::Index n = errors.size();
  const Eigen::Index count = std::max<Eigen::Index>(1, n / 10);
  return errors.tail(count).mean();
}

EigenfunctionError eigenfunction_errors(const FeSpace& space, const Spectrum<double>& spectrum,
                                        const ExactSpectrum& exact, std::size_t mode) {
  if (!spectrum.has_vectors()) throw DomainError("eigenfunction_errors: spectrum has no eigenvectors");
  if (exact.dim != space.mesh().dim()) throw DomainError("eigenfunction_errors: dimension mismatch");
  require_simple(spectrum.values, mode, "eigenfunction_errors");
  require_simple(exact.values, mode, "eigenfunction_errors");

  const Eigen::VectorXd c = expand(space, spectrum.vectors.col(static_cast<Eigen::Index>(mode)));
  const auto rule = error_rule(space);
  const auto tab = tabulate(space.basis(), rule);
  const std::size_t ne = space.mesh().num_elements();

  struct Sums {
    double cross = 0.0, h1p = 0.0, h1m = 0.0, l2p = 0.0, l2m = 0.0;
  } s;
  Eigen::VectorXd local(space.basis().size());
  for (std::size_t e = 0; e < ne; ++e) {
    const ElementMap map = space.element_map(e);
    const auto& ids = space.element_dofs(e);
    for (int l = 0; l < local.size(); ++l) local(l) = c(static_cast<Eigen::Index>(ids[l]));
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::VectorXd x = map.to_physical(rule.nodes.col(q));
      const double w = rule.weights(q) * map.det;
      const double uh = tab.values[q].dot(local);
      const Eigen::VectorXd guh = map.inverse.transpose() * (tab.gradients[q] * local);
      const double u = exact.value(mode, x);
      const Eigen::VectorXd gu = exact.gradient(mode, x);
      s.cross += w * u * uh;
      // accumulate both sign choices; the one matching (u, u_h) > 0 is reported
      s.l2m += w * (u - uh) * (u - uh);
      s.l2p += w * (u + uh) * (u + uh);
      s.h1m += w * (gu - guh).squaredNorm();
      s.h1p += w * (gu + guh).squaredNorm();
    }
  }
  const bool flip = s.cross < 0.0;
  return {std::sqrt(flip ? s.h1p : s.h1m), std::sqrt(flip ? s.l2p : s.l2m)};
}

Eigen::VectorXd jump_energy_ratio(const SymMatrix& K, const SymMatrix& S, const Spectrum<double>& spectrum, double eta) {
  if (!spectrum.has_vectors()) throw DomainError("jump_energy_ratio: spectrum has no eigenvectors");
  const Eigen::MatrixXd KU = K * spectrum.vectors;
  const Eigen::MatrixXd SU = S * spectrum.vectors;
  Eigen::VectorXd out(spectrum.order());
  for (Eigen::Index j = 0; j < spectrum.order(); ++j) {
    const double a = spectrum.vectors.col(j).dot(KU.col(j));
    if (!(a > 0.0)) throw NumericError("jump_energy_ratio: zero stiffness energy");
    // S is semidefinite; a tiny negative quadratic form is roundoff
    out(j) = eta * std::max(0.0, spectrum.vectors.col(j).dot(SU.col(j))) / a;
  }
  return out;
}

Eigen::VectorXd jump_energy_ratio(const FeSpace& space, const Spectrum<double>& spectrum, double eta,
                                  const CoefficientField& kappa) {
  return jump_energy_ratio(assemble_stiffness(space, kappa), assemble_penalty(space, kappa), spectrum, eta);
}

PythagoreanResidual pythagorean_residual(const FeSpace& space, const Spectrum<double>& spectrum,
                                         const ExactSpectrum& exact, std::size_t mode, double eta,
                                         const CoefficientField& kappa) {
  if (!spectrum.has_vectors()) throw DomainError("pythagorean_residual: spectrum has no eigenvectors");
  require_simple(spectrum.values, mode, "pythagorean_residual");
  require_simple(exact.values, mode, "pythagorean_residual");
  const auto j = static_cast<Eigen::Index>(mode);

  const FeSpace fine = build_space(space.mesh_ptr(), space.degree() + 4);
  // the coarse function is a polynomial of degree p on each element, so nodal
  // interpolation into the finer space reproduces it exactly
  const Eigen::VectorXd coarse = expand(space, spectrum.vectors.col(j));
  Eigen::VectorXd uh(fine.num_all_dofs());
  {
    std::vector<char> done(fine.num_all_dofs(), 0);
    const auto& xf = fine.dof_coordinates();
    for (std::size_t e = 0; e < fine.mesh().num_elements(); ++e) {
      const ElementMap map = space.element_map(e);
      const auto& cid = space.element_dofs(e);
      Eigen::VectorXd local(cid.size());
      for (std::size_t l = 0; l < cid.size(); ++l) local(static_cast<Eigen::Index>(l)) = coarse(cid[l]);
      for (std::size_t g : fine.element_dofs(e)) {
        if (done[g]) continue;
        Eigen::VectorXd xi = map.to_reference(xf.col(static_cast<Eigen::Index>(g)));
        if (fine.mesh().kind() == MeshKind::Tensor) {
          xi = xi.cwiseMax(-1.0).cwiseMin(1.0);
        } else {
          xi = xi.cwiseMax(0.0);
          if (xi.sum() > 1.0) xi /= xi.sum();
        }
        uh(static_cast<Eigen::Index>(g)) = space.basis().eval(xi).values.dot(local);
        done[g] = 1;
      }
    }
  }
  const Eigen::VectorXd ui = interpolate(fine, [&](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return exact.value(mode, Eigen::VectorXd(x));
  });
  double sign = 1.0;
  const SymMatrix Mf = assemble_mass(fine, DofSet::Free);
  const SymMatrix Kf = assemble_stiffness(fine, kappa, DofSet::Free);
  const SymMatrix Sf = assemble_penalty(fine, kappa, DofSet::Free);
  const Eigen::VectorXd a = restrict_to_free(fine, ui);
  Eigen::VectorXd b = restrict_to_free(fine, uh);
  if (a.dot(Mf * b) < 0.0) sign = -1.0;
  b *= sign;
  const Eigen::VectorXd e = a - b;

  PythagoreanResidual out;
  const double energy = e.dot(Kf * e) - eta * e.dot(Sf * e);
  const double l2 = e.dot(Mf * e);
  const double lambda = exact.values(j);
  const double lambda_h = spectrum.values(j);
  out.residual = std::abs(energy - (lambda * l2 + lambda_h - lambda));
  out.energy_error = std::sqrt(std::max(energy, 0.0));
  out.l2_error = std::sqrt(l2);

  // interpolation error of u in the fine space: its H1 and L2 parts bound the
  // perturbation of both sides to first order
  const auto rule = error_rule(fine);
  const auto tab = tabulate(fine.basis(), rule);
  double d_h1 = 0.0, d_l2 = 0.0;
  for (std::size_t el = 0; el < fine.mesh().num_elements(); ++el) {
    const ElementMap map = fine.element_map(el);
    const auto& ids = fine.element_dofs(el);
    Eigen::VectorXd local(ids.size());
    for (std::size_t l = 0; l < ids.size(); ++l) local(static_cast<Eigen::Index>(l)) = ui(ids[l]);
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::VectorXd x = map.to_physical(rule.nodes.col(q));
      const double w = rule.weights(q) * map.det;
      const double k = kappa(x);
      d_l2 += w * std::pow(exact.value(mode, x) - tab.values[q].dot(local), 2);
      d_h1 += w * k * (exact.gradient(mode, x) - map.inverse.transpose() * (tab.gradients[q] * local)).squaredNorm();
    }
  }
  out.scale = 2.0 * out.energy_error * std::sqrt(d_h1) + d_h1 + lambda * (2.0 * out.l2_error * std::sqrt(d_l2) + d_l2);
  return out;
}

RateFit convergence_rate(const std::vector<double>& h, const std::vector<double>& errors) {
  if (h.size() != errors.size()) throw DomainError("convergence_rate: h and error lists differ in length");
  std::vector<double> lx, ly;
  RateFit fit;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(errors[i] >= 1e-13)) {
      ++fit.dropped;
      std::cerr << "note: level h=" << h[i] << " dropped from the rate fit (error " << errors[i]
                << " below 1e-13)\n";
      continue;
    }
    lx.push_back(std::log(h[i]));
    ly.push_back(std::log(errors[i]));
  }
  fit.used = static_cast<int>(lx.size());
  if (fit.used < 2) throw NumericError("convergence_rate: fewer than two usable levels");
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < fit.used; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= fit.used;
  my /= fit.used;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < fit.used; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  fit.rate = sxy / sxx;
  return fit;
}

}  // namespace softfem
