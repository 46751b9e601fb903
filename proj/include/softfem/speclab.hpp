#pragma once

// Error metrics for discrete spectra: per-mode eigenvalue errors, eigenfunction
// errors against exact modes, jump-energy ratios, the Pythagorean identity
// residual, and least-squares convergence rates.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "softfem/assembly.hpp"
#include "softfem/gevp.hpp"
#include "softfem/oracle.hpp"

namespace softfem {

/// |values_j - reference_j| / reference_j, pairing both ascending lists by index.
Eigen::VectorXd eigenvalue_error_curve(const Eigen::VectorXd& values, const Eigen::VectorXd& reference);

/// Mean of the last tenth of a per-mode error curve (at least one entry).
double top_decile_mean(const Eigen::VectorXd& errors);

struct EigenfunctionError {
  double h1 = 0.0;  // |u - u_h|_{H^1}
  double l2 = 0.0;  // ||u - u_h||_{L^2}
};

/// Errors of discrete mode `mode` (0-based) against exact mode `mode`, after
/// aligning the sign of the discrete function with the exact one. Throws
/// MultiplicityError when either eigenvalue lies in a cluster.
EigenfunctionError eigenfunction_errors(const FeSpace& space, const Spectrum<double>& spectrum,
                                        const ExactSpectrum& exact, std::size_t mode);

/// eta x^T S x / x^T K x for every eigenvector.
Eigen::VectorXd jump_energy_ratio(const SymMatrix& K, const SymMatrix& S, const Spectrum<double>& spectrum, double eta);
Eigen::VectorXd jump_energy_ratio(const FeSpace& space, const Spectrum<double>& spectrum, double eta,
                                  const CoefficientField& kappa);

struct PythagoreanResidual {
  double residual = 0.0;  // |E^2 - (lambda ||e||^2 + lambda_h - lambda)|
  double scale = 0.0;     // size of the perturbation caused by interpolating u
  double energy_error = 0.0;
  double l2_error = 0.0;
};

/// Evaluates both sides of ||u - u_h||_E^2 = lambda ||u - u_h||^2 + lambda_h - lambda,
/// with ||.||_E^2 = a(.,.) - eta s(.,.) and u replaced by its degree p+4
/// interpolant on the same mesh.
PythagoreanResidual pythagorean_residual(const FeSpace& space, const Spectrum<double>& spectrum,
                                         const ExactSpectrum& exact, std::size_t mode, double eta,
                                         const CoefficientField& kappa);

struct RateFit {
  double rate = 0.0;
  int used = 0;     // levels kept in the fit
  int dropped = 0;  // levels below the underflow floor
};

/// Least-squares slope of log(error) against log(h), skipping errors below 1e-13.
RateFit convergence_rate(const std::vector<double>& h, const std::vector<double>& errors);

}  // namespace softfem
