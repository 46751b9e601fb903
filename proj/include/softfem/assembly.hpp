#pragma once

// C0 Lagrange spaces with homogeneous Dirichlet elimination, and assembly of
// the mass, stiffness and gradient-jump penalty matrices.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <memory>
#include <vector>

#include "softfem/coefficient.hpp"
#include "softfem/mesh.hpp"
#include "softfem/polyref.hpp"

namespace softfem {

/// Symmetric sparse matrix; both triangles are stored and bit-identical.
using SymMatrix = Eigen::SparseMatrix<double>;

/// Affine map from the reference cell onto one element, x = origin + jacobian * xi.
struct ElementMap {
  Eigen::VectorXd origin;
  Eigen::MatrixXd jacobian;
  Eigen::MatrixXd inverse;
  double det = 0.0;

  Eigen::VectorXd to_physical(const Eigen::Ref<const Eigen::VectorXd>& xi) const {
    return origin + jacobian * xi;
  }
  Eigen::VectorXd to_reference(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return inverse * (x - origin);
  }
};

class FeSpace {
 public:
  FeSpace(std::shared_ptr<const Mesh> mesh, int degree);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  const ReferenceBasis& basis() const { return basis_; }

  /// Dimension of the discrete space after Dirichlet elimination (N_p^h).
  std::size_t num_dofs() const { return num_free_; }
  /// Dof count before elimination.
  std::size_t num_all_dofs() const { return free_index_.size(); }

  /// Unreduced dof ids of an element in reference-basis order.
  const std::vector<std::size_t>& element_dofs(std::size_t e) const { return element_dofs_.at(e); }
  /// Reduced index of an unreduced dof, or -1 when eliminated.
  long free_index(std::size_t dof) const { return free_index_.at(dof); }
  bool is_eliminated(std::size_t dof) const { return free_index_.at(dof) < 0; }
  /// Unreduced ids of the kept dofs, ascending.
  const std::vector<std::size_t>& free_dofs() const { return free_dofs_; }

  /// Physical coordinates of every unreduced dof (dim x num_all_dofs).
  const Eigen::MatrixXd& dof_coordinates() const { return coordinates_; }

  ElementMap element_map(std::size_t e) const;

  /// Element assembly rule: Gauss-Legendre with p+2 points per direction on
  /// cuboids, a degree 2p+2 collapsed rule on simplices.
  const QuadratureRule<double>& element_rule() const { return rule_; }
  const Tabulation& element_tabulation() const { return tab_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  ReferenceBasis basis_;
  std::vector<std::vector<std::size_t>> element_dofs_;
  std::vector<long> free_index_;
  std::vector<std::size_t> free_dofs_;
  std::size_t num_free_ = 0;
  Eigen::MatrixXd coordinates_;
  QuadratureRule<double> rule_;
  Tabulation tab_;
};

FeSpace build_space(std::shared_ptr<const Mesh> mesh, int degree);
FeSpace build_space(const Mesh& mesh, int degree);

enum class DofSet { Free, All };

SymMatrix assemble_mass(const FeSpace& space, DofSet dofs = DofSet::Free);
SymMatrix assemble_stiffness(const FeSpace& space, const CoefficientField& kappa, DofSet dofs = DofSet::Free);

/// Weights of the gradient-jump penalty on an interface F.
/// kappa_F: ElementMin = min(kappa_tau1, kappa_tau2); FaceMin = min of kappa over
/// the face quadrature points (the point value in 1D).
/// h_F: LocalMin = min(h0_tau1, h0_tau2); MeshSize = (|Omega| / #elements)^(1/d)
/// on every face.
enum class FaceKappa { ElementMin, FaceMin };
enum class FaceLength { LocalMin, MeshSize };
struct PenaltyOptions {
  FaceKappa kappa = FaceKappa::ElementMin;
  FaceLength length = FaceLength::LocalMin;
};

SymMatrix assemble_penalty(const FeSpace& space, const CoefficientField& kappa, DofSet dofs = DofSet::Free,
                           const PenaltyOptions& options = {});

/// kappa_tau: minimum of kappa over the element's assembly quadrature nodes.
std::vector<double> element_kappa_min(const FeSpace& space, const CoefficientField& kappa);

/// K - eta S.
SymMatrix soften(const SymMatrix& K, const SymMatrix& S, double eta);
/// K + eta S (the stiffening counterpart).
SymMatrix stiffen(const SymMatrix& K, const SymMatrix& S, double eta);

struct SoftnessParameters {
  double eta_max = 0.0;
  double eta_default = 0.0;
};

/// eta_max = 1/(2p(p+1)) (tensor) or 1/(2p(p+d-1)) (simplicial, d >= 2);
/// eta_default = 1/(2(p+1)(p+2)).
SoftnessParameters softness_parameters(int degree, MeshKind kind, int dim);

/// Nodal interpolant of f, returned on the unreduced dofs.
Eigen::VectorXd interpolate(const FeSpace& space,
                            const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f);

/// Scatter a reduced coefficient vector to the unreduced dofs (zeros on the boundary).
Eigen::VectorXd expand(const FeSpace& space, const Eigen::Ref<const Eigen::VectorXd>& reduced);
/// Gather the kept dofs of an unreduced vector.
Eigen::VectorXd restrict_to_free(const FeSpace& space, const Eigen::Ref<const Eigen::VectorXd>& full);

}  // namespace softfem
