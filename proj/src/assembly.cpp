#include "softfem/assembly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <limits>
#include <map>

#include "softfem/error.hpp"

namespace softfem {

namespace {

CellShape shape_of(const Mesh& mesh) {
  return mesh.kind() == MeshKind::Tensor ? CellShape::Cuboid : CellShape::Simplex;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

// Adds a dense symmetric block on unreduced ids, dropping or renumbering per `dofs`.
void scatter(const FeSpace& space, DofSet dofs, const std::vector<std::size_t>& ids,
             const Eigen::MatrixXd& block, Triplets& out) {
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    long gi = static_cast<long>(ids[i]);
    if (dofs == DofSet::Free) gi = space.free_index(ids[i]);
    if (gi < 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      long gj = static_cast<long>(ids[j]);
      if (dofs == DofSet::Free) gj = space.free_index(ids[j]);
      if (gj < 0) continue;
      out.emplace_back(gi, gj, block(i, j));
    }
  }
}

SymMatrix finish(const FeSpace& space, DofSet dofs, const Triplets& triplets) {
  const auto n = static_cast<Eigen::Index>(dofs == DofSet::Free ? space.num_dofs() : space.num_all_dofs());
  SymMatrix A(n, n);
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  return A;
}

void mirror_upper(Eigen::MatrixXd& block) {
  for (Eigen::Index j = 0; j < block.cols(); ++j)
    for (Eigen::Index i = j + 1; i < block.rows(); ++i) block(i, j) = block(j, i);
}

std::vector<double> kappa_at_nodes(const FeSpace& space, const CoefficientField& kappa, std::size_t e,
                                   const ElementMap& map) {
  const auto& rule = space.element_rule();
  std::vector<double> values(rule.size());
  try {
    for (int q = 0; q < rule.size(); ++q) values[q] = kappa(map.to_physical(rule.nodes.col(q)));
  } catch (const DomainError& err) {
    throw AssemblyError(err.what(), e);
  }
  for (double v : values)
    if (!std::isfinite(v) || v <= 0.0) throw AssemblyError("coefficient is not positive (" + std::to_string(v) + ")", e);
  return values;
}

}  // namespace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree), basis_(shape_of(*mesh_), mesh_->dim(), degree) {
  const Mesh& m = *mesh_;
  const int p = degree;
  const int d = m.dim();
  const std::size_t ne = m.num_elements();
  element_dofs_.resize(ne);
  const int nloc = basis_.size();
  std::vector<char> boundary;

  if (m.kind() == MeshKind::Tensor) {
    const auto& bp = m.breakpoints();
    std::array<std::size_t, 3> lattice{1, 1, 1}, stride{0, 0, 0};
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) {
      lattice[a] = (bp[a].size() - 1) * std::size_t(p) + 1;
      stride[a] = total;
      total *= lattice[a];
    }
    boundary.assign(total, 0);
    coordinates_.resize(d, static_cast<Eigen::Index>(total));
    for (std::size_t g = 0; g < total; ++g) {
      std::size_t rem = g;
      for (int a = 0; a < d; ++a) {
        const std::size_t ga = rem % lattice[a];
        rem /= lattice[a];
        if (ga == 0 || ga + 1 == lattice[a]) boundary[g] = 1;
        const std::size_t cells = bp[a].size() - 1;
        const std::size_t c = std::min(ga / std::size_t(p), cells - 1);
        const std::size_t i = ga - c * std::size_t(p);
        const double lo = bp[a][c], hi = bp[a][c + 1];
        coordinates_(a, static_cast<Eigen::Index>(g)) = lo + 0.5 * (basis_.line_nodes()[i] + 1.0) * (hi - lo);
      }
    }
    for (std::size_t e = 0; e < ne; ++e) {
      const auto cell = m.cell_index(e);
      auto& ids = element_dofs_[e];
      ids.resize(nloc);
      for (int l = 0; l < nloc; ++l) {
        const auto& idx = basis_.multi_index()[l];
        std::size_t g = 0;
        for (int a = 0; a < d; ++a) g += (cell[a] * p + idx[a]) * stride[a];
        ids[l] = g;
      }
    }
  } else {
    if (d != 2) throw DomainError("FeSpace: simplicial meshes must be 2D");
    const std::size_t nv = m.num_vertices();
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_id;
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& el = m.element(e);
      for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
          auto key = std::minmax(el[a], el[b]);
          edge_id.try_emplace({key.first, key.second}, edge_id.size());
        }
    }
    const std::size_t edge_dofs = std::size_t(p - 1);
    const std::size_t interior = std::size_t((p - 1) * (p - 2) / 2);
    const std::size_t edge_base = nv;
    const std::size_t cell_base = nv + edge_id.size() * edge_dofs;
    const std::size_t total = cell_base + ne * interior;
    boundary.assign(total, 0);
    for (std::size_t v = 0; v < nv; ++v) boundary[v] = m.boundary_vertices()[v] ? 1 : 0;
    for (const auto& bf : m.boundary_faces()) {
      const std::size_t eid = edge_id.at({bf.vertices[0], bf.vertices[1]});
      for (std::size_t k = 0; k < edge_dofs; ++k) boundary[edge_base + eid * edge_dofs + k] = 1;
    }
    coordinates_.resize(2, static_cast<Eigen::Index>(total));
    for (std::size_t e = 0; e < ne; ++e) {
      const auto& el = m.element(e);
      auto& ids = element_dofs_[e];
      ids.resize(nloc);
      std::size_t next_interior = 0;
      const ElementMap map = element_map(e);
      for (int l = 0; l < nloc; ++l) {
        const auto& alpha = basis_.multi_index()[l];
        int nonzero = 0;
        for (int k = 0; k < 3; ++k) nonzero += alpha[k] > 0;
        std::size_t g = 0;
        if (nonzero == 1) {
          int k = 0;
          while (alpha[k] != p) ++k;
          g = el[k];
        } else if (nonzero == 2) {
          int a = -1, b = -1;
          for (int k = 0; k < 3; ++k)
            if (alpha[k] > 0) (a < 0 ? a : b) = k;
          const std::size_t ga = el[a], gb = el[b];
          const int toward_b = alpha[b];  // node sits toward_b/p of the way from a to b
          const int k = (ga < gb) ? toward_b : p - toward_b;
          g = edge_base + edge_id.at({std::min(ga, gb), std::max(ga, gb)}) * edge_dofs + std::size_t(k - 1);
        } else {
          g = cell_base + e * interior + next_interior++;
        }
        ids[l] = g;
        coordinates_.col(g) = map.to_physical(basis_.nodes().col(l));
      }
    }
  }

  free_index_.assign(boundary.size(), -1);
  for (std::size_t g = 0; g < boundary.size(); ++g)
    if (!boundary[g]) {
      free_index_[g] = static_cast<long>(free_dofs_.size());
      free_dofs_.push_back(g);
    }
  num_free_ = free_dofs_.size();

  if (m.kind() == MeshKind::Tensor)
    rule_ = tensor_rule(gauss_legendre_rule<double>(p + 2), d);
  else
    rule_ = simplex_rule(d, 2 * p + 2);
  tab_ = tabulate(basis_, rule_);
}

ElementMap FeSpace::element_map(std::size_t e) const {
  const Mesh& m = *mesh_;
  const auto& el = m.element(e);
  const int d = m.dim();
  ElementMap map;
  if (m.kind() == MeshKind::Tensor) {
    const Eigen::VectorXd lo = m.vertices().col(el.front());
    const Eigen::VectorXd hi = m.vertices().col(el.back());
    const Eigen::VectorXd half = 0.5 * (hi - lo);
    map.origin = lo + half;
    map.jacobian = half.asDiagonal();
    map.inverse = half.cwiseInverse().asDiagonal();
    map.det = half.prod();
  } else {
    map.origin = m.vertices().col(el[0]);
    map.jacobian.resize(d, d);
    for (int a = 0; a < d; ++a) map.jacobian.col(a) = m.vertices().col(el[a + 1]) - map.origin;
    map.inverse = map.jacobian.inverse();
    map.det = std::abs(map.jacobian.determinant());
  }
  return map;
}

FeSpace build_space(std::shared_ptr<const Mesh> mesh, int degree) {
  if (degree < 1) throw DomainError("build_space: degree must be >= 1");
  return FeSpace(std::move(mesh), degree);
}

FeSpace build_space(const Mesh& mesh, int degree) {
  return build_space(std::make_shared<const Mesh>(mesh), degree);
}

std::vector<double> element_kappa_min(const FeSpace& space, const CoefficientField& kappa) {
  const std::size_t ne = space.mesh().num_elements();
  std::vector<double> out(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto values = kappa_at_nodes(space, kappa, e, space.element_map(e));
    out[e] = *std::min_element(values.begin(), values.end());
  }
  return out;
}

SymMatrix assemble_mass(const FeSpace& space, DofSet dofs) {
  const auto& rule = space.element_rule();
  const auto& tab = space.element_tabulation();
  const int n = space.basis().size();
  Triplets triplets;
  triplets.reserve(space.mesh().num_elements() * std::size_t(n * n));
  Eigen::MatrixXd block(n, n);
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const double det = space.element_map(e).det;
    block.setZero();
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights(q) * det;
      block.noalias() += w * tab.values[q] * tab.values[q].transpose();
    }
    mirror_upper(block);
    scatter(space, dofs, space.element_dofs(e), block, triplets);
  }
  return finish(space, dofs, triplets);
}

SymMatrix assemble_stiffness(const FeSpace& space, const CoefficientField& kappa, DofSet dofs) {
  const auto& rule = space.element_rule();
  const auto& tab = space.element_tabulation();
  const int n = space.basis().size();
  Triplets triplets;
  triplets.reserve(space.mesh().num_elements() * std::size_t(n * n));
  Eigen::MatrixXd block(n, n), grad;
  for (std::size_t e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementMap map = space.element_map(e);
    const auto kq = kappa_at_nodes(space, kappa, e, map);
    block.setZero();
    for (int q = 0; q < rule.size(); ++q) {
      grad.noalias() = map.inverse.transpose() * tab.gradients[q];
      block.noalias() += (rule.weights(q) * map.det * kq[q]) * grad.transpose() * grad;
    }
    mirror_upper(block);
    scatter(space, dofs, space.element_dofs(e), block, triplets);
  }
  return finish(space, dofs, triplets);
}

SymMatrix assemble_penalty(const FeSpace& space, const CoefficientField& kappa, DofSet dofs,
                           const PenaltyOptions& options) {
  const Mesh& mesh = space.mesh();
  const int d = mesh.dim();
  const int p = space.degree();
  const auto kappa_tau = element_kappa_min(space, kappa);
  const double mesh_size = std::pow(mesh.measure() / double(mesh.num_elements()), 1.0 / d);
  const ReferenceBasis& basis = space.basis();

  // face rule in the reference coordinates of the face
  QuadratureRule<double> face_rule;
  if (mesh.kind() == MeshKind::Tensor) {
    if (d > 1) face_rule = tensor_rule(gauss_legendre_rule<double>(p + 1), d - 1);
  } else {
    face_rule = unit_interval_rule(p + 1);
  }

  Triplets triplets;
  std::vector<std::size_t> ids;
  Eigen::VectorXd jump;
  Eigen::MatrixXd block;
  for (const Interface& F : mesh.interfaces()) {
    const std::size_t e1 = F.elements[0], e2 = F.elements[1];
    const ElementMap m1 = space.element_map(e1), m2 = space.element_map(e2);

    // union of the two dof sets, first-seen order
    ids = space.element_dofs(e1);
    std::vector<int> slot2(basis.size());
    for (int l = 0; l < basis.size(); ++l) {
      const std::size_t g = space.element_dofs(e2)[l];
      auto it = std::find(ids.begin(), ids.end(), g);
      if (it == ids.end()) {
        slot2[l] = static_cast<int>(ids.size());
        ids.push_back(g);
      } else {
        slot2[l] = static_cast<int>(it - ids.begin());
      }
    }
    const int nu = static_cast<int>(ids.size());
    block.setZero(nu, nu);

    // physical points and weights on the face
    std::vector<Eigen::VectorXd> points;
    std::vector<double> weights;
    if (mesh.kind() == MeshKind::Tensor) {
      const int axis = F.local_faces[0] / 2;
      const double side = (F.local_faces[0] % 2) ? 1.0 : -1.0;
      const int nq = (d == 1) ? 1 : face_rule.size();
      for (int q = 0; q < nq; ++q) {
        Eigen::VectorXd xi(d);
        double w = (d == 1) ? 1.0 : face_rule.weights(q);
        for (int a = 0, t = 0; a < d; ++a) {
          if (a == axis) {
            xi(a) = side;
          } else {
            xi(a) = face_rule.nodes(t++, q);
            w *= m1.jacobian(a, a);
          }
        }
        points.push_back(m1.to_physical(xi));
        weights.push_back(w);
      }
    } else {
      const Eigen::VectorXd a = mesh.vertices().col(F.vertices[0]);
      const Eigen::VectorXd b = mesh.vertices().col(F.vertices[1]);
      for (int q = 0; q < face_rule.size(); ++q) {
        points.push_back(a + face_rule.nodes(0, q) * (b - a));
        weights.push_back(face_rule.weights(q) * F.measure);
      }
    }

    double kappa_F = std::min(kappa_tau[e1], kappa_tau[e2]);
    if (options.kappa == FaceKappa::FaceMin) {
      kappa_F = std::numeric_limits<double>::infinity();
      try {
        for (const auto& x : points) kappa_F = std::min(kappa_F, kappa(x));
      } catch (const DomainError& err) {
        throw AssemblyError(err.what(), e1);
      }
      if (!std::isfinite(kappa_F) || kappa_F <= 0.0)
        throw AssemblyError("coefficient is not positive on a face (" + std::to_string(kappa_F) + ")", e1);
    }
    const double weight_F = kappa_F * (options.length == FaceLength::MeshSize ? mesh_size : F.h_F);

    for (std::size_t q = 0; q < points.size(); ++q) {
      auto clamp = [&](Eigen::VectorXd xi) {
        if (mesh.kind() == MeshKind::Tensor) return Eigen::VectorXd(xi.cwiseMax(-1.0).cwiseMin(1.0));
        xi = xi.cwiseMax(0.0);
        if (xi.sum() > 1.0) xi /= xi.sum();
        return xi;
      };
      const auto b1 = basis.eval(clamp(m1.to_reference(points[q])));
      const auto b2 = basis.eval(clamp(m2.to_reference(points[q])));
      const Eigen::VectorXd dn1 = (m1.inverse.transpose() * b1.gradients).transpose() * F.normal;
      const Eigen::VectorXd dn2 = (m2.inverse.transpose() * b2.gradients).transpose() * F.normal;
      jump.setZero(nu);
      for (int l = 0; l < basis.size(); ++l) {
        jump(l) += dn1(l);
        jump(slot2[l]) -= dn2(l);
      }
      block.noalias() += (weights[q] * weight_F) * jump * jump.transpose();
    }
    mirror_upper(block);
    scatter(space, dofs, ids, block, triplets);
  }
  return finish(space, dofs, triplets);
}

SymMatrix soften(const SymMatrix& K, const SymMatrix& S, double eta) {
  if (K.rows() != S.rows() || K.cols() != S.cols()) throw DomainError("soften: matrix order mismatch");
  if (!(eta >= 0.0)) throw DomainError("soften: eta must be nonnegative");
  SymMatrix out = K - eta * S;
  out.makeCompressed();
  return out;
}

SymMatrix stiffen(const SymMatrix& K, const SymMatrix& S, double eta) {
  if (K.rows() != S.rows() || K.cols() != S.cols()) throw DomainError("stiffen: matrix order mismatch");
  if (!(eta >= 0.0)) throw DomainError("stiffen: eta must be nonnegative");
  SymMatrix out = K + eta * S;
  out.makeCompressed();
  return out;
}

SoftnessParameters softness_parameters(int degree, MeshKind kind, int dim) {
  if (degree < 1) throw DomainError("softness_parameters: degree must be >= 1");
  const double p = degree;
  SoftnessParameters out;
  if (kind == MeshKind::Tensor) {
    out.eta_max = 1.0 / (2.0 * p * (p + 1.0));
  } else {
    if (dim < 2) throw DomainError("softness_parameters: simplicial meshes need d >= 2");
    out.eta_max = 1.0 / (2.0 * p * (p + dim - 1.0));
  }
  out.eta_default = 1.0 / (2.0 * (p + 1.0) * (p + 2.0));
  return out;
}

Eigen::VectorXd interpolate(const FeSpace& space,
                            const std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>& f) {
  const auto& x = space.dof_coordinates();
  Eigen::VectorXd out(x.cols());
  for (Eigen::Index g = 0; g < x.cols(); ++g) out(g) = f(x.col(g));
  return out;
}

Eigen::VectorXd expand(const FeSpace& space, const Eigen::Ref<const Eigen::VectorXd>& reduced) {
  if (static_cast<std::size_t>(reduced.size()) != space.num_dofs())
    throw DomainError("expand: vector length does not match the space");
  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.num_all_dofs()));
  const auto& kept = space.free_dofs();
  for (std::size_t i = 0; i < kept.size(); ++i) full(kept[i]) = reduced(i);
  return full;
}

Eigen::VectorXd restrict_to_free(const FeSpace& space, const Eigen::Ref<const Eigen::VectorXd>& full) {
  if (static_cast<std::size_t>(full.size()) != space.num_all_dofs())
    throw DomainError("restrict_to_free: vector length does not match the space");
  const auto& kept = space.free_dofs();
  Eigen::VectorXd out(static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) out(i) = full(kept[i]);
  return out;
}

}  // namespace softfem
