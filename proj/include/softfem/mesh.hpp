#pragma once

// Interval, tensor-product and triangular meshes with their interior
// interfaces. A Mesh is immutable once built.

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace softfem {

enum class MeshKind { Tensor, Simplicial };

/// Interior face shared by two elements; `elements[0] < elements[1]` and the
/// normal points out of `elements[0]`.
struct Interface {
  std::size_t id = 0;
  std::array<std::size_t, 2> elements{};
  std::array<int, 2> local_faces{};
  std::vector<std::size_t> vertices;  // sorted vertex ids, the face key
  double measure = 0.0;
  Eigen::VectorXd normal;
  double h_F = 0.0;
};

struct BoundaryFace {
  std::size_t element = 0;
  int local_face = 0;
  std::vector<std::size_t> vertices;  // sorted
};

struct ElementLengths {
  double diameter = 0.0;  // h_tau
  double h0 = 0.0;        // smallest edge (cuboid) or d|tau|/|boundary| (simplex)
  double measure = 0.0;
  double boundary_measure = 0.0;
};

class Mesh {
 public:
  int dim() const { return dim_; }
  MeshKind kind() const { return kind_; }
  std::size_t num_vertices() const { return static_cast<std::size_t>(vertices_.cols()); }
  std::size_t num_elements() const { return elements_.size(); }

  /// Vertex coordinates, one column per vertex.
  const Eigen::MatrixXd& vertices() const { return vertices_; }
  /// Vertex ids of an element: 2^d corners (bit a of the corner index selects
  /// the upper side along axis a) or the d+1 simplex vertices, counterclockwise in 2D.
  const std::vector<std::size_t>& element(std::size_t e) const { return elements_.at(e); }
  const std::vector<Interface>& interfaces() const { return interfaces_; }
  const std::vector<BoundaryFace>& boundary_faces() const { return boundary_faces_; }
  const std::vector<bool>& boundary_vertices() const { return boundary_vertex_; }
  const ElementLengths& lengths(std::size_t e) const { return lengths_.at(e); }

  /// Sum of element measures.
  double measure() const;

  /// Tensor meshes only: the per-axis breakpoints and per-axis cell index of an element.
  const std::vector<std::vector<double>>& breakpoints() const { return breakpoints_; }
  std::array<std::size_t, 3> cell_index(std::size_t e) const;

  /// Vertex ids on local face f (cuboid: f = 2*axis + side; simplex: face opposite vertex f).
  std::vector<std::size_t> face_vertices(std::size_t e, int f) const;
  int faces_per_element() const;

 private:
  friend Mesh build_cartesian_mesh(const std::vector<std::vector<double>>&);
  friend Mesh make_triangle_mesh(Eigen::MatrixXd, std::vector<std::array<std::size_t, 3>>);

  void finalize();

  int dim_ = 0;
  MeshKind kind_ = MeshKind::Tensor;
  Eigen::MatrixXd vertices_;
  std::vector<std::vector<std::size_t>> elements_;
  std::vector<Interface> interfaces_;
  std::vector<BoundaryFace> boundary_faces_;
  std::vector<bool> boundary_vertex_;
  std::vector<ElementLengths> lengths_;
  std::vector<std::vector<double>> breakpoints_;
};

/// Cuboid mesh from strictly ascending breakpoints per axis (1 to 3 axes),
/// elements numbered lexicographically with axis 0 fastest.
Mesh build_cartesian_mesh(const std::vector<std::vector<double>>& breakpoints);

/// Uniform [0,1]^dim mesh with `cells` elements per axis.
Mesh build_uniform_mesh(int dim, int cells);

struct SimplicialSpec {
  enum class Domain { UnitSquare, LShape, Explicit };
  Domain domain = Domain::UnitSquare;
  int n = 1;  // cells per axis of the full unit square (even for the L-shape)
  Eigen::MatrixXd nodes;  // explicit: 2 x count
  std::vector<std::array<std::size_t, 3>> triangles;
};

/// Triangulation: each square cell split along its (low,low)-(high,high)
/// diagonal. The L-shape removes the upper-right quadrant (1/2,1)^2.
Mesh build_simplicial_mesh(const SimplicialSpec& spec);

Mesh build_unit_square_triangulation(int n);
Mesh build_lshape_triangulation(int n);

/// Validates and orients an explicit triangle list (reorients clockwise input).
Mesh make_triangle_mesh(Eigen::MatrixXd nodes, std::vector<std::array<std::size_t, 3>> triangles);

/// Splits every edge into r equal parts (r^d sub-cuboids or r^2 sub-triangles).
Mesh refine_mesh(const Mesh& mesh, int r);

ElementLengths characteristic_lengths(const Mesh& mesh, std::size_t element);
const std::vector<Interface>& interfaces(const Mesh& mesh);

/// Text format: `nodes <count>` then `x y` lines, `elements <count>` then
/// three 0-based vertex ids per line; `#` starts a comment.
Mesh read_mesh_text(std::istream& in);
Mesh read_mesh_file(const std::string& path);

}  // namespace softfem
