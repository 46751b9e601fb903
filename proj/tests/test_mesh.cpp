#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "softfem/error.hpp"
#include "softfem/mesh.hpp"

using namespace softfem;

TEST_CASE("cartesian mesh with one interior breakpoint") {
  const Mesh m = build_cartesian_mesh({{0.0, 0.5, 1.0}});
  CHECK(m.dim() == 1);
  CHECK(m.num_elements() == 2);
  REQUIRE(m.interfaces().size() == 1);
  const auto& f = m.interfaces()[0];
  CHECK(f.h_F == 0.5);
  CHECK(m.vertices()(0, static_cast<Eigen::Index>(f.vertices[0])) == doctest::Approx(0.5));
}

TEST_CASE("2x3 tensor grid has 6 cells and 7 interior faces") {
  const Mesh m = build_cartesian_mesh({{0.0, 0.5, 1.0}, {0.0, 1.0 / 3, 2.0 / 3, 1.0}});
  CHECK(m.num_elements() == 6);
  CHECK(m.interfaces().size() == 7);
  CHECK(m.measure() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-ascending breakpoints are rejected") {
  CHECK_THROWS_AS(build_cartesian_mesh({{0.0, 0.5, 0.5, 1.0}}), InvalidMesh);
  CHECK_THROWS_AS(build_cartesian_mesh({{0.0}}), InvalidMesh);
}

TEST_CASE("unit square triangulations") {
  const Mesh m1 = build_unit_square_triangulation(1);
  CHECK(m1.num_elements() == 2);
  REQUIRE(m1.interfaces().size() == 1);
  CHECK(m1.interfaces()[0].measure == doctest::Approx(std::sqrt(2.0)));

  const Mesh m2 = build_unit_square_triangulation(2);
  CHECK(m2.num_elements() == 8);
  CHECK(m2.interfaces().size() == 8);

  for (int n = 1; n <= 12; ++n) {
    const Mesh m = build_unit_square_triangulation(n);
    CHECK(m.interfaces().size() == static_cast<std::size_t>(2 * n * (n - 1) + n * n));
    CHECK(m.measure() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("L-shape keeps three quarters of the square") {
  const Mesh l = build_lshape_triangulation(4);
  const Mesh s = build_unit_square_triangulation(4);
  CHECK(4 * l.num_elements() == 3 * s.num_elements());
  CHECK(l.measure() == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS(build_lshape_triangulation(3));
}

TEST_CASE("characteristic lengths") {
  const Mesh line = build_cartesian_mesh({{0.0, 0.5}});
  CHECK(line.lengths(0).diameter == doctest::Approx(0.5));
  CHECK(line.lengths(0).h0 == doctest::Approx(0.5));

  Eigen::MatrixXd nodes(2, 3);
  nodes << 0, 1, 0, 0, 0, 1;
  const Mesh tri = make_triangle_mesh(nodes, {{0, 1, 2}});
  CHECK(tri.lengths(0).h0 == doctest::Approx(1.0 / (2.0 + std::sqrt(2.0))).epsilon(1e-14));
  CHECK(tri.lengths(0).diameter == doctest::Approx(std::sqrt(2.0)));

  const Mesh box = build_cartesian_mesh({{0.0, 1.0}, {0.0, 0.5}});
  CHECK(box.lengths(0).h0 == doctest::Approx(0.5));
}

TEST_CASE("interfaces of small meshes") {
  const Mesh m = build_uniform_mesh(1, 4);
  REQUIRE(m.interfaces().size() == 3);
  std::set<double> xs;
  for (const auto& f : m.interfaces()) {
    CHECK(f.h_F == doctest::Approx(0.25));
    xs.insert(m.vertices()(0, static_cast<Eigen::Index>(f.vertices[0])));
  }
  CHECK(xs == std::set<double>{0.25, 0.5, 0.75});
  CHECK(build_uniform_mesh(2, 2).interfaces().size() == 4);
}

TEST_CASE("interface invariants") {
  for (const Mesh& m : {build_cartesian_mesh({{0, 0.1, 0.18, 0.29, 0.41, 0.5, 0.59, 0.66, 0.81, 0.92, 1}}),
                        build_uniform_mesh(2, 5), build_uniform_mesh(3, 3), build_unit_square_triangulation(5),
                        build_lshape_triangulation(6)}) {
    std::vector<int> faces(m.num_elements(), 0);
    for (const auto& f : m.interfaces()) {
      CHECK(f.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(f.h_F == std::min(m.lengths(f.elements[0]).h0, m.lengths(f.elements[1]).h0));
      CHECK(f.elements[0] != f.elements[1]);
      ++faces[f.elements[0]];
      ++faces[f.elements[1]];
    }
    for (const auto& b : m.boundary_faces()) ++faces[b.element];
    for (std::size_t e = 0; e < m.num_elements(); ++e) CHECK(faces[e] == m.faces_per_element());
  }
}

TEST_CASE("tensor grid interface count n(m-1)+m(n-1)") {
  for (int n = 1; n <= 5; ++n)
    for (int k = 1; k <= 4; ++k) {
      std::vector<double> a(n + 1), b(k + 1);
      for (int i = 0; i <= n; ++i) a[i] = double(i) / n;
      for (int i = 0; i <= k; ++i) b[i] = double(i) / k;
      CHECK(build_cartesian_mesh({a, b}).interfaces().size() == static_cast<std::size_t>(n * (k - 1) + k * (n - 1)));
    }
}

TEST_CASE("rebuilding gives identical numbering") {
  const Mesh a = build_lshape_triangulation(6), b = build_lshape_triangulation(6);
  CHECK(a.vertices() == b.vertices());
  for (std::size_t e = 0; e < a.num_elements(); ++e) CHECK(a.element(e) == b.element(e));
}

TEST_CASE("mesh text format") {
  std::istringstream in(
      "# two triangles\n"
      "nodes 4\n0 0\n1 0\n1 1\n0 1\n"
      "elements 2\n0 1 2\n0 2 3\n");
  const Mesh m = read_mesh_text(in);
  CHECK(m.num_elements() == 2);
  CHECK(m.interfaces().size() == 1);
  CHECK(m.measure() == doctest::Approx(1.0));

  std::istringstream bad("nodes 3\n0 0\n1 0\n2 0\nelements 1\n0 1 2\n");
  CHECK_THROWS_AS(read_mesh_text(bad), InvalidMesh);
}

TEST_CASE("refinement preserves the domain") {
  const Mesh l = refine_mesh(build_lshape_triangulation(2), 3);
  CHECK(l.num_elements() == 9 * build_lshape_triangulation(2).num_elements());
  CHECK(l.measure() == doctest::Approx(0.75).epsilon(1e-12));
  const Mesh c = refine_mesh(build_cartesian_mesh({{0, 0.3, 1}}), 2);
  CHECK(c.num_elements() == 4);
  CHECK(c.breakpoints()[0][1] == doctest::Approx(0.15));
}
