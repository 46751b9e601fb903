#include "softfem/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "softfem/error.hpp"

namespace softfem {

namespace {

double triangle_signed_area(const Eigen::MatrixXd& x, std::size_t a, std::size_t b, std::size_t c) {
  return 0.5 * ((x(0, b) - x(0, a)) * (x(1, c) - x(1, a)) -
                (x(0, c) - x(0, a)) * (x(1, b) - x(1, a)));
}

}  // namespace

double Mesh::measure() const {
  double total = 0.0;
  for (const auto& l : lengths_) total += l.measure;
  return total;
}

std::array<std::size_t, 3> Mesh::cell_index(std::size_t e) const {
  if (kind_ != MeshKind::Tensor) throw DomainError("cell_index: not a tensor mesh");
  std::array<std::size_t, 3> idx{0, 0, 0};
  std::size_t rem = e;
  for (int a = 0; a < dim_; ++a) {
    const std::size_t n = breakpoints_[a].size() - 1;
    idx[a] = rem % n;
    rem /= n;
  }
  return idx;
}

int Mesh::faces_per_element() const { return kind_ == MeshKind::Tensor ? 2 * dim_ : dim_ + 1; }

std::vector<std::size_t> Mesh::face_vertices(std::size_t e, int f) const {
  const auto& el = elements_.at(e);
  std::vector<std::size_t> out;
  if (kind_ == MeshKind::Tensor) {
    const int axis = f / 2, side = f % 2;
    for (std::size_t c = 0; c < el.size(); ++c)
      if (int((c >> axis) & 1u) == side) out.push_back(el[c]);
  } else {
    for (std::size_t k = 0; k < el.size(); ++k)
      if (int(k) != f) out.push_back(el[k]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Mesh::finalize() {
  const std::size_t ne = elements_.size();
  lengths_.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& el = elements_[e];
    for (std::size_t i = 0; i < el.size(); ++i)
      for (std::size_t j = i + 1; j < el.size(); ++j)
        if (el[i] == el[j]) throw InvalidMesh("element " + std::to_string(e) + " repeats a vertex");
    for (auto v : el)
      if (v >= num_vertices()) throw InvalidMesh("element " + std::to_string(e) + " references a missing vertex");
    ElementLengths l;
    for (std::size_t i = 0; i < el.size(); ++i)
      for (std::size_t j = i + 1; j < el.size(); ++j)
        l.diameter = std::max(l.diameter, (vertices_.col(el[i]) - vertices_.col(el[j])).norm());
    if (kind_ == MeshKind::Tensor) {
      const Eigen::VectorXd lo = vertices_.col(el.front());
      const Eigen::VectorXd hi = vertices_.col(el.back());
      const Eigen::VectorXd ext = hi - lo;
      l.measure = ext.prod();
      l.h0 = ext.minCoeff();
      double boundary = 0.0;
      for (int a = 0; a < dim_; ++a) boundary += 2.0 * l.measure / ext(a);
      l.boundary_measure = boundary;
    } else {
      l.measure = std::abs(triangle_signed_area(vertices_, el[0], el[1], el[2]));
      if (!(l.measure > 0.0)) throw InvalidMesh("element " + std::to_string(e) + " has zero area");
      l.boundary_measure = (vertices_.col(el[0]) - vertices_.col(el[1])).norm() +
                           (vertices_.col(el[1]) - vertices_.col(el[2])).norm() +
                           (vertices_.col(el[2]) - vertices_.col(el[0])).norm();
      l.h0 = dim_ * l.measure / l.boundary_measure;
    }
    lengths_[e] = l;
  }

  std::map<std::vector<std::size_t>, std::vector<std::pair<std::size_t, int>>> faces;
  const int nf = faces_per_element();
  for (std::size_t e = 0; e < ne; ++e)
    for (int f = 0; f < nf; ++f) faces[face_vertices(e, f)].emplace_back(e, f);

  interfaces_.clear();
  boundary_faces_.clear();
  boundary_vertex_.assign(num_vertices(), false);
  for (auto& [key, owners] : faces) {
    if (owners.size() > 2) throw InvalidMesh("face shared by more than two elements");
    if (owners.size() == 1) {
      boundary_faces_.push_back({owners[0].first, owners[0].second, key});
      for (auto v : key) boundary_vertex_[v] = true;
      continue;
    }
    std::sort(owners.begin(), owners.end());
    Interface F;
    F.id = interfaces_.size();
    F.elements = {owners[0].first, owners[1].first};
    F.local_faces = {owners[0].second, owners[1].second};
    F.vertices = key;
    F.normal = Eigen::VectorXd::Zero(dim_);
    const std::size_t e1 = F.elements[0];
    if (kind_ == MeshKind::Tensor) {
      const int axis = F.local_faces[0] / 2;
      const int side = F.local_faces[0] % 2;
      F.normal(axis) = side ? 1.0 : -1.0;
      const Eigen::VectorXd ext =
          vertices_.col(elements_[e1].back()) - vertices_.col(elements_[e1].front());
      double m = 1.0;
      for (int a = 0; a < dim_; ++a)
        if (a != axis) m *= ext(a);
      F.measure = m;
    } else {
      const Eigen::VectorXd a = vertices_.col(key[0]);
      const Eigen::VectorXd b = vertices_.col(key[1]);
      const Eigen::Vector2d t = (b - a);
      F.measure = t.norm();
      Eigen::Vector2d n(t(1), -t(0));
      n /= n.norm();
      const Eigen::VectorXd opposite = vertices_.col(elements_[e1][F.local_faces[0]]);
      if (n.dot(opposite - a) > 0.0) n = -n;
      F.normal = n;
    }
    F.h_F = std::min(lengths_[F.elements[0]].h0, lengths_[F.elements[1]].h0);
    interfaces_.push_back(std::move(F));
  }
}

Mesh build_cartesian_mesh(const std::vector<std::vector<double>>& breakpoints) {
  const int d = static_cast<int>(breakpoints.size());
  if (d < 1 || d > 3) throw InvalidMesh("cartesian mesh needs 1 to 3 axes");
  for (const auto& axis : breakpoints) {
    if (axis.size() < 2) throw InvalidMesh("each axis needs at least two breakpoints");
    for (std::size_t i = 1; i < axis.size(); ++i)
      if (!(axis[i] > axis[i - 1])) throw InvalidMesh("breakpoints must be strictly ascending");
  }
  Mesh mesh;
  mesh.dim_ = d;
  mesh.kind_ = MeshKind::Tensor;
  mesh.breakpoints_ = breakpoints;
  std::array<std::size_t, 3> nv{1, 1, 1}, nc{1, 1, 1};
  for (int a = 0; a < d; ++a) {
    nv[a] = breakpoints[a].size();
    nc[a] = nv[a] - 1;
  }
  const std::size_t total_vertices = nv[0] * nv[1] * nv[2];
  mesh.vertices_.resize(d, static_cast<Eigen::Index>(total_vertices));
  for (std::size_t v = 0; v < total_vertices; ++v) {
    std::size_t rem = v;
    for (int a = 0; a < d; ++a) {
      mesh.vertices_(a, v) = breakpoints[a][rem % nv[a]];
      rem /= nv[a];
    }
  }
  const std::size_t total_cells = nc[0] * nc[1] * nc[2];
  mesh.elements_.resize(total_cells);
  for (std::size_t e = 0; e < total_cells; ++e) {
    std::array<std::size_t, 3> c{0, 0, 0};
    std::size_t rem = e;
    for (int a = 0; a < d; ++a) {
      c[a] = rem % nc[a];
      rem /= nc[a];
    }
    auto& el = mesh.elements_[e];
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
      std::size_t id = 0, stride = 1;
      for (int a = 0; a < d; ++a) {
        id += (c[a] + ((corner >> a) & 1u)) * stride;
        stride *= nv[a];
      }
      el.push_back(id);
    }
  }
  mesh.finalize();
  return mesh;
}

Mesh build_uniform_mesh(int dim, int cells) {
  if (cells < 1) throw InvalidMesh("uniform mesh needs at least one cell per axis");
  std::vector<double> axis(cells + 1);
  for (int i = 0; i <= cells; ++i) axis[i] = double(i) / cells;
  axis.back() = 1.0;
  return build_cartesian_mesh(std::vector<std::vector<double>>(dim, axis));
}

Mesh make_triangle_mesh(Eigen::MatrixXd nodes, std::vector<std::array<std::size_t, 3>> triangles) {
  if (nodes.rows() != 2) throw InvalidMesh("triangle mesh nodes must be 2D");
  if (triangles.empty()) throw InvalidMesh("triangle mesh has no elements");
  Mesh mesh;
  mesh.dim_ = 2;
  mesh.kind_ = MeshKind::Simplicial;
  for (std::size_t e = 0; e < triangles.size(); ++e) {
    auto t = triangles[e];
    for (auto v : t)
      if (v >= static_cast<std::size_t>(nodes.cols()))
        throw InvalidMesh("element " + std::to_string(e) + " references a missing vertex");
    const double area = triangle_signed_area(nodes, t[0], t[1], t[2]);
    if (area == 0.0 || !std::isfinite(area))
      throw InvalidMesh("element " + std::to_string(e) + " is degenerate (zero area)");
    if (area < 0.0) std::swap(t[1], t[2]);
    mesh.elements_.push_back({t[0], t[1], t[2]});
  }
  mesh.vertices_ = std::move(nodes);
  mesh.finalize();
  return mesh;
}

namespace {

Mesh split_grid(int n, bool lshape) {
  if (n < 1) throw InvalidMesh("triangulation needs n >= 1");
  if (lshape && n % 2 != 0) throw InvalidMesh("L-shape triangulation needs an even n");
  auto kept = [&](int i, int j) { return !(lshape && 2 * i >= n && 2 * j >= n); };
  std::vector<long> id((n + 1) * (n + 1), -1);
  auto vid = [&](int i, int j) -> long& { return id[j * (n + 1) + i]; };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (kept(i, j))
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) vid(i + di, j + dj) = 0;
  long count = 0;
  for (auto& v : id)
    if (v == 0) v = count++;  // lexicographic: x fastest, then y
  Eigen::MatrixXd nodes(2, count);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      if (vid(i, j) >= 0) {
        nodes(0, vid(i, j)) = double(i) / n;
        nodes(1, vid(i, j)) = double(j) / n;
      }
  std::vector<std::array<std::size_t, 3>> tris;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!kept(i, j)) continue;
      const auto v00 = std::size_t(vid(i, j)), v10 = std::size_t(vid(i + 1, j));
      const auto v01 = std::size_t(vid(i, j + 1)), v11 = std::size_t(vid(i + 1, j + 1));
      tris.push_back({v00, v10, v11});
      tris.push_back({v00, v11, v01});
    }
  return make_triangle_mesh(std::move(nodes), std::move(tris));
}

}  // namespace

Mesh build_unit_square_triangulation(int n) { return split_grid(n, false); }
Mesh build_lshape_triangulation(int n) { return split_grid(n, true); }

Mesh build_simplicial_mesh(const SimplicialSpec& spec) {
  switch (spec.domain) {
    case SimplicialSpec::Domain::UnitSquare:
      return build_unit_square_triangulation(spec.n);
    case SimplicialSpec::Domain::LShape:
      return build_lshape_triangulation(spec.n);
    case SimplicialSpec::Domain::Explicit:
      return make_triangle_mesh(spec.nodes, spec.triangles);
  }
  throw InvalidMesh("unknown simplicial domain");
}

Mesh refine_mesh(const Mesh& mesh, int r) {
  if (r < 1) throw InvalidMesh("refine_mesh: refinement factor must be >= 1");
  if (r == 1) return mesh;
  if (mesh.kind() == MeshKind::Tensor) {
    std::vector<std::vector<double>> fine(mesh.breakpoints().size());
    for (std::size_t a = 0; a < fine.size(); ++a) {
      const auto& bp = mesh.breakpoints()[a];
      for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        for (int k = 0; k < r; ++k) fine[a].push_back(bp[i] + (bp[i + 1] - bp[i]) * k / r);
      fine[a].push_back(bp.back());
    }
    return build_cartesian_mesh(fine);
  }
  // Lattice points are keyed by their integer barycentric weights on the parent
  // vertex ids, so points on shared edges are created once.
  std::map<std::vector<std::pair<std::size_t, int>>, std::size_t> ids;
  std::vector<Eigen::Vector2d> points;
  std::vector<std::array<std::size_t, 3>> tris;
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const Eigen::Vector2d A = mesh.vertices().col(el[0]), B = mesh.vertices().col(el[1]), C = mesh.vertices().col(el[2]);
    auto id = [&](int i, int j) {
      std::vector<std::pair<std::size_t, int>> key;
      const int w[3] = {r - i - j, i, j};
      for (int k = 0; k < 3; ++k)
        if (w[k] > 0) key.emplace_back(el[k], w[k]);
      std::sort(key.begin(), key.end());
      auto [it, fresh] = ids.try_emplace(key, points.size());
      if (fresh) {
        // vertices are copied exactly; lattice points are interpolated
        if (key.size() == 1)
          points.push_back(mesh.vertices().col(key[0].first));
        else
          points.push_back(A + (double(i) / r) * (B - A) + (double(j) / r) * (C - A));
      }
      return it->second;
    };
    for (int j = 0; j < r; ++j)
      for (int i = 0; i + j < r; ++i) {
        tris.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
        if (i + j + 1 < r) tris.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      }
  }
  Eigen::MatrixXd nodes(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t v = 0; v < points.size(); ++v) nodes.col(v) = points[v];
  return make_triangle_mesh(std::move(nodes), std::move(tris));
}

ElementLengths characteristic_lengths(const Mesh& mesh, std::size_t element) {
  if (element >= mesh.num_elements()) throw DomainError("characteristic_lengths: invalid element id");
  return mesh.lengths(element);
}

const std::vector<Interface>& interfaces(const Mesh& mesh) { return mesh.interfaces(); }

Mesh read_mesh_text(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  auto next = [&](const char* what) -> const std::string& {
    if (pos >= tokens.size()) throw InvalidMesh(std::string("mesh file: unexpected end, expected ") + what);
    return tokens[pos++];
  };
  auto number = [&](const char* what) {
    const std::string& t = next(what);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw InvalidMesh("mesh file: bad " + std::string(what) + " '" + t + "'");
    return v;
  };
  auto count = [&](const char* what) {
    const double v = number(what);
    if (v < 0 || v != std::floor(v)) throw InvalidMesh(std::string("mesh file: bad ") + what);
    return static_cast<std::size_t>(v);
  };
  if (next("'nodes'") != "nodes") throw InvalidMesh("mesh file: expected 'nodes'");
  const std::size_t nn = count("node count");
  Eigen::MatrixXd nodes(2, static_cast<Eigen::Index>(nn));
  for (std::size_t i = 0; i < nn; ++i) {
    nodes(0, i) = number("x coordinate");
    nodes(1, i) = number("y coordinate");
  }
  if (next("'elements'") != "elements") throw InvalidMesh("mesh file: expected 'elements'");
  const std::size_t ne = count("element count");
  std::vector<std::array<std::size_t, 3>> tris(ne);
  for (std::size_t e = 0; e < ne; ++e)
    for (auto& v : tris[e]) v = count("vertex index");
  if (pos != tokens.size()) throw InvalidMesh("mesh file: trailing content");
  return make_triangle_mesh(std::move(nodes), std::move(tris));
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidMesh("cannot open mesh file " + path);
  return read_mesh_text(in);
}

}  // namespace softfem
