#include "starwave/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace starwave {

namespace {

struct TripleHash {
  std::size_t operator()(const std::array<int, 3>& t) const noexcept {
    std::size_t h = static_cast<std::size_t>(t[0]);
    h = h * 1000003u ^ static_cast<std::size_t>(t[1]);
    h = h * 1000003u ^ static_cast<std::size_t>(t[2]);
    return h;
  }
};

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

}  // namespace

std::array<int, 3> local_face_vertices(int l) {
  switch (l) {
    case 0: return {1, 2, 3};
    case 1: return {0, 2, 3};
    case 2: return {0, 1, 3};
    default: return {0, 1, 2};
  }
}

Mesh Mesh::from_cells(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells) {
  Mesh m;
  m.vertices_ = std::move(vertices);
  m.cells_ = std::move(cells);
  const auto nv = static_cast<int>(m.vertices_.size());

  double scale = 0.0;
  for (const auto& v : m.vertices_) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  const double vol_tol = 1e-14 * std::max(scale * scale * scale, 1e-300);

  for (std::size_t e = 0; e < m.cells_.size(); ++e) {
    auto& c = m.cells_[e];
    for (int v : c)
      if (v < 0 || v >= nv) throw DomainError("cell " + std::to_string(e) + " references a missing vertex");
    double vol = signed_volume(m.vertices_[c[0]], m.vertices_[c[1]], m.vertices_[c[2]], m.vertices_[c[3]]);
    if (std::abs(vol) <= vol_tol) throw DomainError("degenerate cell " + std::to_string(e));
    if (vol < 0.0) std::swap(c[2], c[3]);
  }

  std::unordered_map<std::array<int, 3>, int, TripleHash> index;
  index.reserve(m.cells_.size() * 3);
  m.cell_faces_.resize(m.cells_.size());
  for (std::size_t e = 0; e < m.cells_.size(); ++e) {
    for (int l = 0; l < 4; ++l) {
      const auto lv = local_face_vertices(l);
      std::array<int, 3> key{m.cells_[e][lv[0]], m.cells_[e][lv[1]], m.cells_[e][lv[2]]};
      std::sort(key.begin(), key.end());
      auto [it, inserted] = index.try_emplace(key, static_cast<int>(m.faces_.size()));
      if (inserted) {
        m.faces_.push_back(key);
        m.face_cells_.push_back({static_cast<int>(e), -1});
        m.cell_faces_[e][l] = {it->second, 1};
      } else {
        auto& fc = m.face_cells_[static_cast<std::size_t>(it->second)];
        if (fc[1] >= 0) throw DomainError("face shared by more than two cells");
        fc[1] = static_cast<int>(e);
        m.cell_faces_[e][l] = {it->second, -1};
      }
    }
  }

  m.normals_.resize(m.cells_.size());
  for (std::size_t e = 0; e < m.cells_.size(); ++e) {
    const auto& c = m.cells_[e];
    for (int l = 0; l < 4; ++l) {
      const auto lv = local_face_vertices(l);
      const Vec3& a = m.vertices_[c[lv[0]]];
      const Vec3& b = m.vertices_[c[lv[1]]];
      const Vec3& d = m.vertices_[c[lv[2]]];
      Vec3 n = (b - a).cross(d - a).normalized();
      if (n.dot(m.vertices_[c[l]] - a) > 0.0) n = -n;
      m.normals_[e][static_cast<std::size_t>(l)] = n;
    }
  }
  return m;
}

std::size_t Mesh::num_boundary_faces() const {
  return static_cast<std::size_t>(
      std::count_if(face_cells_.begin(), face_cells_.end(), [](const auto& fc) { return fc[1] < 0; }));
}

double Mesh::cell_volume(std::size_t e) const {
  const auto& c = cells_[e];
  return signed_volume(vertices_[c[0]], vertices_[c[1]], vertices_[c[2]], vertices_[c[3]]);
}

Vec3 Mesh::centroid(std::size_t e) const {
  const auto& c = cells_[e];
  return 0.25 * (vertices_[c[0]] + vertices_[c[1]] + vertices_[c[2]] + vertices_[c[3]]);
}

double Mesh::diameter(std::size_t e) const {
  const auto& c = cells_[e];
  double h = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) h = std::max(h, (vertices_[c[i]] - vertices_[c[j]]).norm());
  return h;
}

double Mesh::face_area(std::size_t f) const {
  const auto& t = faces_[f];
  return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (std::size_t e = 0; e < cells_.size(); ++e) v += cell_volume(e);
  return v;
}

void Mesh::validate() const {
  std::vector<int> uses(faces_.size(), 0);
  std::vector<int> sign_sum(faces_.size(), 0);
  for (std::size_t e = 0; e < cells_.size(); ++e) {
    if (!(cell_volume(e) > 0.0)) throw DomainError("cell " + std::to_string(e) + " has non-positive volume");
    for (int l = 0; l < 4; ++l) {
      const auto& cf = cell_faces_[e][static_cast<std::size_t>(l)];
      ++uses[static_cast<std::size_t>(cf.face)];
      sign_sum[static_cast<std::size_t>(cf.face)] += cf.sign;
    }
  }
  std::size_t interior = 0, boundary = 0;
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const bool bnd = face_cells_[f][1] < 0;
    if (uses[f] != (bnd ? 1 : 2)) throw DomainError("face incidence violated at face " + std::to_string(f));
    if (sign_sum[f] != (bnd ? 1 : 0)) throw DomainError("face orientation violated at face " + std::to_string(f));
    if (!bnd) {
      const auto e0 = static_cast<std::size_t>(face_cells_[f][0]);
      const auto e1 = static_cast<std::size_t>(face_cells_[f][1]);
      if (e0 >= e1) throw DomainError("face owner is not the lower cell index");
      Vec3 n0, n1;
      for (int l = 0; l < 4; ++l) {
        if (cell_faces_[e0][static_cast<std::size_t>(l)].face == static_cast<int>(f)) n0 = normals_[e0][static_cast<std::size_t>(l)];
        if (cell_faces_[e1][static_cast<std::size_t>(l)].face == static_cast<int>(f)) n1 = normals_[e1][static_cast<std::size_t>(l)];
      }
      if ((n0 + n1).norm() > 1e-10) throw DomainError("shared face normals are not opposite");
      ++interior;
    } else {
      ++boundary;
    }
  }
  if (4 * cells_.size() != 2 * interior + boundary) throw DomainError("face count identity violated");
}

// ---------------------------------------------------------------------------
// Layered ball

std::vector<double> LayerSpec::all_radii() const {
  std::vector<double> r = interior_radii;
  r.insert(r.end(), surface_radii.begin(), surface_radii.end());
  return r;
}

void LayerSpec::validate() const {
  const auto r = all_radii();
  if (r.empty()) throw InputError("layer spec: no radii");
  if (!(r.front() > 0.0)) throw InputError("layer spec: radii must be positive");
  for (std::size_t k = 1; k < r.size(); ++k)
    if (!(r[k] > r[k - 1])) throw InputError("layer spec: radii must be strictly increasing");
  if (angular_resolution < 0 || angular_resolution > 7)
    throw InputError("layer spec: angular resolution must lie in [0, 7]");
}

namespace {

struct Icosphere {
  std::vector<Vec3> points;  // unit sphere
  std::vector<std::array<int, 3>> triangles;
};

Icosphere make_icosphere(int level) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere s;
  s.points = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
              {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : s.points) p.normalize();
  s.triangles = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (int k = 0; k < level; ++k) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      s.points.push_back((s.points[static_cast<std::size_t>(a)] + s.points[static_cast<std::size_t>(b)]).normalized());
      const int id = static_cast<int>(s.points.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(s.triangles.size() * 4);
    for (const auto& tri : s.triangles) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    s.triangles = std::move(next);
  }
  return s;
}

}  // namespace

Mesh build_layered_ball(const LayerSpec& spec) {
  spec.validate();
  const auto radii = spec.all_radii();
  const Icosphere ico = make_icosphere(spec.angular_resolution);
  const int np = static_cast<int>(ico.points.size());

  // Vertex 0 is the center; shell k occupies [1 + k np, 1 + (k+1) np).
  std::vector<Vec3> vertices;
  vertices.reserve(1 + radii.size() * ico.points.size());
  vertices.emplace_back(Vec3::Zero());
  for (double r : radii)
    for (const auto& p : ico.points) vertices.push_back(r * p);
  auto vid = [&](std::size_t shell, int p) { return 1 + static_cast<int>(shell) * np + p; };

  std::vector<std::array<int, 4>> cells;
  cells.reserve(ico.triangles.size() * (1 + 3 * (radii.size() - 1)));
  for (const auto& tri : ico.triangles) cells.push_back({0, vid(0, tri[0]), vid(0, tri[1]), vid(0, tri[2])});
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    for (auto tri : ico.triangles) {
      // Sorting by angular index gives every quad side the same diagonal
      // (upper of the smaller index to lower of the larger) in both prisms.
      std::sort(tri.begin(), tri.end());
      const int a = vid(k, tri[0]), b = vid(k, tri[1]), c = vid(k, tri[2]);
      const int a1 = vid(k + 1, tri[0]), b1 = vid(k + 1, tri[1]), c1 = vid(k + 1, tri[2]);
      cells.push_back({a, b, c, a1});
      cells.push_back({b, c, a1, b1});
      cells.push_back({c, a1, b1, c1});
    }
  }
  return Mesh::from_cells(std::move(vertices), std::move(cells));
}

Mesh build_cube(int n) {
  if (n < 1) throw InputError("cube subdivisions must be at least 1");
  const int nv = n + 1;
  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(nv * nv * nv));
  for (int k = 0; k < nv; ++k)
    for (int j = 0; j < nv; ++j)
      for (int i = 0; i < nv; ++i)
        vertices.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n,
                              static_cast<double>(k) / n);
  auto vid = [&](int i, int j, int k) { return i + nv * (j + nv * k); };

  // Kuhn split: one tetrahedron per ordering of the three axis steps from the
  // subcube's min corner to its max corner.
  static constexpr std::array<std::array<int, 3>, 6> orders{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<std::array<int, 4>> cells;
  cells.reserve(static_cast<std::size_t>(6 * n * n * n));
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& ord : orders) {
          std::array<int, 3> p{i, j, k};
          std::array<int, 4> tet{};
          tet[0] = vid(p[0], p[1], p[2]);
          for (int s = 0; s < 3; ++s) {
            ++p[static_cast<std::size_t>(ord[static_cast<std::size_t>(s)])];
            tet[static_cast<std::size_t>(s) + 1] = vid(p[0], p[1], p[2]);
          }
          cells.push_back(tet);
        }
  return Mesh::from_cells(std::move(vertices), std::move(cells));
}

// ---------------------------------------------------------------------------
// Gmsh 2.2

Mesh import_msh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string token;
  bool have_format = false, have_nodes = false, have_elements = false;
  std::vector<Vec3> vertices;
  std::unordered_map<long, int> node_index;
  std::vector<std::array<int, 4>> cells;

  auto expect_end = [&](const std::string& tag) {
    std::string end;
    if (!(in >> end) || end != tag) throw InputError(path + ": malformed section, expected " + tag);
  };

  while (in >> token) {
    if (token == "$MeshFormat") {
      double version = 0.0;
      int file_type = 0, data_size = 0;
      if (!(in >> version >> file_type >> data_size)) throw InputError(path + ": malformed $MeshFormat");
      if (version < 2.0 || version >= 3.0 || file_type != 0)
        throw InputError(path + ": only MSH 2.x ASCII is supported");
      expect_end("$EndMeshFormat");
      have_format = true;
    } else if (token == "$Nodes") {
      long count = 0;
      if (!(in >> count) || count < 0) throw InputError(path + ": malformed $Nodes");
      vertices.reserve(static_cast<std::size_t>(count));
      for (long i = 0; i < count; ++i) {
        long id = 0;
        double x = 0, y = 0, z = 0;
        if (!(in >> id >> x >> y >> z)) throw InputError(path + ": malformed node line");
        node_index[id] = static_cast<int>(vertices.size());
        vertices.emplace_back(x, y, z);
      }
      expect_end("$EndNodes");
      have_nodes = true;
    } else if (token == "$Elements") {
      long count = 0;
      if (!(in >> count) || count < 0) throw InputError(path + ": malformed $Elements");
      std::string line;
      std::getline(in, line);
      for (long i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw InputError(path + ": truncated $Elements");
        std::istringstream ls(line);
        long id = 0;
        int type = 0, ntags = 0;
        if (!(ls >> id >> type >> ntags)) throw InputError(path + ": malformed element line");
        for (int t = 0; t < ntags; ++t) {
          long tag = 0;
          ls >> tag;
        }
        if (type == 2 || type == 15 || type == 1) continue;
        if (type != 4) throw InputError(path + ": unsupported element type " + std::to_string(type));
        std::array<int, 4> tet{};
        for (auto& v : tet) {
          long nid = 0;
          if (!(ls >> nid)) throw InputError(path + ": malformed tetrahedron");
          auto it = node_index.find(nid);
          if (it == node_index.end()) throw InputError(path + ": element references unknown node");
          v = it->second;
        }
        cells.push_back(tet);
      }
      expect_end("$EndElements");
      have_elements = true;
    } else if (!token.empty() && token[0] == '$' && token.rfind("$End", 0) != 0) {
      // Unknown section: skip to its end marker.
      const std::string end = "$End" + token.substr(1);
      std::string t;
      while (in >> t && t != end) {}
      if (t != end) throw InputError(path + ": unterminated section " + token);
    } else {
      throw InputError(path + ": unexpected token '" + token + "'");
    }
  }
  if (!have_format || !have_nodes || !have_elements)
    throw InputError(path + ": missing $MeshFormat, $Nodes or $Elements");
  if (cells.empty()) throw InputError(path + ": no tetrahedra");
  std::vector<char> used(vertices.size(), 0);
  for (const auto& c : cells)
    for (int v : c) used[static_cast<std::size_t>(v)] = 1;
  if (std::find(used.begin(), used.end(), 0) != used.end())
    throw InputError(path + ": dangling vertex not used by any tetrahedron");
  return Mesh::from_cells(std::move(vertices), std::move(cells));
}

void export_msh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.num_vertices() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& v = mesh.vertices()[i];
    out << i + 1 << ' ' << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  out << "$EndNodes\n$Elements\n" << mesh.num_cells() << '\n';
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto& c = mesh.cell(e);
    out << e + 1 << " 4 2 1 1 " << c[0] + 1 << ' ' << c[1] + 1 << ' ' << c[2] + 1 << ' ' << c[3] + 1 << '\n';
  }
  out << "$EndElements\n";
}

double local_wavelength(const Mesh& mesh, const RadialBackground& bg,
                        const PerturbationField& pert, const SolverConfig& cfg, std::size_t cell) {
  return 2.0 * pi * perturbed_wavespeed(bg, pert, mesh.centroid(cell)) / cfg.omega;
}

}  // namespace starwave

namespace starwave {

PointLocator::PointLocator(const Mesh& mesh, double tolerance) : mesh_(&mesh), tol_(tolerance) {
  lo_ = Vec3::Constant(std::numeric_limits<double>::max());
  hi_ = -lo_;
  for (const auto& v : mesh.vertices()) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  const Vec3 pad = 1e-9 * (hi_ - lo_).cwiseMax(1e-300);
  lo_ -= pad;
  hi_ += pad;
  const int per_dim = std::max(1, static_cast<int>(std::cbrt(static_cast<double>(mesh.num_cells()) / 2.0)));
  dims_ = {per_dim, per_dim, per_dim};
  buckets_.resize(static_cast<std::size_t>(per_dim * per_dim * per_dim));
  inv_.resize(mesh.num_cells());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto& c = mesh.cell(e);
    const auto& V = mesh.vertices();
    Eigen::Matrix3d J;
    J << V[c[1]] - V[c[0]], V[c[2]] - V[c[0]], V[c[3]] - V[c[0]];
    inv_[e] = J.inverse();
    Vec3 blo = V[c[0]], bhi = V[c[0]];
    for (int k = 1; k < 4; ++k) {
      blo = blo.cwiseMin(V[c[k]]);
      bhi = bhi.cwiseMax(V[c[k]]);
    }
    std::array<int, 3> a{}, b{};
    for (int d = 0; d < 3; ++d) {
      const double w = (hi_(d) - lo_(d)) / dims_[d];
      a[d] = std::clamp(static_cast<int>((blo(d) - lo_(d)) / w) - 1, 0, dims_[d] - 1);
      b[d] = std::clamp(static_cast<int>((bhi(d) - lo_(d)) / w) + 1, 0, dims_[d] - 1);
    }
    for (int k = a[2]; k <= b[2]; ++k)
      for (int j = a[1]; j <= b[1]; ++j)
        for (int i = a[0]; i <= b[0]; ++i)
          buckets_[static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k))].push_back(static_cast<int>(e));
  }
}

std::size_t PointLocator::bucket_of(const Vec3& x) const {
  std::array<int, 3> idx{};
  for (int d = 0; d < 3; ++d) {
    const double w = (hi_(d) - lo_(d)) / dims_[d];
    idx[d] = std::clamp(static_cast<int>((x(d) - lo_(d)) / w), 0, dims_[d] - 1);
  }
  return static_cast<std::size_t>(idx[0] + dims_[0] * (idx[1] + dims_[1] * idx[2]));
}

Eigen::Vector4d PointLocator::barycentric(std::size_t e, const Vec3& x) const {
  const Vec3 xi = inv_[e] * (x - mesh_->vertices()[mesh_->cell(e)[0]]);
  return {1.0 - xi.sum(), xi(0), xi(1), xi(2)};
}

int PointLocator::locate(const Vec3& x) const {
  for (int d = 0; d < 3; ++d)
    if (x(d) < lo_(d) || x(d) > hi_(d)) return -1;
  // Bucket lists are in increasing cell order, so the first hit is the lowest index.
  for (int e : buckets_[bucket_of(x)])
    if (barycentric(static_cast<std::size_t>(e), x).minCoeff() >= -tol_) return e;
  return -1;
}

}  // namespace starwave
