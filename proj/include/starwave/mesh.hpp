#pragma once

#include <array>
#include <string>
#include <vector>

#include "starwave/background.hpp"
#include "starwave/common.hpp"

namespace starwave {

struct CellFace {
  int face = -1;
  int sign = 1;  ///< +1 when the face's global normal points out of this cell
};

/// Tetrahedral mesh with globally indexed faces. Local face l of a cell is the
/// face opposite its local vertex l. A face's global normal points out of the
/// lower-index cell (the owner); boundary normals point outward.
class Mesh {
 public:
  Mesh() = default;

  /// Builds faces, incidence and normals; cells with negative orientation are
  /// reordered. Throws DomainError on a degenerate cell or a face shared by
  /// more than two cells.
  static Mesh from_cells(std::vector<Vec3> vertices, std::vector<std::array<int, 4>> cells);

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }
  std::size_t num_faces() const { return faces_.size(); }
  std::size_t num_boundary_faces() const;

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 4>>& cells() const { return cells_; }
  const std::array<int, 4>& cell(std::size_t e) const { return cells_[e]; }
  /// Face vertex triple, sorted by global vertex index.
  const std::array<int, 3>& face(std::size_t f) const { return faces_[f]; }
  const std::array<CellFace, 4>& cell_faces(std::size_t e) const { return cell_faces_[e]; }
  /// Adjacent cells of a face; second entry is -1 on the boundary.
  const std::array<int, 2>& face_cells(std::size_t f) const { return face_cells_[f]; }
  bool is_boundary(std::size_t f) const { return face_cells_[f][1] < 0; }
  /// Unit outward normal of local face l of cell e.
  const Vec3& normal(std::size_t e, int l) const { return normals_[e][static_cast<std::size_t>(l)]; }

  double cell_volume(std::size_t e) const;
  Vec3 centroid(std::size_t e) const;
  /// Longest edge length.
  double diameter(std::size_t e) const;
  double face_area(std::size_t f) const;
  double total_volume() const;

  /// Re-checks every structural invariant; throws DomainError on violation.
  void validate() const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 4>> cells_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<std::array<CellFace, 4>> cell_faces_;
  std::vector<std::array<int, 2>> face_cells_;
  std::vector<std::array<Vec3, 4>> normals_;
};

/// Bucket-grid point location. On shared faces and vertices the containing
/// cell with the lowest index wins.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh, double tolerance = 1e-10);

  /// Containing cell or -1.
  int locate(const Vec3& x) const;
  /// Barycentric coordinates of x in cell e.
  Eigen::Vector4d barycentric(std::size_t e, const Vec3& x) const;

 private:
  const Mesh* mesh_;
  double tol_;
  Vec3 lo_, hi_;
  std::array<int, 3> dims_{};
  std::vector<std::vector<int>> buckets_;
  std::vector<Eigen::Matrix3d> inv_;
  std::size_t bucket_of(const Vec3& x) const;
};

/// Local vertex indices of local face l (the three vertices other than l).
std::array<int, 3> local_face_vertices(int l);

struct LayerSpec {
  std::vector<double> interior_radii;  ///< increasing
  std::vector<double> surface_radii;   ///< increasing, last = r_max
  int angular_resolution = 1;          ///< icosphere subdivision level

  std::vector<double> all_radii() const;
  void validate() const;
};

/// Concentric icosphere shells joined by prisms (3 tets each) around a central
/// fan of tetrahedra.
Mesh build_layered_ball(const LayerSpec& spec);

/// Unit cube [0,1]^3 with n^3 subcubes, 6 Kuhn tetrahedra each.
Mesh build_cube(int n);

/// Gmsh MSH 2.2 ASCII; surface triangles are ignored on import.
Mesh import_msh(const std::string& path);
void export_msh(const Mesh& mesh, const std::string& path);

/// 2 pi c(x_c) / omega at the cell centroid.
double local_wavelength(const Mesh& mesh, const RadialBackground& bg,
                        const PerturbationField& pert, const SolverConfig& cfg, std::size_t cell);

}  // namespace starwave
