#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "starwave/background.hpp"
#include "starwave/block_sparse.hpp"
#include "starwave/mesh.hpp"
#include "starwave/reference.hpp"

namespace starwave {

/// Smallest p in [p_min, p_max] with (p+1) lambda/h >= 10 - 0.8 (p - 3);
/// p_max when none qualifies.
int select_order(double h, double wavelength, int p_min = 1, int p_max = max_order);

/// tau = |A^-1 beta . n| - tau_scale i omega |n^T A^-1 n|.
cplx stabilization_tau(const CMat3& A, const CVec3& beta, const Vec3& n, double omega,
                       double tau_scale = 1e6);

/// Polynomial orders per cell and per face, and the trace numbering.
class Discretization {
 public:
  Discretization() = default;
  /// Face orders are the max of the adjacent cell orders.
  Discretization(const Mesh& mesh, std::vector<int> cell_orders);

  static Discretization uniform(const Mesh& mesh, int order);
  /// hp rule: each cell gets select_order(h_e, local wavelength).
  static Discretization adaptive(const Mesh& mesh, const RadialBackground& bg,
                                 const PerturbationField& pert, const SolverConfig& cfg,
                                 int p_min = 1, int p_max = max_order);

  int cell_order(std::size_t e) const { return cell_order_[e]; }
  int face_order(std::size_t f) const { return face_order_[f]; }
  int face_dofs(std::size_t f) const { return tri_dofs(face_order_[f]); }
  int face_offset(std::size_t f) const { return face_offset_[f]; }
  int num_trace_dofs() const { return face_offset_.back(); }
  /// Scalar volume dofs of a cell: 4 fields (u_x, u_y, u_z, w).
  int cell_dofs(std::size_t e) const { return 4 * tet_dofs(cell_order_[e]); }
  long total_volume_dofs() const;
  const std::vector<int>& face_orders() const { return face_order_; }

 private:
  std::vector<int> cell_order_;
  std::vector<int> face_order_;
  std::vector<int> face_offset_{0};
};

using CoefficientFn = std::function<CoefficientSet(const Vec3&)>;
using ScalarFn = std::function<cplx(const Vec3&)>;

enum class BoundaryMode {
  vacuum,    ///< (1/(Z.n)) lambda + u_hat . n = 0
  dirichlet  ///< lambda = boundary_data
};

/// Everything the local assembly needs besides geometry and orders.
struct ProblemSpec {
  CoefficientFn coefficients;
  std::vector<ScalarFn> sources;  ///< one right-hand-side column each
  double omega = 1.0;
  double tau_scale = 1e6;
  BoundaryMode boundary = BoundaryMode::vacuum;
  ScalarFn boundary_data;  ///< Dirichlet data; zero when empty
  /// |Z.n| is floored at z_floor |Z| on vacuum faces.
  double z_floor = 1e-3;
};

/// Builds the spec for the stellar problem: coefficients from the background,
/// sources scaled by src_scale inside the assembly.
ProblemSpec make_problem(const RadialBackground& bg, const PerturbationField& pert,
                         const SolverConfig& cfg, const std::vector<GaussianSource>& sources);

/// Local HDG blocks of one cell. Volume unknowns are ordered (u_x, u_y, u_z, w),
/// n scalar coefficients each; trace unknowns follow the cell's local faces.
struct LocalMatrices {
  MatrixXc A;  ///< 4n x 4n
  MatrixXc C;  ///< 4n x m, volume <- trace
  MatrixXc B;  ///< m x 4n, trace <- volume
  MatrixXc L;  ///< m x m
  MatrixXc F;  ///< 4n x nsrc volume load
  VectorXc G;  ///< m face right-hand side (Dirichlet data)
  int n = 0;
  std::array<int, 4> face_dofs{};
  std::array<int, 4> face_offset{};  ///< local trace offsets
  int floored_faces = 0;             ///< vacuum faces where |Z.n| was floored
  int dirichlet_fallback_faces = 0;  ///< vacuum faces with Z = 0
  std::array<bool, 4> dirichlet{};   ///< lambda fixed by L lambda = G on this face
};

LocalMatrices assemble_local(const Mesh& mesh, std::size_t cell, const Discretization& disc,
                             const ProblemSpec& problem);

/// Dirichlet faces are eliminated symmetrically: their columns are moved to
/// the right-hand side, leaving K block diagonal on those rows and columns.
struct CondensedContribution {
  MatrixXc K;  ///< L - B A^-1 C
  MatrixXc S;  ///< G - B A^-1 F (one column per source)
};

/// Throws SingularError when A_e cannot be factorized.
CondensedContribution condense(const LocalMatrices& local);

/// Dense LU with partial pivoting applied to a Ruiz-equilibrated copy of the
/// matrix; the scaling removes the spread introduced by large stabilization.
class EquilibratedLU {
 public:
  EquilibratedLU() = default;
  /// Throws SingularError when the scaled matrix is numerically singular.
  explicit EquilibratedLU(const MatrixXc& A);
  MatrixXc solve(const MatrixXc& b) const;
  double rcond() const { return lu_.rcond(); }

 private:
  Eigen::VectorXd row_;
  Eigen::VectorXd col_;
  Eigen::PartialPivLU<MatrixXc> lu_;
};

/// Per-cell data kept for reconstruction.
struct CellCache {
  EquilibratedLU lu;
  MatrixXc C;
  MatrixXc F;
};

struct AssemblyReport {
  int floored_faces = 0;
  int dirichlet_fallback_faces = 0;
  std::vector<std::string> warnings;
};

/// Global trace system K Lambda = S with one block per face.
struct CondensedSystem {
  const Mesh* mesh = nullptr;
  Discretization disc;
  BlockSparseMatrix K;
  MatrixXc S;
  std::vector<CellCache> cells;
  AssemblyReport report;
};

/// Block pattern of K: faces coupled iff they share a cell.
std::vector<std::vector<int>> face_adjacency(const Mesh& mesh);

/// Sums R^T (L - B A^-1 C) R over cells in the given order (natural when empty).
CondensedSystem assemble_system(const Mesh& mesh, const Discretization& disc,
                                const ProblemSpec& problem,
                                const std::vector<std::size_t>& cell_order = {});

CondensedSystem assemble_global(const Mesh& mesh, const RadialBackground& bg,
                                const PerturbationField& pert, const SolverConfig& cfg,
                                const std::vector<GaussianSource>& sources,
                                const Discretization& disc);

/// Per-cell volume coefficients and the trace for one right-hand side.
struct WaveField {
  const Mesh* mesh = nullptr;
  Discretization disc;
  VectorXc trace;
  std::vector<VectorXc> volume;  ///< (u_x, u_y, u_z, w) coefficients per cell
};

/// U_e = A_e^-1 (F_e[:, source] - C_e R_e lambda).
WaveField reconstruct_volume(const CondensedSystem& system, const VectorXc& lambda,
                             int source = 0);

struct PointValue {
  CVec3 u = CVec3::Zero();
  cplx w = 0.0;
};

/// Throws DomainError if x lies outside the mesh.
PointValue evaluate_field(const WaveField& field, const PointLocator& locator, const Vec3& x);
PointValue evaluate_field(const WaveField& field, const Vec3& x);
/// Cell polynomial of one cell at x (no containment check).
PointValue evaluate_in_cell(const WaveField& field, std::size_t cell, const Vec3& x);

/// Affine map of a cell: x = x0 + J xi on the unit reference tetrahedron.
struct CellGeometry {
  Vec3 x0;
  Eigen::Matrix3d J;
  Eigen::Matrix3d Jinv;
  double det = 0.0;
  static CellGeometry of(const Mesh& mesh, std::size_t cell);
  Vec3 to_reference(const Vec3& x) const { return Jinv * (x - x0); }
  Vec3 to_physical(const Vec3& xi) const { return x0 + J * xi; }
};

}  // namespace starwave
