#pragma once

#include <vector>

#include <Eigen/Dense>

#include "starwave/common.hpp"

namespace starwave {

using Vec2 = Eigen::Vector2d;

/// Gauss-Jacobi rule on [-1, 1] for the weight (1 - x)^alpha (1 + x)^beta.
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
GaussRule gauss_jacobi(int n, double alpha, double beta);

/// Rules on the reference simplices with vertices at the origin and the unit
/// points; weights sum to 1/6 (tetrahedron) and 1/2 (triangle).
struct TetQuadrature {
  std::vector<Vec3> x;
  std::vector<double> w;
};
struct TriQuadrature {
  std::vector<Vec2> x;
  std::vector<double> w;
};

/// Collapsed-coordinate rules exact for polynomials of total degree `degree`.
TetQuadrature tet_quadrature(int degree);
TriQuadrature tri_quadrature(int degree);

inline int tet_dofs(int p) { return (p + 1) * (p + 2) * (p + 3) / 6; }
inline int tri_dofs(int p) { return (p + 1) * (p + 2) / 2; }

/// Order-p Lagrange element on the reference tetrahedron with equispaced nodes
/// and a quadrature of degree 2p+2 with tabulated values and gradients.
class TetElement {
 public:
  explicit TetElement(int order);

  int order() const { return order_; }
  int ndof() const { return ndof_; }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  const TetQuadrature& quadrature() const { return quad_; }

  /// ndof x nq basis values at the quadrature points.
  const Eigen::MatrixXd& values() const { return values_; }
  /// ndof x nq reference derivative d/dxi_k at the quadrature points.
  const Eigen::MatrixXd& derivatives(int k) const { return grads_[static_cast<std::size_t>(k)]; }

  Eigen::VectorXd eval(const Vec3& xi) const;
  /// ndof x 3 reference gradients at xi.
  Eigen::MatrixXd eval_grad(const Vec3& xi) const;

 private:
  int order_;
  int ndof_;
  std::vector<Vec3> nodes_;
  std::vector<std::array<int, 3>> exponents_;
  Eigen::MatrixXd coeffs_;  // Lagrange function i = sum_k coeffs_(k, i) psi_k
  TetQuadrature quad_;
  Eigen::MatrixXd values_;
  std::array<Eigen::MatrixXd, 3> grads_;
};

/// Order-p Lagrange element on the reference triangle, equispaced nodes.
class TriElement {
 public:
  explicit TriElement(int order);

  int order() const { return order_; }
  int ndof() const { return ndof_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  /// Quadrature of degree 2p+2 and the basis values there (ndof x nq).
  const TriQuadrature& quadrature() const { return quad_; }
  const Eigen::MatrixXd& values() const { return values_; }

  Eigen::VectorXd eval(const Vec2& xi) const;

 private:
  int order_;
  int ndof_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 2>> exponents_;
  Eigen::MatrixXd coeffs_;
  TriQuadrature quad_;
  Eigen::MatrixXd values_;
};

inline constexpr int max_order = 8;

/// Shared immutable elements for orders 1..max_order, built on first use.
const TetElement& tet_element(int order);
const TriElement& tri_element(int order);

}  // namespace starwave
