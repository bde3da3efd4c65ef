#include "starwave/reference.hpp"

#include <memory>
#include <mutex>

namespace starwave {

namespace {

/// Homogeneous ("scaled") Jacobi polynomials Q_n(u, s) = s^n P_n^(alpha,0)(u/s)
/// for n = 0..nmax with partial derivatives in u and s. Evaluating them in
/// this form keeps the collapsed-coordinate basis free of divisions.
void scaled_jacobi(int nmax, double alpha, double u, double s, double* q, double* qu, double* qs) {
  q[0] = 1.0;
  qu[0] = qs[0] = 0.0;
  if (nmax == 0) return;
  q[1] = 0.5 * ((alpha + 2.0) * u + alpha * s);
  qu[1] = 0.5 * (alpha + 2.0);
  qs[1] = 0.5 * alpha;
  for (int n = 1; n < nmax; ++n) {
    const double c1 = 2.0 * (n + 1) * (n + alpha + 1) * (2 * n + alpha);
    const double c2 = (2 * n + alpha + 1) * (2 * n + alpha + 2) * (2 * n + alpha);
    const double c3 = (2 * n + alpha + 1) * alpha * alpha;
    const double c4 = 2.0 * (n + alpha) * n * (2 * n + alpha + 2);
    const double lin = c2 * u + c3 * s;
    q[n + 1] = (lin * q[n] - c4 * s * s * q[n - 1]) / c1;
    qu[n + 1] = (c2 * q[n] + lin * qu[n] - c4 * s * s * qu[n - 1]) / c1;
    qs[n + 1] = (c3 * q[n] + lin * qs[n] - 2.0 * c4 * s * q[n - 1] - c4 * s * s * qs[n - 1]) / c1;
  }
}

/// Collapsed-coordinate orthogonal basis on the unit tetrahedron, ordered like
/// `exps`, with optional gradients (ndof x 3).
void koornwinder_tet(const std::vector<std::array<int, 3>>& exps, int p, const Vec3& x,
                     Eigen::VectorXd* val, Eigen::MatrixXd* grad) {
  constexpr int M = max_order + 1;
  const double t = 1.0 - x.y() - x.z();
  double a[M], au[M], as[M];
  scaled_jacobi(p, 0.0, 2.0 * x.x() - t, t, a, au, as);
  for (std::size_t m = 0; m < exps.size(); ++m) {
    const int i = exps[m][0], j = exps[m][1], k = exps[m][2];
    double b[M], bu[M], bs[M], c[M], cu[M], cs[M];
    const double s = 1.0 - x.z();
    scaled_jacobi(j, 2.0 * i + 1.0, 2.0 * x.y() - s, s, b, bu, bs);
    scaled_jacobi(k, 2.0 * (i + j) + 2.0, 2.0 * x.z() - 1.0, 1.0, c, cu, cs);
    const double T1 = a[i], T2 = b[j], T3 = c[k];
    if (val) (*val)(static_cast<Eigen::Index>(m)) = T1 * T2 * T3;
    if (grad) {
      const double T1x = 2.0 * au[i], T1t = -au[i] + as[i];
      const double T2y = 2.0 * bu[j], T2z = bu[j] - bs[j];
      const double T3z = 2.0 * cu[k];
      const auto r = static_cast<Eigen::Index>(m);
      (*grad)(r, 0) = T1x * T2 * T3;
      (*grad)(r, 1) = -T1t * T2 * T3 + T1 * T2y * T3;
      (*grad)(r, 2) = -T1t * T2 * T3 + T1 * T2z * T3 + T1 * T2 * T3z;
    }
  }
}

Eigen::VectorXd koornwinder_tri(const std::vector<std::array<int, 2>>& exps, int p, const Vec2& x) {
  constexpr int M = max_order + 1;
  const double t = 1.0 - x.y();
  double a[M], au[M], as[M];
  scaled_jacobi(p, 0.0, 2.0 * x.x() - t, t, a, au, as);
  Eigen::VectorXd v(static_cast<Eigen::Index>(exps.size()));
  for (std::size_t m = 0; m < exps.size(); ++m) {
    const int i = exps[m][0], j = exps[m][1];
    double b[M], bu[M], bs[M];
    scaled_jacobi(j, 2.0 * i + 1.0, 2.0 * x.y() - 1.0, 1.0, b, bu, bs);
    v(static_cast<Eigen::Index>(m)) = a[i] * b[j];
  }
  return v;
}

}  // namespace

GaussRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw InputError("Gauss rule needs at least one point");
  // Golub-Welsch on the symmetric Jacobi matrix of the monic recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  const double ab = alpha + beta;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * k + ab;
    J(k, k) = (k == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (t * (t + 2.0));
    if (k > 0) {
      const double b = 4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (t * t * (t + 1.0) * (t - 1.0));
      J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  const double mu0 = std::pow(2.0, ab + 1.0) * std::tgamma(alpha + 1.0) * std::tgamma(beta + 1.0) /
                     std::tgamma(ab + 2.0);
  GaussRule g;
  g.x.resize(static_cast<std::size_t>(n));
  g.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g.x[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    g.w[static_cast<std::size_t>(i)] = mu0 * v * v;
  }
  return g;
}

TetQuadrature tet_quadrature(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  const auto gu = gauss_jacobi(n, 0.0, 0.0);
  const auto gv = gauss_jacobi(n, 1.0, 0.0);
  const auto gw = gauss_jacobi(n, 2.0, 0.0);
  TetQuadrature q;
  for (int k = 0; k < n; ++k) {
    const double w = 0.5 * (1.0 + gw.x[k]);
    for (int j = 0; j < n; ++j) {
      const double v = 0.5 * (1.0 + gv.x[j]);
      for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (1.0 + gu.x[i]);
        q.x.emplace_back(u * (1.0 - v) * (1.0 - w), v * (1.0 - w), w);
        // Factors 1/2, 1/4, 1/8 map the Jacobi weights from [-1,1] to [0,1].
        q.w.push_back(gu.w[i] * gv.w[j] * gw.w[k] / 64.0);
      }
    }
  }
  return q;
}

TriQuadrature tri_quadrature(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  const auto gu = gauss_jacobi(n, 0.0, 0.0);
  const auto gv = gauss_jacobi(n, 1.0, 0.0);
  TriQuadrature q;
  for (int j = 0; j < n; ++j) {
    const double v = 0.5 * (1.0 + gv.x[j]);
    for (int i = 0; i < n; ++i) {
      const double u = 0.5 * (1.0 + gu.x[i]);
      q.x.emplace_back(u * (1.0 - v), v);
      q.w.push_back(gu.w[i] * gv.w[j] / 8.0);
    }
  }
  return q;
}

// ---------------------------------------------------------------------------

TetElement::TetElement(int order) : order_(order), ndof_(tet_dofs(order)) {
  if (order < 1 || order > max_order) throw InputError("element order must lie in [1, 8]");
  for (int k = 0; k <= order; ++k)
    for (int j = 0; j + k <= order; ++j)
      for (int i = 0; i + j + k <= order; ++i) {
        nodes_.emplace_back(static_cast<double>(i) / order, static_cast<double>(j) / order,
                            static_cast<double>(k) / order);
        exponents_.push_back({i, j, k});
      }
  // The Lagrange basis is expressed in the orthogonal modal basis through the
  // inverse Vandermonde matrix.
  Eigen::MatrixXd V(ndof_, ndof_);
  for (int n = 0; n < ndof_; ++n) {
    Eigen::VectorXd psi(ndof_);
    koornwinder_tet(exponents_, order_, nodes_[static_cast<std::size_t>(n)], &psi, nullptr);
    V.row(n) = psi.transpose();
  }
  coeffs_ = V.fullPivLu().inverse();

  quad_ = tet_quadrature(2 * order + 2);
  const auto nq = static_cast<Eigen::Index>(quad_.w.size());
  values_.resize(ndof_, nq);
  for (auto& g : grads_) g.resize(ndof_, nq);
  for (Eigen::Index q = 0; q < nq; ++q) {
    values_.col(q) = eval(quad_.x[q]);
    const Eigen::MatrixXd g = eval_grad(quad_.x[q]);
    for (int d = 0; d < 3; ++d) grads_[d].col(q) = g.col(d);
  }
}

Eigen::VectorXd TetElement::eval(const Vec3& xi) const {
  Eigen::VectorXd psi(ndof_);
  koornwinder_tet(exponents_, order_, xi, &psi, nullptr);
  return coeffs_.transpose() * psi;
}

Eigen::MatrixXd TetElement::eval_grad(const Vec3& xi) const {
  Eigen::MatrixXd dpsi(ndof_, 3);
  koornwinder_tet(exponents_, order_, xi, nullptr, &dpsi);
  return coeffs_.transpose() * dpsi;
}

TriElement::TriElement(int order) : order_(order), ndof_(tri_dofs(order)) {
  if (order < 1 || order > max_order) throw InputError("element order must lie in [1, 8]");
  for (int j = 0; j <= order; ++j)
    for (int i = 0; i + j <= order; ++i) {
      nodes_.emplace_back(static_cast<double>(i) / order, static_cast<double>(j) / order);
      exponents_.push_back({i, j});
    }
  Eigen::MatrixXd V(ndof_, ndof_);
  for (int n = 0; n < ndof_; ++n) V.row(n) = koornwinder_tri(exponents_, order_, nodes_[static_cast<std::size_t>(n)]).transpose();
  coeffs_ = V.fullPivLu().inverse();
  quad_ = tri_quadrature(2 * order + 2);
  values_.resize(ndof_, static_cast<Eigen::Index>(quad_.w.size()));
  for (std::size_t q = 0; q < quad_.w.size(); ++q) values_.col(static_cast<Eigen::Index>(q)) = eval(quad_.x[q]);
}

Eigen::VectorXd TriElement::eval(const Vec2& xi) const {
  return coeffs_.transpose() * koornwinder_tri(exponents_, order_, xi);
}

namespace {

template <class E>
const E& cached_element(int order) {
  if (order < 1 || order > max_order) throw InputError("element order must lie in [1, 8]");
  static std::array<std::unique_ptr<E>, max_order + 1> table;
  static std::array<std::once_flag, max_order + 1> flags;
  const auto k = static_cast<std::size_t>(order);
  std::call_once(flags[k], [&] { table[k] = std::make_unique<E>(order); });
  return *table[k];
}

}  // namespace

const TetElement& tet_element(int order) { return cached_element<TetElement>(order); }
const TriElement& tri_element(int order) { return cached_element<TriElement>(order); }

}  // namespace starwave
