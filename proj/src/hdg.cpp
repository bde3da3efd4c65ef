#include "starwave/hdg.hpp"

#include <numeric>

namespace starwave {

int select_order(double h, double wavelength, int p_min, int p_max) {
  if (!(h > 0.0) || !(wavelength > 0.0)) throw InputError("select_order: h and wavelength must be positive");
  p_min = std::clamp(p_min, 1, max_order);
  p_max = std::clamp(p_max, p_min, max_order);
  const double ratio = wavelength / h;
  for (int p = p_min; p <= p_max; ++p)
    if ((p + 1) * ratio >= 10.0 - 0.8 * (p - 3)) return p;
  return p_max;
}

cplx stabilization_tau(const CMat3& A, const CVec3& beta, const Vec3& n, double omega,
                       double tau_scale) {
  const Eigen::PartialPivLU<CMat3> lu(A);
  const double scale = A.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || std::abs(A.determinant()) <= 1e-13 * scale * scale * scale)
    throw SingularError("stabilization: coefficient matrix A is singular");
  const CVec3 nc = n.cast<cplx>();
  const cplx adv = nc.dot(lu.solve(beta));
  const cplx nan = nc.dot(lu.solve(nc));
  return cplx(std::abs(adv), 0.0) - cplx(0.0, tau_scale * omega * std::abs(nan));
}

// ---------------------------------------------------------------------------
// Discretization

Discretization::Discretization(const Mesh& mesh, std::vector<int> cell_orders)
    : cell_order_(std::move(cell_orders)) {
  if (cell_order_.size() != mesh.num_cells()) throw InputError("one order per cell is required");
  for (int p : cell_order_)
    if (p < 1 || p > max_order) throw InputError("cell order must lie in [1, 8]");
  face_order_.assign(mesh.num_faces(), 0);
  for (std::size_t e = 0; e < mesh.num_cells(); ++e)
    for (const auto& cf : mesh.cell_faces(e)) {
      auto& q = face_order_[static_cast<std::size_t>(cf.face)];
      q = std::max(q, cell_order_[e]);
    }
  face_offset_.reserve(mesh.num_faces() + 1);
  for (int q : face_order_) face_offset_.push_back(face_offset_.back() + tri_dofs(q));
}

Discretization Discretization::uniform(const Mesh& mesh, int order) {
  return Discretization(mesh, std::vector<int>(mesh.num_cells(), order));
}

Discretization Discretization::adaptive(const Mesh& mesh, const RadialBackground& bg,
                                        const PerturbationField& pert, const SolverConfig& cfg,
                                        int p_min, int p_max) {
  std::vector<int> orders(mesh.num_cells());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e)
    orders[e] = select_order(mesh.diameter(e), local_wavelength(mesh, bg, pert, cfg, e), p_min, p_max);
  return Discretization(mesh, std::move(orders));
}

long Discretization::total_volume_dofs() const {
  long n = 0;
  for (int p : cell_order_) n += 4L * tet_dofs(p);
  return n;
}

ProblemSpec make_problem(const RadialBackground& bg, const PerturbationField& pert,
                         const SolverConfig& cfg, const std::vector<GaussianSource>& sources) {
  cfg.validate();
  ProblemSpec p;
  p.coefficients = [bg, pert, cfg](const Vec3& x) { return eval_coefficients(bg, pert, cfg, x); };
  for (const auto& s : sources) p.sources.emplace_back([s](const Vec3& x) { return cplx(s(x)); });
  p.omega = cfg.omega;
  p.tau_scale = cfg.tau_scale;
  return p;
}

CellGeometry CellGeometry::of(const Mesh& mesh, std::size_t cell) {
  const auto& c = mesh.cell(cell);
  const auto& V = mesh.vertices();
  CellGeometry g;
  g.x0 = V[c[0]];
  g.J << V[c[1]] - V[c[0]], V[c[2]] - V[c[0]], V[c[3]] - V[c[0]];
  g.Jinv = g.J.inverse();
  g.det = g.J.determinant();
  return g;
}

// ---------------------------------------------------------------------------
// Local assembly

namespace {

/// Phi diag(w) Psi^T for real tables and complex weights.
MatrixXc weighted_product(const Eigen::MatrixXd& Phi, const VectorXc& w, const Eigen::MatrixXd& Psi) {
  return Phi.cast<cplx>() * w.asDiagonal() * Psi.transpose().cast<cplx>();
}

}  // namespace

LocalMatrices assemble_local(const Mesh& mesh, std::size_t cell, const Discretization& disc,
                             const ProblemSpec& problem) {
  const int p = disc.cell_order(cell);
  const TetElement& te = tet_element(p);
  const int n = te.ndof();
  const auto geo = CellGeometry::of(mesh, cell);
  const auto nsrc = static_cast<Eigen::Index>(problem.sources.size());

  LocalMatrices lm;
  lm.n = n;
  int m = 0;
  for (int l = 0; l < 4; ++l) {
    const auto f = static_cast<std::size_t>(mesh.cell_faces(cell)[static_cast<std::size_t>(l)].face);
    lm.face_offset[static_cast<std::size_t>(l)] = m;
    lm.face_dofs[static_cast<std::size_t>(l)] = disc.face_dofs(f);
    m += disc.face_dofs(f);
  }
  lm.A = MatrixXc::Zero(4 * n, 4 * n);
  lm.C = MatrixXc::Zero(4 * n, m);
  lm.B = MatrixXc::Zero(m, 4 * n);
  lm.L = MatrixXc::Zero(m, m);
  lm.F = MatrixXc::Zero(4 * n, nsrc);
  lm.G = VectorXc::Zero(m);

  // Volume terms.
  const auto& quad = te.quadrature();
  const auto nq = static_cast<Eigen::Index>(quad.w.size());
  std::array<std::array<VectorXc, 3>, 3> wA;
  std::array<VectorXc, 3> wbeta;
  for (auto& row : wA)
    for (auto& v : row) v.resize(nq);
  for (auto& v : wbeta) v.resize(nq);
  VectorXc wrho(nq), wreal(nq);
  MatrixXc load(nq, nsrc);
  for (Eigen::Index q = 0; q < nq; ++q) {
    const Vec3 x = geo.to_physical(quad.x[static_cast<std::size_t>(q)]);
    const double w = quad.w[static_cast<std::size_t>(q)] * geo.det;
    const auto k = problem.coefficients(x);
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) wA[a][b](q) = w * k.A(a, b);
      wbeta[a](q) = w * k.beta(a);
    }
    wrho(q) = w * k.rho_coef;
    wreal(q) = w;
    for (Eigen::Index s = 0; s < nsrc; ++s)
      load(q, s) = w * k.src_scale * problem.sources[static_cast<std::size_t>(s)](x);
  }
  const Eigen::MatrixXd& Phi = te.values();
  std::array<Eigen::MatrixXd, 3> dPhi;
  for (int d = 0; d < 3; ++d) {
    dPhi[d] = Eigen::MatrixXd::Zero(n, nq);
    for (int k = 0; k < 3; ++k) dPhi[d] += geo.Jinv(k, d) * te.derivatives(k);
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) lm.A.block(a * n, b * n, n, n) = weighted_product(Phi, wA[a][b], Phi);
  for (int d = 0; d < 3; ++d) {
    const MatrixXc Mb = weighted_product(Phi, wbeta[d], Phi);
    const MatrixXc D = weighted_product(dPhi[d], wreal, Phi);  // (i, j) = int dphi_i/dx_d phi_j
    lm.A.block(d * n, 3 * n, n, n) = Mb - D;
    lm.A.block(3 * n, d * n, n, n) = D.transpose() - Mb;
  }
  lm.A.block(3 * n, 3 * n, n, n) = weighted_product(Phi, wrho, Phi);
  lm.F.middleRows(3 * n, n) = Phi.cast<cplx>() * load;

  // Face terms.
  const auto& V = mesh.vertices();
  for (int l = 0; l < 4; ++l) {
    const auto& cf = mesh.cell_faces(cell)[static_cast<std::size_t>(l)];
    const auto f = static_cast<std::size_t>(cf.face);
    const TriElement& fe = tri_element(disc.face_order(f));
    const int k = fe.ndof();
    const int off = lm.face_offset[static_cast<std::size_t>(l)];
    const auto& tri = mesh.face(f);
    const Vec3 e1 = V[tri[1]] - V[tri[0]];
    const Vec3 e2 = V[tri[2]] - V[tri[0]];
    const double jac = e1.cross(e2).norm();
    const Vec3 nrm = mesh.normal(cell, l);
    const bool boundary = mesh.is_boundary(f);

    const auto& fq = fe.quadrature();
    const auto nfq = static_cast<Eigen::Index>(fq.w.size());
    Eigen::MatrixXd PhiF(n, nfq);
    VectorXc wq(nfq), wtau(nfq), wzinv(nfq), wdata(nfq);
    bool zero_z = false;
    int floored = 0;
    for (Eigen::Index q = 0; q < nfq; ++q) {
      const Vec2& ab = fq.x[static_cast<std::size_t>(q)];
      const Vec3 x = V[tri[0]] + ab(0) * e1 + ab(1) * e2;
      const double w = fq.w[static_cast<std::size_t>(q)] * jac;
      PhiF.col(q) = te.eval(geo.to_reference(x));
      const auto co = problem.coefficients(x);
      wq(q) = w;
      wtau(q) = w * stabilization_tau(co.A, co.beta, nrm, problem.omega, problem.tau_scale);
      wdata(q) = (boundary && problem.boundary == BoundaryMode::dirichlet && problem.boundary_data)
                     ? w * problem.boundary_data(x)
                     : cplx(0.0);
      if (boundary && problem.boundary == BoundaryMode::vacuum) {
        const double znorm = co.z_bc.norm();
        if (!(znorm > 0.0)) {
          zero_z = true;
          wzinv(q) = 0.0;
          continue;
        }
        cplx zn(co.z_bc.real().dot(nrm), co.z_bc.imag().dot(nrm));
        const double floor = problem.z_floor * znorm;
        if (std::abs(zn) < floor) {
          zn = std::abs(zn) > 0.0 ? zn / std::abs(zn) * floor : cplx(floor);
          ++floored;
        }
        wzinv(q) = w / zn;
      }
    }
    const Eigen::MatrixXd& Z = fe.values();
    const MatrixXc Nf = weighted_product(PhiF, wq, Z);     // int phi_i zeta_k
    const MatrixXc Ntau = weighted_product(PhiF, wtau, Z); // int tau phi_i zeta_k

    for (int d = 0; d < 3; ++d) lm.C.block(d * n, off, n, k) = nrm(d) * Nf;
    lm.C.block(3 * n, off, n, k) = Ntau;
    lm.A.block(3 * n, 3 * n, n, n) -= weighted_product(PhiF, wtau, PhiF);

    const bool dirichlet = boundary && (problem.boundary == BoundaryMode::dirichlet || zero_z);
    if (dirichlet) {
      lm.dirichlet[static_cast<std::size_t>(l)] = true;
      lm.L.block(off, off, k, k) = weighted_product(Z, wq, Z);
      lm.G.segment(off, k) = Z.cast<cplx>() * wdata;
      if (problem.boundary == BoundaryMode::vacuum) ++lm.dirichlet_fallback_faces;
      continue;
    }
    for (int d = 0; d < 3; ++d) lm.B.block(off, d * n, k, n) = nrm(d) * Nf.transpose();
    lm.B.block(off, 3 * n, k, n) = -Ntau.transpose();
    lm.L.block(off, off, k, k) = weighted_product(Z, wtau, Z);
    if (boundary) {
      lm.L.block(off, off, k, k) += weighted_product(Z, wzinv, Z);
      if (floored > 0) ++lm.floored_faces;
    }
  }
  return lm;
}

EquilibratedLU::EquilibratedLU(const MatrixXc& A) {
  const Eigen::Index n = A.rows();
  row_ = Eigen::VectorXd::Ones(n);
  col_ = Eigen::VectorXd::Ones(n);
  MatrixXc S = A;
  for (int it = 0; it < 8; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = S.row(i).cwiseAbs().maxCoeff();
      if (!(m > 0.0)) throw SingularError("local matrix A_e has a zero row");
      const double f = 1.0 / std::sqrt(m);
      S.row(i) *= f;
      row_(i) *= f;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double m = S.col(j).cwiseAbs().maxCoeff();
      if (!(m > 0.0)) throw SingularError("local matrix A_e has a zero column");
      const double f = 1.0 / std::sqrt(m);
      S.col(j) *= f;
      col_(j) *= f;
    }
  }
  lu_.compute(S);
  const double rc = lu_.rcond();
  if (!(rc > 1e-13)) throw SingularError("local matrix A_e is singular (rcond " + std::to_string(rc) + ")");
}

MatrixXc EquilibratedLU::solve(const MatrixXc& b) const {
  return col_.asDiagonal() * lu_.solve(row_.asDiagonal() * b);
}

namespace {

void eliminate_dirichlet(const LocalMatrices& lm, MatrixXc& K, MatrixXc& S) {
  for (int a = 0; a < 4; ++a) {
    if (!lm.dirichlet[static_cast<std::size_t>(a)]) continue;
    const int oa = lm.face_offset[a], ka = lm.face_dofs[a];
    const VectorXc lam = lm.L.block(oa, oa, ka, ka).partialPivLu().solve(lm.G.segment(oa, ka));
    for (int b = 0; b < 4; ++b) {
      if (b == a) continue;
      const int ob = lm.face_offset[b], kb = lm.face_dofs[b];
      S.middleRows(ob, kb).colwise() -= K.block(ob, oa, kb, ka) * lam;
      K.block(ob, oa, kb, ka).setZero();
    }
  }
}

}  // namespace

CondensedContribution condense(const LocalMatrices& local) {
  const EquilibratedLU lu(local.A);
  CondensedContribution c;
  c.K = local.L - local.B * lu.solve(local.C);
  c.S = -(local.B * lu.solve(local.F));
  c.S.colwise() += local.G;
  eliminate_dirichlet(local, c.K, c.S);
  return c;
}

std::vector<std::vector<int>> face_adjacency(const Mesh& mesh) {
  std::vector<std::vector<int>> adj(mesh.num_faces());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto& cf = mesh.cell_faces(e);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        if (a != b) adj[static_cast<std::size_t>(cf[a].face)].push_back(cf[b].face);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adj;
}

CondensedSystem assemble_system(const Mesh& mesh, const Discretization& disc,
                                const ProblemSpec& problem,
                                const std::vector<std::size_t>& cell_order) {
  if (!problem.coefficients) throw InputError("problem has no coefficient function");
  CondensedSystem sys;
  sys.mesh = &mesh;
  sys.disc = disc;
  std::vector<int> sizes(mesh.num_faces());
  for (std::size_t f = 0; f < mesh.num_faces(); ++f) sizes[f] = disc.face_dofs(f);
  sys.K = BlockSparseMatrix(std::move(sizes), face_adjacency(mesh));
  sys.S = MatrixXc::Zero(disc.num_trace_dofs(), static_cast<Eigen::Index>(problem.sources.size()));
  sys.cells.resize(mesh.num_cells());

  std::vector<std::size_t> order = cell_order;
  if (order.empty()) {
    order.resize(mesh.num_cells());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  if (order.size() != mesh.num_cells()) throw InputError("cell order must list every cell once");

  for (std::size_t e : order) {
    auto lm = assemble_local(mesh, e, disc, problem);
    sys.report.floored_faces += lm.floored_faces;
    sys.report.dirichlet_fallback_faces += lm.dirichlet_fallback_faces;
    EquilibratedLU lu;
    try {
      lu = EquilibratedLU(lm.A);
    } catch (const SingularError& err) {
      throw SingularError("cell " + std::to_string(e) + ": " + err.what());
    }
    MatrixXc Ke = lm.L - lm.B * lu.solve(lm.C);
    MatrixXc Se = -(lm.B * lu.solve(lm.F));
    Se.colwise() += lm.G;
    eliminate_dirichlet(lm, Ke, Se);
    const auto& cf = mesh.cell_faces(e);
    for (int a = 0; a < 4; ++a) {
      const int fa = cf[a].face;
      const int oa = lm.face_offset[a], ka = lm.face_dofs[a];
      for (int b = 0; b < 4; ++b) {
        const int fb = cf[b].face;
        sys.K.block(fa, fb) += Ke.block(oa, lm.face_offset[b], ka, lm.face_dofs[b]);
      }
      sys.S.middleRows(disc.face_offset(static_cast<std::size_t>(fa)), ka) += Se.middleRows(oa, ka);
    }
    sys.cells[e] = CellCache{std::move(lu), std::move(lm.C), std::move(lm.F)};
  }
  if (sys.report.floored_faces > 0)
    sys.report.warnings.push_back(std::to_string(sys.report.floored_faces) +
                                  " boundary faces had |Z.n| floored");
  if (sys.report.dirichlet_fallback_faces > 0)
    sys.report.warnings.push_back(std::to_string(sys.report.dirichlet_fallback_faces) +
                                  " boundary faces have Z = 0; lambda = 0 imposed");
  return sys;
}

CondensedSystem assemble_global(const Mesh& mesh, const RadialBackground& bg,
                                const PerturbationField& pert, const SolverConfig& cfg,
                                const std::vector<GaussianSource>& sources,
                                const Discretization& disc) {
  return assemble_system(mesh, disc, make_problem(bg, pert, cfg, sources));
}

WaveField reconstruct_volume(const CondensedSystem& system, const VectorXc& lambda, int source) {
  if (lambda.size() != system.disc.num_trace_dofs()) throw DomainError("trace vector has the wrong length");
  const Mesh& mesh = *system.mesh;
  WaveField field;
  field.mesh = system.mesh;
  field.disc = system.disc;
  field.trace = lambda;
  field.volume.resize(mesh.num_cells());
  for (std::size_t e = 0; e < mesh.num_cells(); ++e) {
    const auto& cache = system.cells[e];
    VectorXc le(cache.C.cols());
    int off = 0;
    for (const auto& cf : mesh.cell_faces(e)) {
      const auto f = static_cast<std::size_t>(cf.face);
      const int k = system.disc.face_dofs(f);
      le.segment(off, k) = lambda.segment(system.disc.face_offset(f), k);
      off += k;
    }
    VectorXc rhs = -(cache.C * le);
    if (source >= 0 && source < cache.F.cols()) rhs += cache.F.col(source);
    field.volume[e] = cache.lu.solve(rhs);
  }
  return field;
}

PointValue evaluate_field(const WaveField& field, const PointLocator& locator, const Vec3& x) {
  const int e = locator.locate(x);
  if (e < 0) throw DomainError("point outside the mesh");
  return evaluate_in_cell(field, static_cast<std::size_t>(e), x);
}

PointValue evaluate_in_cell(const WaveField& field, std::size_t cell, const Vec3& x) {
  const auto geo = CellGeometry::of(*field.mesh, cell);
  const TetElement& te = tet_element(field.disc.cell_order(cell));
  const Eigen::VectorXcd phi = te.eval(geo.to_reference(x)).cast<cplx>();
  const int n = te.ndof();
  const VectorXc& U = field.volume[cell];
  PointValue v;
  for (int d = 0; d < 3; ++d) v.u(d) = phi.dot(U.segment(d * n, n));
  v.w = phi.dot(U.segment(3 * n, n));
  return v;
}

PointValue evaluate_field(const WaveField& field, const Vec3& x) {
  return evaluate_field(field, PointLocator(*field.mesh), x);
}

}  // namespace starwave
