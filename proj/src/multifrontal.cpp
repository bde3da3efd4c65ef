#include <chrono>
#include <cmath>
#include <limits>

#include "starwave/blr.hpp"

namespace starwave {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Ruiz equilibration of the block matrix: rows and columns scaled until
/// their max-norms approach one.
void equilibrate(const BlockSparseMatrix& K, Eigen::VectorXd& r, Eigen::VectorXd& c, int iterations = 10) {
  const int n = K.rows();
  r = Eigen::VectorXd::Ones(n);
  c = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd rmax = Eigen::VectorXd::Zero(n), cmax = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < K.num_blocks(); ++i)
      for (const int* j = K.row_begin(i); j != K.row_end(i); ++j) {
        const auto B = K.block(i, *j);
        const int oi = K.offset(i), oj = K.offset(*j);
        for (Eigen::Index q = 0; q < B.cols(); ++q)
          for (Eigen::Index p = 0; p < B.rows(); ++p) {
            const double v = std::abs(B(p, q)) * r(oi + p) * c(oj + q);
            rmax(oi + p) = std::max(rmax(oi + p), v);
            cmax(oj + q) = std::max(cmax(oj + q), v);
          }
      }
    for (int i = 0; i < n; ++i) {
      if (rmax(i) > 0) r(i) /= std::sqrt(rmax(i));
      if (cmax(i) > 0) c(i) /= std::sqrt(cmax(i));
    }
  }
}

struct Counters {
  double flops = 0.0;
  double compression = 0.0;
  long fallbacks = 0;
  long failures = 0;
};

/// Operand view of a tile for the trailing update, promoted once per panel.
struct Operand {
  bool low_rank = false;
  const MatrixXc* dense = nullptr;
  MatrixXc X, Y;
  Eigen::Index k = 0;
};

Operand make_operand(const Tile& t) {
  Operand o;
  o.low_rank = t.low_rank;
  if (t.low_rank) {
    o.X = t.lr.X();
    o.Y = t.lr.Y();
    o.k = t.lr.rank();
  } else {
    o.dense = &t.dense;
  }
  return o;
}

/// F_ij -= L U with the cheapest association; returns the flop count.
double update_tile(Eigen::Block<MatrixXc> F, const Operand& L, const Operand& U, Eigen::Index w) {
  const Eigen::Index r = F.rows(), c = F.cols();
  if (!L.low_rank && !U.low_rank) {
    F.noalias() -= (*L.dense) * (*U.dense);
    return 2.0 * r * w * c;
  }
  if (L.low_rank && L.k == 0) return 0.0;
  if (U.low_rank && U.k == 0) return 0.0;
  if (L.low_rank && !U.low_rank) {
    const MatrixXc t = L.Y.transpose() * (*U.dense);  // k x c
    F.noalias() -= L.X * t;
    return 2.0 * L.k * w * c + 2.0 * r * L.k * c;
  }
  if (!L.low_rank) {
    const MatrixXc t = (*L.dense) * U.X;  // r x k
    F.noalias() -= t * U.Y.transpose();
    return 2.0 * r * w * U.k + 2.0 * r * U.k * c;
  }
  const MatrixXc M = L.Y.transpose() * U.X;  // kL x kU
  double f = 2.0 * L.k * w * U.k;
  const double left = 2.0 * r * L.k * U.k + 2.0 * r * U.k * c;
  const double right = 2.0 * L.k * U.k * c + 2.0 * r * L.k * c;
  if (left <= right) {
    const MatrixXc t = L.X * M;
    F.noalias() -= t * U.Y.transpose();
    f += left;
  } else {
    const MatrixXc t = M * U.Y.transpose();
    F.noalias() -= L.X * t;
    f += right;
  }
  return f;
}

Tile make_tile(const MatrixXc& block, const BlrOptions& opt, Counters& cnt) {
  if (!opt.eps) {
    Tile t;
    t.rows = static_cast<int>(block.rows());
    t.cols = static_cast<int>(block.cols());
    t.dense = block;
    return t;
  }
  return compress_tile(block, *opt.eps, &cnt.compression);
}

/// Partial BLR LU of a front (factor, solve, compress, update per panel).
void factor_front(MatrixXc& F, FrontFactors& out, const BlrOptions& opt, Counters& cnt) {
  const int nf = static_cast<int>(F.rows());
  const int npiv = out.npiv;
  const int b = std::max(1, opt.tile_size);
  out.bounds.clear();
  for (int s = 0; s < npiv; s += b) out.bounds.push_back(s);
  out.panels = static_cast<int>(out.bounds.size());
  for (int s = npiv; s < nf; s += b) out.bounds.push_back(s);
  out.bounds.push_back(nf);
  const int T = static_cast<int>(out.bounds.size()) - 1;
  out.diag.resize(static_cast<std::size_t>(out.panels));
  out.row_swaps.assign(static_cast<std::size_t>(out.panels), {});
  out.col_swaps.assign(static_cast<std::size_t>(out.panels), {});
  out.L.assign(static_cast<std::size_t>(out.panels), {});
  out.U.assign(static_cast<std::size_t>(out.panels), {});
  const double u = opt.pivot_threshold;

  for (int p = 0; p < out.panels; ++p) {
    const int a = out.bounds[static_cast<std::size_t>(p)];
    const int e = out.bounds[static_cast<std::size_t>(p) + 1];
    const int w = e - a;
    auto& rs = out.row_swaps[static_cast<std::size_t>(p)];
    auto& cs = out.col_swaps[static_cast<std::size_t>(p)];

    // Factor the tall panel F(a:nf, a:e).
    for (int k = a; k < e; ++k) {
      auto best_in_column = [&](int col, int& row, double& ratio) {
        Eigen::Index r;
        const double fs = F.col(col).segment(k, npiv - k).cwiseAbs().maxCoeff(&r);
        const double all = F.col(col).tail(nf - k).cwiseAbs().maxCoeff();
        row = k + static_cast<int>(r);
        ratio = all > 0 ? fs / all : 0.0;
      };
      int r;
      double ratio;
      best_in_column(k, r, ratio);
      if (ratio < u) {
        ++cnt.fallbacks;
        int bc = k, br = r;
        double bratio = ratio;
        for (int c = k + 1; c < e; ++c) {
          int rr;
          double q;
          best_in_column(c, rr, q);
          if (q > bratio) {
            bratio = q;
            bc = c;
            br = rr;
          }
        }
        if (bratio < u) ++cnt.failures;
        if (bc != k) {
          F.col(k).swap(F.col(bc));
          cs.emplace_back(k, bc);
        }
        r = br;
      }
      if (r != k) {
        F.row(k).tail(nf - a).swap(F.row(r).tail(nf - a));
        rs.emplace_back(k, r);
      }
      const cplx piv = F(k, k);
      if (piv == cplx(0.0)) throw SingularError("zero pivot in front factorization (matrix is singular)");
      const int below = nf - k - 1;
      F.col(k).tail(below) /= piv;
      F.block(k + 1, k + 1, below, e - k - 1).noalias() -=
          F.col(k).tail(below) * F.row(k).segment(k + 1, e - k - 1);
      cnt.flops += below + 2.0 * below * (e - k - 1);
    }
    out.diag[static_cast<std::size_t>(p)] = F.block(a, a, w, w);

    // U12 = L11^-1 F12.
    if (e < nf) {
      F.block(a, e, w, nf - e) =
          F.block(a, a, w, w).triangularView<Eigen::UnitLower>().solve(F.block(a, e, w, nf - e));
      cnt.flops += static_cast<double>(w) * (w - 1) * (nf - e);
    }

    // Compress L and U tiles.
    auto& Lt = out.L[static_cast<std::size_t>(p)];
    auto& Ut = out.U[static_cast<std::size_t>(p)];
    for (int t = p + 1; t < T; ++t) {
      const int t0 = out.bounds[static_cast<std::size_t>(t)];
      const int h = out.bounds[static_cast<std::size_t>(t) + 1] - t0;
      Lt.push_back(make_tile(F.block(t0, a, h, w), opt, cnt));
      Ut.push_back(make_tile(F.block(a, t0, w, h), opt, cnt));
    }

    // Trailing update.
    if (e == nf) continue;
    if (!opt.eps) {
      F.block(e, e, nf - e, nf - e).noalias() -= F.block(e, a, nf - e, w) * F.block(a, e, w, nf - e);
      cnt.flops += 2.0 * (nf - e) * static_cast<double>(w) * (nf - e);
      continue;
    }
    std::vector<Operand> Lo, Uo;
    for (const auto& t : Lt) Lo.push_back(make_operand(t));
    for (const auto& t : Ut) Uo.push_back(make_operand(t));
    for (int i = p + 1; i < T; ++i) {
      const int i0 = out.bounds[static_cast<std::size_t>(i)];
      const int hi = out.bounds[static_cast<std::size_t>(i) + 1] - i0;
      for (int j = p + 1; j < T; ++j) {
        const int j0 = out.bounds[static_cast<std::size_t>(j)];
        const int hj = out.bounds[static_cast<std::size_t>(j) + 1] - j0;
        cnt.flops += update_tile(F.block(i0, j0, hi, hj), Lo[static_cast<std::size_t>(i - p - 1)],
                                 Uo[static_cast<std::size_t>(j - p - 1)], w);
      }
    }
    // Storage precision only: updates above used the double-precision vectors.
    if (opt.mixed_precision)
      for (auto* tiles : {&Lt, &Ut})
        for (auto& t : *tiles)
          if (t.low_rank) t.lr = demote_precision(std::move(t.lr), *opt.eps, opt.u_mid, opt.u_low);
  }
}

/// Scalar dof list of a set of block nodes.
void append_dofs(const BlockSparseMatrix& K, const std::vector<int>& nodes, std::vector<int>& dofs) {
  for (int v : nodes)
    for (int q = 0; q < K.block_size(v); ++q) dofs.push_back(K.offset(v) + q);
}

void apply_swaps(Eigen::Ref<MatrixXc> y, const std::vector<std::pair<int, int>>& swaps, bool reverse) {
  if (reverse) {
    for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) y.row(it->first).swap(y.row(it->second));
  } else {
    for (const auto& [i, j] : swaps) y.row(i).swap(y.row(j));
  }
}

MatrixXc gather(const MatrixXc& y, const std::vector<int>& dofs) {
  MatrixXc out(static_cast<Eigen::Index>(dofs.size()), y.cols());
  for (std::size_t i = 0; i < dofs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = y.row(dofs[i]);
  return out;
}

void scatter(MatrixXc& y, const std::vector<int>& dofs, const MatrixXc& local, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) y.row(dofs[i]) = local.row(static_cast<Eigen::Index>(i));
}

}  // namespace

BlrFactorization factorize(const BlockSparseMatrix& K, const EliminationPlan& plan, const BlrOptions& opt) {
  const auto t0 = Clock::now();
  if (opt.eps && !(*opt.eps > 0.0 && *opt.eps < 1.0)) throw InputError("eps_blr must lie in (0, 1)");
  if (opt.mixed_precision && !opt.eps) throw InputError("mixed precision requires a BLR threshold");
  if (static_cast<int>(plan.block_size.size()) != K.num_blocks())
    throw DomainError("elimination plan does not match the matrix");

  BlrFactorization f;
  f.n_ = K.rows();
  f.plan_ = plan;
  f.opt_ = opt;
  if (opt.scaling) {
    equilibrate(K, f.row_scale_, f.col_scale_);
  } else {
    f.row_scale_ = Eigen::VectorXd::Ones(K.rows());
    f.col_scale_ = Eigen::VectorXd::Ones(K.rows());
  }
  const auto& rsc = f.row_scale_;
  const auto& csc = f.col_scale_;

  Counters cnt;
  const int nfronts = static_cast<int>(plan.fronts.size());
  f.fronts_.resize(static_cast<std::size_t>(nfronts));
  std::vector<MatrixXc> cb(static_cast<std::size_t>(nfronts));
  std::vector<int> dof_loc(static_cast<std::size_t>(K.rows()), -1);

  for (int s = 0; s < nfronts; ++s) {
    const Front& fr = plan.fronts[static_cast<std::size_t>(s)];
    FrontFactors& ff = f.fronts_[static_cast<std::size_t>(s)];
    append_dofs(K, fr.pivots, ff.dofs);
    append_dofs(K, fr.cb, ff.dofs);
    ff.npiv = static_cast<int>(fr.npiv_scalar);
    const int nf = static_cast<int>(ff.dofs.size());
    for (int i = 0; i < nf; ++i) dof_loc[static_cast<std::size_t>(ff.dofs[static_cast<std::size_t>(i)])] = i;
    f.stats_.max_front = std::max<long>(f.stats_.max_front, nf);

    MatrixXc F = MatrixXc::Zero(nf, nf);
    // Original entries whose first eliminated index is a pivot of this front.
    for (int j : fr.pivots) {
      const int pj = plan.position[static_cast<std::size_t>(j)];
      const int lj = dof_loc[static_cast<std::size_t>(K.offset(j))];
      const int sj = K.block_size(j);
      for (const int* ip = K.row_begin(j); ip != K.row_end(j); ++ip) {
        const int i = *ip;
        if (plan.position[static_cast<std::size_t>(i)] < pj) continue;
        const int li = dof_loc[static_cast<std::size_t>(K.offset(i))];
        const int si = K.block_size(i);
        const auto Bji = K.block(j, i);
        F.block(lj, li, sj, si) += rsc.segment(K.offset(j), sj).asDiagonal() * Bji *
                                   csc.segment(K.offset(i), si).asDiagonal();
        if (i != j) {
          const auto Bij = K.block(i, j);
          F.block(li, lj, si, sj) += rsc.segment(K.offset(i), si).asDiagonal() * Bij *
                                     csc.segment(K.offset(j), sj).asDiagonal();
        }
      }
    }
    // Extend-add of the children's contribution blocks.
    for (int c : fr.children) {
      const FrontFactors& cf = f.fronts_[static_cast<std::size_t>(c)];
      const MatrixXc& C = cb[static_cast<std::size_t>(c)];
      std::vector<int> idx(static_cast<std::size_t>(C.rows()));
      for (Eigen::Index q = 0; q < C.rows(); ++q)
        idx[static_cast<std::size_t>(q)] = dof_loc[static_cast<std::size_t>(cf.dofs[static_cast<std::size_t>(cf.npiv + q)])];
      for (Eigen::Index col = 0; col < C.cols(); ++col) {
        const int lc = idx[static_cast<std::size_t>(col)];
        for (Eigen::Index row = 0; row < C.rows(); ++row) F(idx[static_cast<std::size_t>(row)], lc) += C(row, col);
      }
      cb[static_cast<std::size_t>(c)].resize(0, 0);
    }
    if (opt.eps && nf < opt.min_blr_front) {
      BlrOptions dense = opt;
      dense.eps.reset();
      factor_front(F, ff, dense, cnt);
    } else {
      factor_front(F, ff, opt, cnt);
    }
    cb[static_cast<std::size_t>(s)] = F.bottomRightCorner(nf - ff.npiv, nf - ff.npiv);
    for (int d : ff.dofs) dof_loc[static_cast<std::size_t>(d)] = -1;
  }

  FactorStats& st = f.stats_;
  st.full_rank_flops = plan.predicted_flops;
  st.full_rank_entries = plan.predicted_entries;
  st.compression_flops = cnt.compression;
  st.blr_flops = cnt.flops + cnt.compression;
  st.pivot_fallbacks = cnt.fallbacks;
  st.threshold_failures = cnt.failures;
  st.num_fronts = nfronts;
  const PrecisionWeights w1{}, w2{1.0, 0.75, 0.5};
  for (const auto& ff : f.fronts_) {
    for (const auto& d : ff.diag) {
      st.blr_entries += static_cast<double>(d.size());
      st.mp_entries += static_cast<double>(d.size());
      st.mp_entries_alt += static_cast<double>(d.size());
      st.factor_bytes += static_cast<std::size_t>(d.size()) * sizeof(cplx);
    }
    for (const auto* group : {&ff.L, &ff.U})
      for (const auto& tiles : *group)
        for (const auto& t : tiles) {
          st.blr_entries += static_cast<double>(t.entries());
          st.mp_entries += t.weighted_entries(w1);
          st.mp_entries_alt += t.weighted_entries(w2);
          st.factor_bytes += t.bytes();
          if (t.low_rank) {
            ++st.lowrank_tiles;
            st.vectors_full += t.lr.count(Precision::full);
            st.vectors_mid += t.lr.count(Precision::mid);
            st.vectors_low += t.lr.count(Precision::low);
          } else {
            ++st.dense_tiles;
          }
        }
  }
  st.factor_seconds = seconds_since(t0);
  return f;
}

BlrFactorization factorize(const BlockSparseMatrix& K, const BlrOptions& opt) {
  const auto t0 = Clock::now();
  const BlockGraph g = build_block_graph(K);
  const auto perm = reorder(g, opt.ordering);
  const EliminationPlan plan = symbolic_factorize(g, perm, opt.nemin);
  const double analysis = seconds_since(t0);
  BlrFactorization f = factorize(K, plan, opt);
  f.stats_.analysis_seconds = analysis;
  return f;
}

MatrixXc BlrFactorization::solve(const MatrixXc& b) const {
  if (b.rows() != n_) throw DomainError("right-hand side has the wrong number of rows");
  MatrixXc y = row_scale_.asDiagonal() * b;
  // Forward: L z = P y, fronts in postorder.
  for (const auto& ff : fronts_) {
    MatrixXc yl = gather(y, ff.dofs);
    for (int p = 0; p < ff.panels; ++p) {
      const int a = ff.bounds[static_cast<std::size_t>(p)];
      const int w = ff.bounds[static_cast<std::size_t>(p) + 1] - a;
      apply_swaps(yl, ff.row_swaps[static_cast<std::size_t>(p)], false);
      ff.diag[static_cast<std::size_t>(p)].triangularView<Eigen::UnitLower>().solveInPlace(yl.middleRows(a, w));
      const MatrixXc seg = yl.middleRows(a, w);
      const auto& Lt = ff.L[static_cast<std::size_t>(p)];
      for (std::size_t t = 0; t < Lt.size(); ++t) {
        const int r0 = ff.bounds[static_cast<std::size_t>(p) + 1 + t];
        Lt[t].subtract_product(seg, yl.middleRows(r0, Lt[t].rows));
      }
    }
    scatter(y, ff.dofs, yl, ff.dofs.size());
  }
  // Backward: U x = z, fronts in reverse postorder.
  for (auto it = fronts_.rbegin(); it != fronts_.rend(); ++it) {
    const auto& ff = *it;
    MatrixXc xl = gather(y, ff.dofs);
    for (int p = ff.panels - 1; p >= 0; --p) {
      const int a = ff.bounds[static_cast<std::size_t>(p)];
      const int w = ff.bounds[static_cast<std::size_t>(p) + 1] - a;
      const auto& Ut = ff.U[static_cast<std::size_t>(p)];
      for (std::size_t t = 0; t < Ut.size(); ++t) {
        const int c0 = ff.bounds[static_cast<std::size_t>(p) + 1 + t];
        Ut[t].subtract_product(xl.middleRows(c0, Ut[t].cols), xl.middleRows(a, w));
      }
      ff.diag[static_cast<std::size_t>(p)].triangularView<Eigen::Upper>().solveInPlace(xl.middleRows(a, w));
      for (auto s = ff.col_swaps[static_cast<std::size_t>(p)].rbegin(); s != ff.col_swaps[static_cast<std::size_t>(p)].rend(); ++s)
        xl.row(s->first).swap(xl.row(s->second));
    }
    scatter(y, ff.dofs, xl, static_cast<std::size_t>(ff.npiv));
  }
  return col_scale_.asDiagonal() * y;
}

MatrixXc BlrFactorization::solve_adjoint(const MatrixXc& b) const {
  if (b.rows() != n_) throw DomainError("right-hand side has the wrong number of rows");
  MatrixXc y = col_scale_.asDiagonal() * b;
  // U^H v = Q^T y, fronts in postorder.
  for (const auto& ff : fronts_) {
    MatrixXc yl = gather(y, ff.dofs);
    for (int p = 0; p < ff.panels; ++p) {
      const int a = ff.bounds[static_cast<std::size_t>(p)];
      const int w = ff.bounds[static_cast<std::size_t>(p) + 1] - a;
      for (const auto& [i, j] : ff.col_swaps[static_cast<std::size_t>(p)]) yl.row(i).swap(yl.row(j));
      ff.diag[static_cast<std::size_t>(p)].triangularView<Eigen::Upper>().adjoint().solveInPlace(yl.middleRows(a, w));
      const MatrixXc seg = yl.middleRows(a, w);
      const auto& Ut = ff.U[static_cast<std::size_t>(p)];
      for (std::size_t t = 0; t < Ut.size(); ++t) {
        const int c0 = ff.bounds[static_cast<std::size_t>(p) + 1 + t];
        Ut[t].subtract_adjoint_product(seg, yl.middleRows(c0, Ut[t].cols));
      }
    }
    scatter(y, ff.dofs, yl, ff.dofs.size());
  }
  // L^H (P x) = v, fronts in reverse postorder.
  for (auto it = fronts_.rbegin(); it != fronts_.rend(); ++it) {
    const auto& ff = *it;
    MatrixXc xl = gather(y, ff.dofs);
    for (int p = ff.panels - 1; p >= 0; --p) {
      const int a = ff.bounds[static_cast<std::size_t>(p)];
      const int w = ff.bounds[static_cast<std::size_t>(p) + 1] - a;
      const auto& Lt = ff.L[static_cast<std::size_t>(p)];
      for (std::size_t t = 0; t < Lt.size(); ++t) {
        const int r0 = ff.bounds[static_cast<std::size_t>(p) + 1 + t];
        Lt[t].subtract_adjoint_product(xl.middleRows(r0, Lt[t].rows), xl.middleRows(a, w));
      }
      ff.diag[static_cast<std::size_t>(p)].triangularView<Eigen::UnitLower>().adjoint().solveInPlace(xl.middleRows(a, w));
      apply_swaps(xl, ff.row_swaps[static_cast<std::size_t>(p)], true);
    }
    scatter(y, ff.dofs, xl, static_cast<std::size_t>(ff.npiv));
  }
  return row_scale_.asDiagonal() * y;
}

double backward_error(const BlockSparseMatrix& K, const MatrixXc& x, const MatrixXc& b) {
  if (x.rows() != K.rows() || b.rows() != K.rows() || x.cols() != b.cols())
    throw DomainError("backward_error: dimension mismatch");
  const MatrixXc r = b - K.multiply(x);
  const Eigen::VectorXd row_sums = K.abs_multiply(Eigen::VectorXd::Ones(K.rows()));
  const double n = static_cast<double>(K.rows());
  double worst = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Eigen::VectorXd ax = K.abs_multiply(x.col(c).cwiseAbs());
    const double xmax = x.col(c).cwiseAbs().maxCoeff();
    double w1 = 0.0, w2 = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      const double num = std::abs(r(i, c));
      const double bi = std::abs(b(i, c));
      const double den = ax(i) + bi;
      const double tau = 1000.0 * n * std::numeric_limits<double>::epsilon() * (row_sums(i) * xmax + bi);
      if (den > tau) {
        w1 = std::max(w1, num / den);
      } else {
        const double den2 = ax(i) + row_sums(i) * xmax;
        if (den2 > 0) {
          w2 = std::max(w2, num / den2);
        } else if (num > 0) {
          return std::numeric_limits<double>::infinity();
        }
      }
    }
    worst = std::max(worst, w1 + w2);
  }
  return worst;
}

double condition_estimate(const BlockSparseMatrix& K, const BlrFactorization& factors) {
  // ||K^-1||_inf = ||K^-H||_1; B = K^-H is applied by the adjoint solve.
  const Eigen::Index n = K.rows();
  if (n == 0) return 0.0;
  auto norm1 = [](const VectorXc& v) { return v.cwiseAbs().sum(); };
  VectorXc x = VectorXc::Constant(n, cplx(1.0 / static_cast<double>(n)));
  double est = 0.0;
  for (int it = 0; it < 5; ++it) {
    const VectorXc y = factors.solve_adjoint(x);
    const double e = norm1(y);
    if (it > 0 && e <= est) break;
    est = e;
    VectorXc xi(n);
    for (Eigen::Index i = 0; i < n; ++i) xi(i) = std::abs(y(i)) > 0 ? y(i) / std::abs(y(i)) : cplx(1.0);
    const VectorXc z = factors.solve(xi);
    Eigen::Index j;
    const double zmax = z.cwiseAbs().maxCoeff(&j);
    if (it > 0 && zmax <= std::real(z.dot(x))) break;
    x.setZero();
    x(j) = 1.0;
  }
  VectorXc alt(n);
  for (Eigen::Index i = 0; i < n; ++i)
    alt(i) = (i % 2 ? -1.0 : 1.0) * (1.0 + static_cast<double>(i) / std::max<double>(1.0, static_cast<double>(n - 1)));
  est = std::max(est, 2.0 * norm1(factors.solve_adjoint(alt)) / (3.0 * static_cast<double>(n)));
  return K.norm_inf() * est;
}

nlohmann::json SolveStats::to_json() const {
  nlohmann::json j;
  j["ordering"] = ordering;
  j["eps_blr"] = eps ? nlohmann::json(*eps) : nlohmann::json("full_rank");
  j["mixed_precision"] = mixed_precision;
  j["n"] = n;
  j["num_blocks"] = num_blocks;
  j["block_graph_edges"] = block_edges;
  j["scalar_graph_edges"] = scalar_edges;
  j["n_op_pct"] = factor.n_op_pct();
  j["n_entries_pct"] = factor.n_entries_pct();
  j["n_entries_pct_mp"] = factor.n_entries_pct_mp();
  j["n_entries_pct_mp_alt"] = factor.n_entries_pct_mp_alt();
  j["full_rank_flops"] = factor.full_rank_flops;
  j["blr_flops"] = factor.blr_flops;
  j["compression_flops"] = factor.compression_flops;
  j["full_rank_entries"] = factor.full_rank_entries;
  j["blr_entries"] = factor.blr_entries;
  j["factor_memory"] = factor.factor_bytes;
  j["lowrank_tiles"] = factor.lowrank_tiles;
  j["dense_tiles"] = factor.dense_tiles;
  j["vectors"] = {{"full", factor.vectors_full}, {"mid", factor.vectors_mid}, {"low", factor.vectors_low}};
  j["pivot_fallbacks"] = factor.pivot_fallbacks;
  j["threshold_failures"] = factor.threshold_failures;
  j["num_fronts"] = factor.num_fronts;
  j["max_front"] = factor.max_front;
  j["cond"] = cond;
  j["bwd"] = bwd;
  j["timings"] = {{"analysis", factor.analysis_seconds},
                  {"factorization", factor.factor_seconds},
                  {"solve", solve_seconds}};
  return j;
}

SolveResult solve_system(const BlockSparseMatrix& K, const MatrixXc& b, const BlrOptions& opt,
                         bool estimate_condition) {
  SolveResult res;
  const BlockGraph g = build_block_graph(K);
  const BlrFactorization f = factorize(K, opt);
  const auto t0 = Clock::now();
  res.x = f.solve(b);
  res.stats.solve_seconds = seconds_since(t0);
  res.stats.ordering = to_string(opt.ordering);
  res.stats.eps = opt.eps;
  res.stats.mixed_precision = opt.mixed_precision;
  res.stats.n = K.rows();
  res.stats.num_blocks = K.num_blocks();
  res.stats.block_edges = g.num_edges();
  res.stats.scalar_edges = g.scalar_edges();
  res.stats.factor = f.stats();
  res.stats.bwd = backward_error(K, res.x, b);
  res.stats.cond = estimate_condition ? condition_estimate(K, f) : std::numeric_limits<double>::quiet_NaN();
  return res;
}

}  // namespace starwave
