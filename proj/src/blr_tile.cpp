#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Householder>
#include <Eigen/SVD>

#include "starwave/blr.hpp"

namespace starwave {

std::string to_string(Precision p) {
  switch (p) {
    case Precision::full: return "full";
    case Precision::mid: return "mid";
    case Precision::low: return "low";
  }
  return "?";
}

LowRankBlock::LowRankBlock(const MatrixXc& X, std::vector<double> sigma, const MatrixXc& Yhat)
    : rows_(static_cast<int>(X.rows())), cols_(static_cast<int>(Yhat.rows())), sigma_(std::move(sigma)) {
  if (X.cols() != static_cast<Eigen::Index>(sigma_.size()) || Yhat.cols() != X.cols())
    throw DomainError("low-rank factors have inconsistent rank");
  tags_.assign(sigma_.size(), Precision::full);
  xf_ = X;
  yf_ = Yhat;
}

int LowRankBlock::count(Precision p) const {
  return static_cast<int>(std::count(tags_.begin(), tags_.end(), p));
}

MatrixXc LowRankBlock::gather(const MatrixXc& f, const MatrixXcf& m, const MatrixXh& lre,
                              const MatrixXh& lim, int n) const {
  MatrixXc out(n, rank());
  const Eigen::Index nf = f.cols(), nm = m.cols(), nl = lre.cols();
  if (nf) out.leftCols(nf) = f;
  if (nm) out.middleCols(nf, nm) = m.cast<cplx>();
  if (nl) {
    out.rightCols(nl).real() = lre.cast<double>();
    out.rightCols(nl).imag() = lim.cast<double>();
  }
  return out;
}

MatrixXc LowRankBlock::X() const { return gather(xf_, xm_, xl_re_, xl_im_, rows_); }
MatrixXc LowRankBlock::Yhat() const { return gather(yf_, ym_, yl_re_, yl_im_, cols_); }

MatrixXc LowRankBlock::Y() const {
  MatrixXc y = Yhat();
  for (int i = 0; i < rank(); ++i) y.col(i) *= sigma_[static_cast<std::size_t>(i)];
  return y;
}

MatrixXc LowRankBlock::to_dense() const {
  if (rank() == 0) return MatrixXc::Zero(rows_, cols_);
  return X() * Y().transpose();
}

double LowRankBlock::weighted_entries(const PrecisionWeights& w) const {
  double e = 0.0;
  for (Precision t : tags_) e += w.of(t) * (rows_ + cols_);
  return e;
}

std::size_t LowRankBlock::bytes() const {
  std::size_t b = sigma_.size() * sizeof(double);
  const auto len = static_cast<std::size_t>(rows_ + cols_);
  for (Precision t : tags_) b += len * (t == Precision::full ? 16 : t == Precision::mid ? 8 : 4);
  return b;
}

void LowRankBlock::store(const std::vector<Precision>& tags) {
  if (tags.size() != sigma_.size()) throw DomainError("one precision tag per vector is required");
  if (!std::is_sorted(tags.begin(), tags.end())) throw DomainError("precision tags must be ordered full, mid, low");
  const MatrixXc x = X(), y = Yhat();
  tags_ = tags;
  const Eigen::Index nf = count(Precision::full), nm = count(Precision::mid), nl = count(Precision::low);
  xf_ = x.leftCols(nf);
  yf_ = y.leftCols(nf);
  xm_ = x.middleCols(nf, nm).cast<std::complex<float>>();
  ym_ = y.middleCols(nf, nm).cast<std::complex<float>>();
  xl_re_ = x.rightCols(nl).real().cast<Eigen::half>();
  xl_im_ = x.rightCols(nl).imag().cast<Eigen::half>();
  yl_re_ = y.rightCols(nl).real().cast<Eigen::half>();
  yl_im_ = y.rightCols(nl).imag().cast<Eigen::half>();
}

std::size_t Tile::entries() const {
  return low_rank ? lr.entries() : static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
}

double Tile::weighted_entries(const PrecisionWeights& w) const {
  return low_rank ? lr.weighted_entries(w) : static_cast<double>(entries());
}

std::size_t Tile::bytes() const { return low_rank ? lr.bytes() : entries() * sizeof(cplx); }

void Tile::subtract_product(const MatrixXc& x, Eigen::Ref<MatrixXc> y) const {
  if (!low_rank) {
    y.noalias() -= dense * x;
  } else if (lr.rank() > 0) {
    const MatrixXc t = lr.Y().transpose() * x;
    y.noalias() -= lr.X() * t;
  }
}

void Tile::subtract_adjoint_product(const MatrixXc& x, Eigen::Ref<MatrixXc> y) const {
  if (!low_rank) {
    y.noalias() -= dense.adjoint() * x;
  } else if (lr.rank() > 0) {
    const MatrixXc t = lr.X().adjoint() * x;
    y.noalias() -= lr.Y().conjugate() * t;
  }
}

Tile compress_tile(const MatrixXc& tile, double eps, double* flops) {
  Tile out;
  out.rows = static_cast<int>(tile.rows());
  out.cols = static_cast<int>(tile.cols());
  const Eigen::Index m = tile.rows(), n = tile.cols();
  const double norm = tile.norm();
  double cost = 0.0;
  auto finish = [&](Tile&& t) {
    if (flops) *flops += cost;
    return std::move(t);
  };
  if (norm == 0.0) {
    out.low_rank = true;
    out.lr = LowRankBlock(out.rows, out.cols);
    return finish(std::move(out));
  }
  // Largest rank that still saves storage.
  const Eigen::Index kmax = m * n > 0 ? (m * n - 1) / (m + n) : 0;
  const double tol = eps * norm;

  // Column-pivoted Householder QR, stopped once ||R(k:, k:)||_F <= tol.
  MatrixXc A = tile;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Eigen::VectorXd vn1(n), vn2(n);
  for (Eigen::Index c = 0; c < n; ++c) vn1(c) = vn2(c) = A.col(c).norm();
  VectorXc taus(std::min(m, n));
  VectorXc work(n);
  const double tol3z = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::Index k = -1;
  for (Eigen::Index j = 0; j <= kmax; ++j) {
    const double rho = vn1.tail(n - j).norm();
    if (rho <= tol) {
      k = j;
      break;
    }
    if (j == kmax) break;
    Eigen::Index pc;
    vn1.tail(n - j).maxCoeff(&pc);
    pc += j;
    if (pc != j) {
      A.col(j).swap(A.col(pc));
      std::swap(perm[static_cast<std::size_t>(j)], perm[static_cast<std::size_t>(pc)]);
      std::swap(vn1(j), vn1(pc));
      std::swap(vn2(j), vn2(pc));
    }
    double beta;
    A.col(j).tail(m - j).makeHouseholderInPlace(taus(j), beta);
    A(j, j) = beta;
    if (j + 1 < n)
      A.block(j, j + 1, m - j, n - j - 1).applyHouseholderOnTheLeft(A.col(j).tail(m - j - 1), taus(j), work.data());
    cost += 4.0 * static_cast<double>(m - j) * static_cast<double>(n - j);
    for (Eigen::Index c = j + 1; c < n; ++c) {
      if (vn1(c) == 0.0) continue;
      const double t = std::max(0.0, 1.0 - std::norm(A(j, c)) / (vn1(c) * vn1(c)));
      if (t * (vn1(c) / vn2(c)) * (vn1(c) / vn2(c)) <= tol3z) {
        vn1(c) = vn2(c) = j + 1 < m ? A.col(c).tail(m - j - 1).norm() : 0.0;
        cost += 2.0 * static_cast<double>(m - j - 1);
      } else {
        vn1(c) *= std::sqrt(t);
      }
    }
  }
  if (k < 0) {
    out.dense = tile;
    return finish(std::move(out));
  }
  out.low_rank = true;
  if (k == 0) {
    out.lr = LowRankBlock(out.rows, out.cols);
    return finish(std::move(out));
  }
  const MatrixXc V = A.leftCols(k);
  const VectorXc tk = taus.head(k).conjugate();
  Eigen::HouseholderSequence<MatrixXc, VectorXc> H(V, tk);
  H.setLength(k);
  const MatrixXc Q = H * MatrixXc::Identity(m, k);
  MatrixXc Rk = MatrixXc::Zero(k, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const Eigen::Index len = std::min(c + 1, k);
    Rk.col(perm[static_cast<std::size_t>(c)]).head(len) = A.col(c).head(len);
  }
  Eigen::JacobiSVD<MatrixXc> svd(Rk, Eigen::ComputeThinU | Eigen::ComputeThinV);
  std::vector<double> sigma(svd.singularValues().data(), svd.singularValues().data() + k);
  out.lr = LowRankBlock(Q * svd.matrixU(), std::move(sigma), svd.matrixV().conjugate());
  // Thin Q, R-SVD of the k x n factor, and the product Q U.
  const double kd = static_cast<double>(k), md = static_cast<double>(m), nd = static_cast<double>(n);
  for (Eigen::Index j = 0; j < k; ++j) cost += 4.0 * static_cast<double>(m - j) * static_cast<double>(k - j);
  cost += 6.0 * nd * kd * kd + 20.0 * kd * kd * kd + 2.0 * md * kd * kd;
  return finish(std::move(out));
}

std::vector<Precision> precision_tags(const std::vector<double>& sigma, double eps, double u_mid,
                                      double u_low) {
  std::vector<Precision> tags(sigma.size(), Precision::full);
  if (sigma.empty() || sigma.front() <= 0.0) return tags;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double r = sigma[i] / sigma.front();
    tags[i] = r > eps / u_mid ? Precision::full : r > eps / u_low ? Precision::mid : Precision::low;
  }
  return tags;
}

LowRankBlock demote_precision(LowRankBlock block, double eps, double u_mid, double u_low) {
  block.store(precision_tags(block.sigma(), eps, u_mid, u_low));
  return block;
}

}  // namespace starwave
