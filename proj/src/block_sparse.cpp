#include "starwave/block_sparse.hpp"

#include <fstream>
#include <iomanip>

namespace starwave {

BlockSparseMatrix::BlockSparseMatrix(std::vector<int> block_sizes,
                                     const std::vector<std::vector<int>>& pattern)
    : sizes_(std::move(block_sizes)) {
  if (pattern.size() != sizes_.size()) throw DomainError("block pattern size mismatch");
  const int nb = static_cast<int>(sizes_.size());
  offsets_.reserve(sizes_.size() + 1);
  for (int s : sizes_) offsets_.push_back(offsets_.back() + s);
  std::size_t nval = 0;
  for (int i = 0; i < nb; ++i) {
    std::vector<int> row = pattern[static_cast<std::size_t>(i)];
    row.push_back(i);
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (int j : row) {
      if (j < 0 || j >= nb) throw DomainError("block pattern references a missing block");
      cols_.push_back(j);
      value_ptr_.push_back(nval);
      nval += static_cast<std::size_t>(sizes_[static_cast<std::size_t>(i)]) *
              static_cast<std::size_t>(sizes_[static_cast<std::size_t>(j)]);
    }
    row_ptr_.push_back(cols_.size());
  }
  values_.assign(nval, cplx(0.0));
}

std::ptrdiff_t BlockSparseMatrix::find(int i, int j) const {
  const int* b = row_begin(i);
  const int* e = row_end(i);
  const int* it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return -1;
  return it - cols_.data();
}

Eigen::Map<MatrixXc> BlockSparseMatrix::block(int i, int j) {
  const auto k = find(i, j);
  if (k < 0) throw DomainError("block (" + std::to_string(i) + ", " + std::to_string(j) + ") not in pattern");
  return {values_.data() + value_ptr_[static_cast<std::size_t>(k)], block_size(i), block_size(j)};
}

Eigen::Map<const MatrixXc> BlockSparseMatrix::block(int i, int j) const {
  const auto k = find(i, j);
  if (k < 0) throw DomainError("block (" + std::to_string(i) + ", " + std::to_string(j) + ") not in pattern");
  return {values_.data() + value_ptr_[static_cast<std::size_t>(k)], block_size(i), block_size(j)};
}

void BlockSparseMatrix::set_zero() { std::fill(values_.begin(), values_.end(), cplx(0.0)); }

MatrixXc BlockSparseMatrix::multiply(const MatrixXc& x) const {
  if (x.rows() != rows()) throw DomainError("dimension mismatch in block multiply");
  MatrixXc y = MatrixXc::Zero(rows(), x.cols());
  for (int i = 0; i < num_blocks(); ++i) {
    for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const int j = cols_[k];
      Eigen::Map<const MatrixXc> B(values_.data() + value_ptr_[k], block_size(i), block_size(j));
      y.middleRows(offset(i), block_size(i)).noalias() += B * x.middleRows(offset(j), block_size(j));
    }
  }
  return y;
}

VectorXc BlockSparseMatrix::multiply(const VectorXc& x) const {
  return multiply(MatrixXc(x)).col(0);
}

Eigen::VectorXd BlockSparseMatrix::abs_multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows());
  for (int i = 0; i < num_blocks(); ++i) {
    for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const int j = cols_[k];
      Eigen::Map<const MatrixXc> B(values_.data() + value_ptr_[k], block_size(i), block_size(j));
      y.segment(offset(i), block_size(i)).noalias() += B.cwiseAbs() * x.segment(offset(j), block_size(j));
    }
  }
  return y;
}

double BlockSparseMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

double BlockSparseMatrix::norm_inf() const {
  return abs_multiply(Eigen::VectorXd::Ones(rows())).maxCoeff();
}

Eigen::SparseMatrix<cplx> BlockSparseMatrix::to_sparse(double drop_tol) const {
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(values_.size());
  for (int i = 0; i < num_blocks(); ++i) {
    for (std::size_t k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k) {
      const int j = cols_[k];
      Eigen::Map<const MatrixXc> B(values_.data() + value_ptr_[k], block_size(i), block_size(j));
      for (Eigen::Index c = 0; c < B.cols(); ++c)
        for (Eigen::Index r = 0; r < B.rows(); ++r)
          if (std::abs(B(r, c)) > drop_tol) t.emplace_back(offset(i) + r, offset(j) + c, B(r, c));
    }
  }
  Eigen::SparseMatrix<cplx> S(rows(), rows());
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

MatrixXc BlockSparseMatrix::to_dense() const { return MatrixXc(to_sparse()); }

void BlockSparseMatrix::write_matrix_market(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  const auto S = to_sparse();
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << S.rows() << ' ' << S.cols() << ' ' << S.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int c = 0; c < S.outerSize(); ++c)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(S, c); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace starwave
