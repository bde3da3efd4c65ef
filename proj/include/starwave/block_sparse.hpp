#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "starwave/common.hpp"

namespace starwave {

/// Square sparse matrix with a block pattern: block row/column i covers the
/// scalar range [offset(i), offset(i) + size(i)). Blocks are dense,
/// column-major, and stored row by row with sorted column indices.
class BlockSparseMatrix {
 public:
  BlockSparseMatrix() = default;

  /// pattern[i] lists the block columns of block row i (any order, may omit i).
  BlockSparseMatrix(std::vector<int> block_sizes, const std::vector<std::vector<int>>& pattern);

  int num_blocks() const { return static_cast<int>(sizes_.size()); }
  int block_size(int i) const { return sizes_[static_cast<std::size_t>(i)]; }
  int offset(int i) const { return offsets_[static_cast<std::size_t>(i)]; }
  int rows() const { return offsets_.back(); }

  /// Block columns of block row i, sorted.
  const int* row_begin(int i) const { return cols_.data() + row_ptr_[static_cast<std::size_t>(i)]; }
  const int* row_end(int i) const { return cols_.data() + row_ptr_[static_cast<std::size_t>(i) + 1]; }
  std::size_t num_stored_blocks() const { return cols_.size(); }
  /// Structural scalar nonzeros (all entries of stored blocks).
  std::size_t num_stored_entries() const { return values_.size(); }

  /// Mutable view of block (i, j); throws DomainError if not in the pattern.
  Eigen::Map<MatrixXc> block(int i, int j);
  Eigen::Map<const MatrixXc> block(int i, int j) const;
  bool has_block(int i, int j) const { return find(i, j) >= 0; }

  void set_zero();
  VectorXc multiply(const VectorXc& x) const;
  MatrixXc multiply(const MatrixXc& x) const;
  /// |A| |x| for real nonnegative weights.
  Eigen::VectorXd abs_multiply(const Eigen::VectorXd& x) const;
  double max_abs() const;
  double norm_inf() const;

  Eigen::SparseMatrix<cplx> to_sparse(double drop_tol = 0.0) const;
  MatrixXc to_dense() const;

  /// Complex general coordinate Matrix Market file.
  void write_matrix_market(const std::string& path) const;

 private:
  std::ptrdiff_t find(int i, int j) const;

  std::vector<int> sizes_;
  std::vector<int> offsets_{0};
  std::vector<std::size_t> row_ptr_{0};
  std::vector<int> cols_;
  std::vector<std::size_t> value_ptr_;  // start of each stored block in values_
  std::vector<cplx> values_;
};

}  // namespace starwave
