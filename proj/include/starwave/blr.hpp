#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "starwave/block_sparse.hpp"
#include "starwave/ordering.hpp"

namespace starwave {

enum class Precision : std::uint8_t { full, mid, low };
std::string to_string(Precision p);

inline constexpr double unit_roundoff_mid = 0x1p-24;  // binary32
inline constexpr double unit_roundoff_low = 0x1p-11;  // binary16

/// Relative storage cost of one vector entry per precision.
struct PrecisionWeights {
  double full = 1.0;
  double mid = 0.5;
  double low = 0.25;
  double of(Precision p) const { return p == Precision::full ? full : p == Precision::mid ? mid : low; }
};

/// tile ~ X diag(sigma) Yhat^T, X and Yhat with unit-norm columns, sigma
/// non-increasing. Column i of X and Yhat is stored in precision tags()[i].
class LowRankBlock {
 public:
  LowRankBlock() = default;
  LowRankBlock(int rows, int cols) : rows_(rows), cols_(cols) {}
  LowRankBlock(const MatrixXc& X, std::vector<double> sigma, const MatrixXc& Yhat);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int rank() const { return static_cast<int>(sigma_.size()); }
  const std::vector<double>& sigma() const { return sigma_; }
  const std::vector<Precision>& tags() const { return tags_; }
  int count(Precision p) const;

  /// Stored vectors converted back to double precision.
  MatrixXc X() const;
  MatrixXc Yhat() const;
  /// Yhat diag(sigma), so that tile ~ X Y^T.
  MatrixXc Y() const;
  MatrixXc to_dense() const;

  std::size_t entries() const { return static_cast<std::size_t>(rank()) * static_cast<std::size_t>(rows_ + cols_); }
  double weighted_entries(const PrecisionWeights& w) const;
  std::size_t bytes() const;

  /// Re-stores every vector in its tag's precision. Tags must be ordered
  /// full, mid, low.
  void store(const std::vector<Precision>& tags);

 private:
  using MatrixXcf = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixXh = Eigen::Matrix<Eigen::half, Eigen::Dynamic, Eigen::Dynamic>;

  MatrixXc gather(const MatrixXc& f, const MatrixXcf& m, const MatrixXh& lre, const MatrixXh& lim,
                  int n) const;

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> sigma_;
  std::vector<Precision> tags_;
  MatrixXc xf_, yf_;
  MatrixXcf xm_, ym_;
  MatrixXh xl_re_, xl_im_, yl_re_, yl_im_;
};

/// A BLR tile: dense or low-rank.
struct Tile {
  int rows = 0;
  int cols = 0;
  bool low_rank = false;
  MatrixXc dense;
  LowRankBlock lr;

  int rank() const { return low_rank ? lr.rank() : std::min(rows, cols); }
  MatrixXc to_dense() const { return low_rank ? lr.to_dense() : dense; }
  std::size_t entries() const;
  double weighted_entries(const PrecisionWeights& w) const;
  std::size_t bytes() const;
  /// y -= T x and y -= T^H x.
  void subtract_product(const MatrixXc& x, Eigen::Ref<MatrixXc> y) const;
  void subtract_adjoint_product(const MatrixXc& x, Eigen::Ref<MatrixXc> y) const;
};

/// Truncated column-pivoted QR followed by an SVD of the kept R rows:
/// ||tile - X Y^T||_F <= eps ||tile||_F. The tile stays dense when
/// rank (rows + cols) >= rows cols. The operation count is added to *flops.
Tile compress_tile(const MatrixXc& tile, double eps, double* flops = nullptr);

/// Precision tag per vector: full if sigma_i/sigma_1 > eps/u_mid, mid if
/// above eps/u_low, low otherwise.
std::vector<Precision> precision_tags(const std::vector<double>& sigma, double eps,
                                      double u_mid = unit_roundoff_mid,
                                      double u_low = unit_roundoff_low);
LowRankBlock demote_precision(LowRankBlock block, double eps, double u_mid = unit_roundoff_mid,
                              double u_low = unit_roundoff_low);

struct BlrOptions {
  std::optional<double> eps;  ///< empty: full-rank factorization
  bool mixed_precision = false;
  double u_mid = unit_roundoff_mid;
  double u_low = unit_roundoff_low;
  int tile_size = 64;
  double pivot_threshold = 0.01;
  OrderingMethod ordering = OrderingMethod::nested_dissection;
  int nemin = 32;
  /// Fronts with fewer rows than this are factorized without compression.
  int min_blr_front = 0;
  bool scaling = true;  ///< Ruiz row/column equilibration of K
};

struct FactorStats {
  double full_rank_flops = 0.0;  ///< predicted by the symbolic plan
  double blr_flops = 0.0;        ///< counted, includes compression
  double compression_flops = 0.0;
  long full_rank_entries = 0;
  double blr_entries = 0.0;
  double mp_entries = 0.0;      ///< weights 1 / 0.5 / 0.25
  double mp_entries_alt = 0.0;  ///< weights 1 / 0.75 / 0.5
  std::size_t factor_bytes = 0;
  long lowrank_tiles = 0;
  long dense_tiles = 0;
  long vectors_full = 0;
  long vectors_mid = 0;
  long vectors_low = 0;
  long pivot_fallbacks = 0;     ///< complete pivoting inside a panel was needed
  long threshold_failures = 0;  ///< no pivot met the threshold; best one kept
  int num_fronts = 0;
  long max_front = 0;
  double analysis_seconds = 0.0;
  double factor_seconds = 0.0;

  double n_op_pct() const { return 100.0 * blr_flops / full_rank_flops; }
  double n_entries_pct() const { return 100.0 * blr_entries / static_cast<double>(full_rank_entries); }
  double n_entries_pct_mp() const { return blr_entries > 0 ? 100.0 * mp_entries / blr_entries : 100.0; }
  double n_entries_pct_mp_alt() const { return blr_entries > 0 ? 100.0 * mp_entries_alt / blr_entries : 100.0; }
};

/// Factors of one front: panels of the fully summed block with their dense
/// LU, lazily applied row/column swaps, and L/U tiles right of / below each
/// panel.
struct FrontFactors {
  std::vector<int> dofs;  ///< scalar dofs: pivots then contribution block
  int npiv = 0;
  std::vector<int> bounds;  ///< tile boundaries; the first panels cover [0, npiv)
  int panels = 0;
  std::vector<MatrixXc> diag;
  std::vector<std::vector<std::pair<int, int>>> row_swaps;
  std::vector<std::vector<std::pair<int, int>>> col_swaps;
  std::vector<std::vector<Tile>> L;  ///< L[p][t - p - 1]
  std::vector<std::vector<Tile>> U;
};

/// Multifrontal BLR LU of a block sparse matrix with a symmetric block pattern.
class BlrFactorization {
 public:
  BlrFactorization() = default;

  int size() const { return n_; }
  const EliminationPlan& plan() const { return plan_; }
  const FactorStats& stats() const { return stats_; }
  const BlrOptions& options() const { return opt_; }
  const std::vector<FrontFactors>& fronts() const { return fronts_; }

  /// K x = b and K^H x = b for any number of right-hand sides.
  MatrixXc solve(const MatrixXc& b) const;
  MatrixXc solve_adjoint(const MatrixXc& b) const;

 private:
  friend BlrFactorization factorize(const BlockSparseMatrix&, const EliminationPlan&, const BlrOptions&);
  friend BlrFactorization factorize(const BlockSparseMatrix&, const BlrOptions&);

  int n_ = 0;
  EliminationPlan plan_;
  BlrOptions opt_;
  FactorStats stats_;
  Eigen::VectorXd row_scale_;
  Eigen::VectorXd col_scale_;
  std::vector<FrontFactors> fronts_;
};

/// Throws SingularError on a zero pivot.
BlrFactorization factorize(const BlockSparseMatrix& K, const EliminationPlan& plan,
                           const BlrOptions& opt = {});
/// Graph, ordering, symbolic analysis and numerical factorization.
BlrFactorization factorize(const BlockSparseMatrix& K, const BlrOptions& opt = {});

/// Componentwise backward error w1 + w2, maximized over columns.
/// w1 = max |b - K x|_i / (|K| |x| + |b|)_i over rows whose denominator exceeds
/// 1000 n u (||K_i||_1 ||x||_inf + |b_i|); the remaining rows, where the ratio is
/// dominated by rounding in near-zero components, enter
/// w2 = max |b - K x|_i / ((|K| |x|)_i + ||K_i||_1 ||x||_inf).
double backward_error(const BlockSparseMatrix& K, const MatrixXc& x, const MatrixXc& b);

/// Infinity-norm condition number estimate ||K||_inf ||K^-1||_inf
/// (Hager-Higham on K^-H).
double condition_estimate(const BlockSparseMatrix& K, const BlrFactorization& factors);

struct SolveStats {
  std::string ordering;
  std::optional<double> eps;
  bool mixed_precision = false;
  long n = 0;
  long num_blocks = 0;
  long block_edges = 0;
  long scalar_edges = 0;
  FactorStats factor;
  double cond = 0.0;
  double bwd = 0.0;
  double solve_seconds = 0.0;

  nlohmann::json to_json() const;
};

struct SolveResult {
  MatrixXc x;
  SolveStats stats;
};

/// Factorize, solve, and measure backward error and condition.
SolveResult solve_system(const BlockSparseMatrix& K, const MatrixXc& b, const BlrOptions& opt = {},
                         bool estimate_condition = true);

}  // namespace starwave
