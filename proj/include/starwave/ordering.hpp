#pragma once

#include <string>
#include <vector>

#include "starwave/block_sparse.hpp"

namespace starwave {

/// Quotient graph of a block matrix: one node per block row (a mesh face),
/// weighted by its scalar size.
struct BlockGraph {
  std::vector<std::vector<int>> adj;  ///< sorted, symmetric, no self-loops
  std::vector<int> weight;

  int num_nodes() const { return static_cast<int>(adj.size()); }
  long num_edges() const;
  /// Scalar graph of the same matrix (every entry of a stored block counts).
  long scalar_nodes() const;
  long scalar_edges() const;
};

BlockGraph build_block_graph(const BlockSparseMatrix& K);

enum class OrderingMethod { natural, amd, nested_dissection };
std::string to_string(OrderingMethod m);
OrderingMethod parse_ordering(const std::string& name);

/// perm[k] is the node eliminated k-th.
std::vector<int> reorder(const BlockGraph& graph, OrderingMethod method);

/// One frontal matrix: its fully summed block nodes and the block nodes of its
/// contribution block, in elimination order.
struct Front {
  std::vector<int> pivots;
  std::vector<int> cb;
  int parent = -1;
  std::vector<int> children;
  long npiv_scalar = 0;
  long ncb_scalar = 0;
};

/// Assembly tree in postorder (children before parents) plus predicted
/// full-rank costs.
struct EliminationPlan {
  std::vector<int> perm;      ///< final elimination order of block nodes
  std::vector<int> position;  ///< inverse of perm
  std::vector<Front> fronts;
  std::vector<int> block_size;
  std::vector<int> node_front;  ///< front owning each node as a pivot
  long predicted_entries = 0;   ///< sum npiv^2 + 2 npiv ncb
  double predicted_flops = 0.0;
  long block_fill = 0;  ///< off-diagonal block entries of the L structure

  bool operator==(const EliminationPlan& o) const {
    return perm == o.perm && block_fill == o.block_fill && predicted_entries == o.predicted_entries;
  }
};

/// Fronts whose pivot count stays below `nemin` scalars are merged with
/// small parents (relaxed amalgamation).
EliminationPlan symbolic_factorize(const BlockGraph& graph, const std::vector<int>& perm,
                                   int nemin = 32);

/// Dense partial LU cost of a front: sum over pivots of (divisions + 2 x rank-1 update).
double front_flops(long npiv, long nfront);

}  // namespace starwave
