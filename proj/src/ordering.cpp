#include "starwave/ordering.hpp"

#include <deque>
#include <numeric>

#include <Eigen/OrderingMethods>

namespace starwave {

long BlockGraph::num_edges() const {
  long e = 0;
  for (const auto& a : adj) e += static_cast<long>(a.size());
  return e / 2;
}

long BlockGraph::scalar_nodes() const {
  return std::accumulate(weight.begin(), weight.end(), 0L);
}

long BlockGraph::scalar_edges() const {
  long e = 0;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    const long wi = weight[i];
    e += wi * (wi - 1) / 2;
    for (int j : adj[i])
      if (j > static_cast<int>(i)) e += wi * weight[static_cast<std::size_t>(j)];
  }
  return e;
}

BlockGraph build_block_graph(const BlockSparseMatrix& K) {
  BlockGraph g;
  const int n = K.num_blocks();
  g.adj.resize(static_cast<std::size_t>(n));
  g.weight.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    g.weight[static_cast<std::size_t>(i)] = K.block_size(i);
    for (const int* j = K.row_begin(i); j != K.row_end(i); ++j)
      if (*j != i) {
        g.adj[static_cast<std::size_t>(i)].push_back(*j);
        g.adj[static_cast<std::size_t>(*j)].push_back(i);
      }
  }
  for (auto& a : g.adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return g;
}

std::string to_string(OrderingMethod m) {
  switch (m) {
    case OrderingMethod::natural: return "natural";
    case OrderingMethod::amd: return "amd";
    case OrderingMethod::nested_dissection: return "nested_dissection";
  }
  return "?";
}

OrderingMethod parse_ordering(const std::string& name) {
  if (name == "natural") return OrderingMethod::natural;
  if (name == "amd") return OrderingMethod::amd;
  if (name == "nested_dissection" || name == "nd") return OrderingMethod::nested_dissection;
  throw InputError("unknown ordering '" + name + "'");
}

// ---------------------------------------------------------------------------
// Orderings

namespace {

std::vector<int> amd_order(const BlockGraph& g) {
  const int n = g.num_nodes();
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 1.0);
    for (int j : g.adj[static_cast<std::size_t>(i)]) t.emplace_back(i, j, 1.0);
  }
  Eigen::SparseMatrix<double> S(n, n);
  S.setFromTriplets(t.begin(), t.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> P;
  Eigen::AMDOrdering<int> amd;
  amd(S, P);
  // Eigen returns the inverse permutation: indices()[new] = old.
  return {P.indices().data(), P.indices().data() + n};
}

/// BFS levels from `start` restricted to nodes with mark == tag.
std::vector<int> bfs_levels(const BlockGraph& g, int start, const std::vector<int>& mark, int tag,
                            std::vector<int>& level) {
  std::vector<int> order{start};
  level[static_cast<std::size_t>(start)] = 0;
  for (std::size_t h = 0; h < order.size(); ++h) {
    const int v = order[h];
    for (int w : g.adj[static_cast<std::size_t>(v)]) {
      const auto wu = static_cast<std::size_t>(w);
      if (mark[wu] == tag && level[wu] < 0) {
        level[wu] = level[static_cast<std::size_t>(v)] + 1;
        order.push_back(w);
      }
    }
  }
  return order;
}

class NestedDissection {
 public:
  explicit NestedDissection(const BlockGraph& g)
      : g_(g), mark_(static_cast<std::size_t>(g.num_nodes()), -1),
        level_(static_cast<std::size_t>(g.num_nodes()), -1) {}

  std::vector<int> run() {
    std::vector<int> all(static_cast<std::size_t>(g_.num_nodes()));
    std::iota(all.begin(), all.end(), 0);
    dissect(all);
    return std::move(order_);
  }

 private:
  static constexpr std::size_t leaf_size = 16;
  static constexpr std::size_t cluster_size = 4;

  void dissect(const std::vector<int>& nodes) {
    if (nodes.empty()) return;
    const int tag = next_tag_++;
    for (int v : nodes) mark_[static_cast<std::size_t>(v)] = tag;
    if (nodes.size() <= leaf_size) {
      order_.insert(order_.end(), nodes.begin(), nodes.end());
      return;
    }
    // Split off connected components first.
    for (int v : nodes) level_[static_cast<std::size_t>(v)] = -1;
    auto comp = bfs_levels(g_, nodes.front(), mark_, tag, level_);
    if (comp.size() < nodes.size()) {
      std::vector<int> rest;
      for (int v : nodes)
        if (level_[static_cast<std::size_t>(v)] < 0) rest.push_back(v);
      std::sort(comp.begin(), comp.end());
      dissect(comp);
      dissect(rest);
      return;
    }
    // Pseudo-peripheral start node: repeat BFS from the farthest node.
    int start = nodes.front();
    int depth = -1;
    for (int it = 0; it < 4; ++it) {
      for (int v : nodes) level_[static_cast<std::size_t>(v)] = -1;
      const auto ord = bfs_levels(g_, start, mark_, tag, level_);
      const int far = ord.back();
      const int d = level_[static_cast<std::size_t>(far)];
      if (d <= depth) break;
      depth = d;
      start = far;
    }
    for (int v : nodes) level_[static_cast<std::size_t>(v)] = -1;
    const auto ord = bfs_levels(g_, start, mark_, tag, level_);
    const int maxlev = level_[static_cast<std::size_t>(ord.back())];
    if (maxlev < 2) {
      order_.insert(order_.end(), nodes.begin(), nodes.end());
      return;
    }
    // Separator level: the one closest to splitting the node count in half.
    std::vector<long> count(static_cast<std::size_t>(maxlev) + 1, 0);
    for (int v : nodes) ++count[static_cast<std::size_t>(level_[static_cast<std::size_t>(v)])];
    long below = 0;
    int sep = 1;
    const long half = static_cast<long>(nodes.size()) / 2;
    for (int l = 0; l <= maxlev; ++l) {
      if (below + count[static_cast<std::size_t>(l)] > half) {
        sep = std::clamp(l, 1, maxlev - 1);
        break;
      }
      below += count[static_cast<std::size_t>(l)];
    }
    std::vector<int> a, b, s;
    for (int v : nodes) {
      const int l = level_[static_cast<std::size_t>(v)];
      if (l < sep) {
        a.push_back(v);
      } else if (l > sep) {
        b.push_back(v);
      } else {
        // A separator node with no neighbour beyond the level can join side a.
        bool touches_b = false;
        for (int w : g_.adj[static_cast<std::size_t>(v)])
          if (mark_[static_cast<std::size_t>(w)] == tag && level_[static_cast<std::size_t>(w)] == sep + 1) {
            touches_b = true;
            break;
          }
        (touches_b ? s : a).push_back(v);
      }
    }
    dissect(a);
    dissect(b);
    cluster(s);
    order_.insert(order_.end(), s.begin(), s.end());
  }

  /// Orders separator nodes by recursive BFS bisection of their induced
  /// subgraph so that consecutive nodes are close in the mesh.
  void cluster(std::vector<int>& nodes) {
    if (nodes.size() <= cluster_size) return;
    const int tag = next_tag_++;
    for (int v : nodes) {
      mark_[static_cast<std::size_t>(v)] = tag;
      level_[static_cast<std::size_t>(v)] = -1;
    }
    std::vector<std::vector<int>> comps;
    for (int v : nodes)
      if (level_[static_cast<std::size_t>(v)] < 0) comps.push_back(bfs_levels(g_, v, mark_, tag, level_));
    nodes.clear();
    if (comps.size() > 1) {
      for (auto& c : comps) {
        cluster(c);
        nodes.insert(nodes.end(), c.begin(), c.end());
      }
      return;
    }
    auto& ord = comps.front();
    // Restart from the farthest node for a more elongated level structure.
    const int far = ord.back();
    for (int v : ord) level_[static_cast<std::size_t>(v)] = -1;
    ord = bfs_levels(g_, far, mark_, tag, level_);
    const auto half = static_cast<std::ptrdiff_t>(ord.size() / 2);
    std::vector<int> lo(ord.begin(), ord.begin() + half), hi(ord.begin() + half, ord.end());
    cluster(lo);
    cluster(hi);
    nodes.insert(nodes.end(), lo.begin(), lo.end());
    nodes.insert(nodes.end(), hi.begin(), hi.end());
  }

  const BlockGraph& g_;
  std::vector<int> mark_;
  std::vector<int> level_;
  std::vector<int> order_;
  int next_tag_ = 0;
};

}  // namespace

std::vector<int> reorder(const BlockGraph& graph, OrderingMethod method) {
  const int n = graph.num_nodes();
  switch (method) {
    case OrderingMethod::natural: {
      std::vector<int> p(static_cast<std::size_t>(n));
      std::iota(p.begin(), p.end(), 0);
      return p;
    }
    case OrderingMethod::amd:
      return amd_order(graph);
    case OrderingMethod::nested_dissection:
      return NestedDissection(graph).run();
  }
  return {};
}

// ---------------------------------------------------------------------------
// Symbolic factorization

double front_flops(long npiv, long nfront) {
  double f = 0.0;
  for (long k = 0; k < npiv; ++k) {
    const double r = static_cast<double>(nfront - k - 1);
    f += r + 2.0 * r * r;
  }
  return f;
}

EliminationPlan symbolic_factorize(const BlockGraph& graph, const std::vector<int>& perm, int nemin) {
  const int n = graph.num_nodes();
  if (static_cast<int>(perm.size()) != n) throw DomainError("permutation size does not match the graph");
  std::vector<int> pos(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < n; ++k) {
    const int v = perm[static_cast<std::size_t>(k)];
    if (v < 0 || v >= n || pos[static_cast<std::size_t>(v)] >= 0) throw DomainError("ordering is not a permutation");
    pos[static_cast<std::size_t>(v)] = k;
  }

  // Column structures in permuted numbering: struct(j) = adj+(j) U struct(children) \ {<= j}.
  std::vector<std::vector<int>> str(static_cast<std::size_t>(n));
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> kids(static_cast<std::size_t>(n));
  std::vector<int> mark(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    auto& s = str[static_cast<std::size_t>(j)];
    mark[static_cast<std::size_t>(j)] = j;
    for (int w : graph.adj[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])]) {
      const int pw = pos[static_cast<std::size_t>(w)];
      if (pw > j && mark[static_cast<std::size_t>(pw)] != j) {
        mark[static_cast<std::size_t>(pw)] = j;
        s.push_back(pw);
      }
    }
    for (int c : kids[static_cast<std::size_t>(j)]) {
      for (int w : str[static_cast<std::size_t>(c)])
        if (w > j && mark[static_cast<std::size_t>(w)] != j) {
          mark[static_cast<std::size_t>(w)] = j;
          s.push_back(w);
        }
    }
    std::sort(s.begin(), s.end());
    if (!s.empty()) {
      parent[static_cast<std::size_t>(j)] = s.front();
      kids[static_cast<std::size_t>(s.front())].push_back(j);
    }
  }

  // Fundamental supernodes: j joins j-1 when j-1's only parent link is j, j
  // has a single child, and the structures nest exactly.
  std::vector<int> sn_of(static_cast<std::size_t>(n));
  std::vector<std::vector<int>> sn_cols;
  for (int j = 0; j < n; ++j) {
    bool merge = false;
    if (j > 0 && parent[static_cast<std::size_t>(j - 1)] == j && kids[static_cast<std::size_t>(j)].size() == 1) {
      const auto& a = str[static_cast<std::size_t>(j - 1)];
      const auto& b = str[static_cast<std::size_t>(j)];
      merge = a.size() == b.size() + 1 && std::equal(b.begin(), b.end(), a.begin() + 1);
    }
    if (merge) {
      sn_of[static_cast<std::size_t>(j)] = sn_of[static_cast<std::size_t>(j - 1)];
      sn_cols.back().push_back(j);
    } else {
      sn_of[static_cast<std::size_t>(j)] = static_cast<int>(sn_cols.size());
      sn_cols.push_back({j});
    }
  }
  const int ns = static_cast<int>(sn_cols.size());
  std::vector<int> sn_parent(static_cast<std::size_t>(ns), -1);
  for (int s = 0; s < ns; ++s) {
    const int last = sn_cols[static_cast<std::size_t>(s)].back();
    const int p = parent[static_cast<std::size_t>(last)];
    if (p >= 0) sn_parent[static_cast<std::size_t>(s)] = sn_of[static_cast<std::size_t>(p)];
  }
  auto scalar_size = [&](const std::vector<int>& cols) {
    long w = 0;
    for (int c : cols) w += graph.weight[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])];
    return w;
  };

  // Relaxed amalgamation (children have smaller indices than parents, so one
  // ascending sweep sees every child before its parent).
  std::vector<int> rep(static_cast<std::size_t>(ns));
  std::iota(rep.begin(), rep.end(), 0);
  std::vector<long> piv_size(static_cast<std::size_t>(ns));
  for (int s = 0; s < ns; ++s) piv_size[static_cast<std::size_t>(s)] = scalar_size(sn_cols[static_cast<std::size_t>(s)]);
  auto find = [&](int s) {
    while (rep[static_cast<std::size_t>(s)] != s) s = rep[static_cast<std::size_t>(s)] = rep[static_cast<std::size_t>(rep[static_cast<std::size_t>(s)])];
    return s;
  };
  for (int s = 0; s < ns; ++s) {
    const int p = sn_parent[static_cast<std::size_t>(s)];
    if (p < 0) continue;
    const int rs = find(s), rp = find(p);
    if (piv_size[static_cast<std::size_t>(rs)] < nemin && piv_size[static_cast<std::size_t>(rp)] < nemin) {
      rep[static_cast<std::size_t>(rs)] = rp;
      piv_size[static_cast<std::size_t>(rp)] += piv_size[static_cast<std::size_t>(rs)];
    }
  }

  // Group columns per merged front; parent of a merged front is the front of
  // the etree parent of its highest column.
  std::vector<int> front_id(static_cast<std::size_t>(ns), -1);
  std::vector<std::vector<int>> fcols;
  for (int s = 0; s < ns; ++s) {
    const int r = find(s);
    if (front_id[static_cast<std::size_t>(r)] < 0) {
      front_id[static_cast<std::size_t>(r)] = static_cast<int>(fcols.size());
      fcols.emplace_back();
    }
    auto& cols = fcols[static_cast<std::size_t>(front_id[static_cast<std::size_t>(r)])];
    cols.insert(cols.end(), sn_cols[static_cast<std::size_t>(s)].begin(), sn_cols[static_cast<std::size_t>(s)].end());
  }
  const int nf = static_cast<int>(fcols.size());
  std::vector<int> col_front(static_cast<std::size_t>(n));
  for (int f = 0; f < nf; ++f) {
    auto& cols = fcols[static_cast<std::size_t>(f)];
    std::sort(cols.begin(), cols.end());
    for (int c : cols) col_front[static_cast<std::size_t>(c)] = f;
  }
  std::vector<int> fparent(static_cast<std::size_t>(nf), -1);
  std::vector<std::vector<int>> fkids(static_cast<std::size_t>(nf));
  for (int f = 0; f < nf; ++f) {
    int p = -1;
    for (int c : fcols[static_cast<std::size_t>(f)]) {
      const int pc = parent[static_cast<std::size_t>(c)];
      if (pc >= 0 && col_front[static_cast<std::size_t>(pc)] != f) {
        p = col_front[static_cast<std::size_t>(pc)];
        break;
      }
    }
    fparent[static_cast<std::size_t>(f)] = p;
    if (p >= 0) fkids[static_cast<std::size_t>(p)].push_back(f);
  }

  // Postorder of the front tree; roots in order of their highest column.
  std::vector<int> post;
  post.reserve(static_cast<std::size_t>(nf));
  std::vector<int> roots;
  for (int f = 0; f < nf; ++f)
    if (fparent[static_cast<std::size_t>(f)] < 0) roots.push_back(f);
  for (int r : roots) {
    std::vector<std::pair<int, std::size_t>> stack{{r, 0}};
    while (!stack.empty()) {
      auto& [f, k] = stack.back();
      const auto& ch = fkids[static_cast<std::size_t>(f)];
      if (k < ch.size()) {
        const int c = ch[k++];
        stack.emplace_back(c, 0);
      } else {
        post.push_back(f);
        stack.pop_back();
      }
    }
  }

  EliminationPlan plan;
  plan.block_size.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) plan.block_size[static_cast<std::size_t>(v)] = graph.weight[static_cast<std::size_t>(v)];
  std::vector<int> new_index(static_cast<std::size_t>(nf));
  for (int k = 0; k < nf; ++k) new_index[static_cast<std::size_t>(post[static_cast<std::size_t>(k)])] = k;
  plan.node_front.assign(static_cast<std::size_t>(n), -1);
  plan.fronts.resize(static_cast<std::size_t>(nf));
  for (int k = 0; k < nf; ++k) {
    const int f = post[static_cast<std::size_t>(k)];
    Front& fr = plan.fronts[static_cast<std::size_t>(k)];
    const auto& cols = fcols[static_cast<std::size_t>(f)];
    // Contribution block: union of column structures minus the pivots.
    for (int c : cols) mark[static_cast<std::size_t>(c)] = -2 - k;
    std::vector<int> cb;
    for (int c : cols)
      for (int w : str[static_cast<std::size_t>(c)])
        if (mark[static_cast<std::size_t>(w)] != -2 - k) {
          mark[static_cast<std::size_t>(w)] = -2 - k;
          cb.push_back(w);
        }
    std::sort(cb.begin(), cb.end());
    for (int c : cols) {
      const int v = perm[static_cast<std::size_t>(c)];
      fr.pivots.push_back(v);
      plan.perm.push_back(v);
      plan.node_front[static_cast<std::size_t>(v)] = k;
    }
    for (int w : cb) fr.cb.push_back(perm[static_cast<std::size_t>(w)]);
    fr.parent = fparent[static_cast<std::size_t>(f)] < 0 ? -1 : new_index[static_cast<std::size_t>(fparent[static_cast<std::size_t>(f)])];
    for (int v : fr.pivots) fr.npiv_scalar += plan.block_size[static_cast<std::size_t>(v)];
    for (int v : fr.cb) fr.ncb_scalar += plan.block_size[static_cast<std::size_t>(v)];
    plan.predicted_entries += fr.npiv_scalar * fr.npiv_scalar + 2 * fr.npiv_scalar * fr.ncb_scalar;
    plan.predicted_flops += front_flops(fr.npiv_scalar, fr.npiv_scalar + fr.ncb_scalar);
    const long np = static_cast<long>(fr.pivots.size());
    plan.block_fill += np * (np - 1) / 2 + np * static_cast<long>(fr.cb.size());
  }
  for (int k = 0; k < nf; ++k) {
    const int p = plan.fronts[static_cast<std::size_t>(k)].parent;
    if (p >= 0) plan.fronts[static_cast<std::size_t>(p)].children.push_back(k);
  }
  plan.position.assign(static_cast<std::size_t>(n), -1);
  for (int k = 0; k < n; ++k) plan.position[static_cast<std::size_t>(plan.perm[static_cast<std::size_t>(k)])] = k;
  return plan;
}

}  // namespace starwave
