#pragma once

// Co-occurrence and co-table graphs, computed in one bottom-up pass over the
// provenance DAG, plus the definition-level oracles they are checked against.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "roq/expr.hpp"
#include "roq/provenance.hpp"
#include "roq/query.hpp"

namespace roq {

enum class CoGraphMode : std::uint8_t { CoTable, CoOccurrence };

constexpr std::string_view mode_name(CoGraphMode m) {
  return m == CoGraphMode::CoTable ? "cotable" : "cooccurrence";
}

using VarPair = std::pair<VarId, VarId>;

/// Simple undirected graph on tuple variables. Vertices are kept sorted;
/// `table` gives the subgoal of each vertex (kNoRelation when unknown).
class CoGraph {
 public:
  CoGraph() = default;

  CoGraph(std::vector<VarId> vertices, std::vector<std::uint32_t> table,
          std::vector<VarPair> edges, CoGraphMode mode)
      : vertices_(std::move(vertices)), table_(std::move(table)), edges_(std::move(edges)),
        mode_(mode) {
    for (VarPair& e : edges_)
      if (e.second < e.first) std::swap(e.first, e.second);
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    adj_.resize(vertices_.size());
    for (const VarPair& e : edges_) {
      std::uint32_t a = local(e.first);
      std::uint32_t b = local(e.second);
      adj_[a].push_back(b);
      adj_[b].push_back(a);
    }
    for (auto& list : adj_) std::sort(list.begin(), list.end());
  }

  std::span<const VarId> vertices() const { return vertices_; }
  std::span<const VarPair> edges() const { return edges_; }
  std::size_t m() const { return edges_.size(); }
  CoGraphMode mode() const { return mode_; }

  std::uint32_t table_of(std::uint32_t local_index) const { return table_.at(local_index); }

  std::optional<std::uint32_t> index_of(VarId v) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) return std::nullopt;
    return static_cast<std::uint32_t>(it - vertices_.begin());
  }

  /// Neighbors as local vertex indices.
  std::span<const std::uint32_t> neighbors(std::uint32_t local_index) const {
    return adj_.at(local_index);
  }

  bool has_edge(VarId a, VarId b) const {
    if (b < a) std::swap(a, b);
    return std::binary_search(edges_.begin(), edges_.end(), VarPair{a, b});
  }

  /// No edge joins two variables of the same subgoal.
  bool is_k_partite() const {
    for (std::uint32_t u = 0; u < adj_.size(); ++u)
      for (std::uint32_t v : adj_[u])
        if (table_[u] != kNoRelation && table_[u] == table_[v]) return false;
    return true;
  }

  /// Same vertex and edge sets, regardless of mode.
  bool same_graph(const CoGraph& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_;
  }

 private:
  std::uint32_t local(VarId v) const {
    auto idx = index_of(v);
    if (!idx) throw Error(ErrorCode::InvalidArgument, "edge endpoint is not a vertex");
    return *idx;
  }

  std::vector<VarId> vertices_;
  std::vector<std::uint32_t> table_;
  std::vector<VarPair> edges_;
  std::vector<std::vector<std::uint32_t>> adj_;
  CoGraphMode mode_ = CoGraphMode::CoTable;
};

struct CoTableOptions {
  /// Break topological-order ties pseudo-randomly instead of by node id.
  std::optional<std::uint64_t> tie_break_seed;
  /// Record how often each variable pair is examined (quadratic memory).
  bool count_pair_visits = false;
  /// Largest leaf count that uses the triangular bit table for dedup.
  std::size_t bit_table_limit = 8192;
};

struct CoTableStats {
  std::uint64_t pairs_examined = 0;
  std::uint64_t max_pair_visits = 0;  // only with count_pair_visits
  std::size_t peak_live_sets = 0;
};

namespace detail {

class EdgeSet {
 public:
  EdgeSet(std::size_t n, std::size_t bit_limit) : n_(n), use_bits_(n <= bit_limit) {
    if (use_bits_) bits_.assign((n * (n - (n > 0 ? 1 : 0)) / 2 + 63) / 64 + 1, 0);
  }

  /// Inserts the pair (a < b); returns false if it was already present.
  bool insert(std::uint32_t a, std::uint32_t b) {
    if (use_bits_) {
      std::size_t idx = static_cast<std::size_t>(b) * (b - 1) / 2 + a;
      std::uint64_t mask = std::uint64_t{1} << (idx % 64);
      if (bits_[idx / 64] & mask) return false;
      bits_[idx / 64] |= mask;
      return true;
    }
    return hashed_.insert(static_cast<std::uint64_t>(a) * n_ + b).second;
  }

 private:
  std::size_t n_;
  bool use_bits_;
  std::vector<std::uint64_t> bits_;
  std::unordered_set<std::uint64_t> hashed_;
};

template <typename F>
void for_each_bit(std::span<const std::uint64_t> words, F&& f) {
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::uint64_t bits = words[w];
    while (bits != 0) {
      int b = std::countr_zero(bits);
      f(static_cast<std::uint32_t>(w * 64 + b));
      bits &= bits - 1;
    }
  }
}

}  // namespace detail

/// Single reverse-topological pass over `dag`. Each node's variable set is
/// the union of its successors' sets; at an And node every pair across its
/// two successors becomes an edge, restricted in CoTable mode to pairs whose
/// subgoals are adjacent in `gt`. A node's set is released once all of its
/// predecessors have been processed.
inline CoGraph comp_cotable(const ProvenanceDag& dag, const TableAdjacencyGraph& gt,
                            CoGraphMode mode, const CoTableOptions& opts = {},
                            CoTableStats* stats = nullptr) {
  const auto nodes = dag.nodes();
  std::vector<VarId> vars = dag.variables();
  const std::size_t n = vars.size();
  std::vector<std::uint32_t> table(n, kNoRelation);
  std::vector<std::uint32_t> slot_of_node(nodes.size(), 0);
  for (NodeId u = 0; u < nodes.size(); ++u) {
    if (nodes[u].kind != DagNode::Kind::Leaf) continue;
    auto s = static_cast<std::uint32_t>(
        std::lower_bound(vars.begin(), vars.end(), nodes[u].var) - vars.begin());
    slot_of_node[u] = s;
    table[s] = nodes[u].subgoal;
  }

  std::vector<std::vector<NodeId>> preds(nodes.size());
  std::vector<std::size_t> pending(nodes.size(), 0);
  for (NodeId u = 0; u < nodes.size(); ++u) {
    pending[u] = nodes[u].succ.size();
    for (NodeId v : nodes[u].succ) preds[v].push_back(u);
  }
  std::vector<std::size_t> unprocessed_preds(nodes.size());
  for (NodeId u = 0; u < nodes.size(); ++u) unprocessed_preds[u] = preds[u].size();

  std::vector<std::uint64_t> priority(nodes.size());
  if (opts.tie_break_seed) {
    std::mt19937_64 rng(*opts.tie_break_seed);
    for (auto& p : priority) p = rng();
  } else {
    for (NodeId u = 0; u < nodes.size(); ++u) priority[u] = u;
  }
  using Entry = std::pair<std::uint64_t, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
  for (NodeId u = 0; u < nodes.size(); ++u)
    if (pending[u] == 0) ready.emplace(priority[u], u);

  const std::size_t words = (n + 63) / 64;
  std::vector<std::vector<std::uint64_t>> var_sets(nodes.size());
  std::size_t live = 0;
  detail::EdgeSet seen(n, opts.bit_table_limit);
  std::vector<VarPair> edges;
  std::vector<std::uint32_t> visits;
  if (opts.count_pair_visits) visits.assign(n * n, 0);
  CoTableStats local_stats;

  std::size_t processed = 0;
  while (!ready.empty()) {
    NodeId u = ready.top().second;
    ready.pop();
    ++processed;
    const DagNode& node = nodes[u];
    std::vector<std::uint64_t>& set = var_sets[u];
    set.assign(words, 0);
    ++live;
    local_stats.peak_live_sets = std::max(local_stats.peak_live_sets, live);
    if (node.kind == DagNode::Kind::Leaf) {
      std::uint32_t s = slot_of_node[u];
      set[s / 64] |= std::uint64_t{1} << (s % 64);
    } else {
      for (NodeId v : node.succ)
        for (std::size_t w = 0; w < words; ++w) set[w] |= var_sets[v][w];
    }

    if (node.kind == DagNode::Kind::And) {
      const auto& left = var_sets[node.succ[0]];
      const auto& right = var_sets[node.succ[1]];
      detail::for_each_bit(left, [&](std::uint32_t x) {
        detail::for_each_bit(right, [&](std::uint32_t y) {
          ++local_stats.pairs_examined;
          std::uint32_t a = std::min(x, y);
          std::uint32_t b = std::max(x, y);
          if (opts.count_pair_visits) {
            auto& c = visits[static_cast<std::size_t>(a) * n + b];
            ++c;
            local_stats.max_pair_visits = std::max<std::uint64_t>(local_stats.max_pair_visits, c);
          }
          if (a == b) return;
          if (mode == CoGraphMode::CoTable && !gt.adjacent(table[a], table[b])) return;
          if (seen.insert(a, b)) edges.emplace_back(vars[a], vars[b]);
        });
      });
    }

    for (NodeId v : node.succ) {
      if (--unprocessed_preds[v] == 0) {
        std::vector<std::uint64_t>().swap(var_sets[v]);
        --live;
      }
    }
    for (NodeId p : preds[u])
      if (--pending[p] == 0) ready.emplace(priority[p], p);
  }
  if (processed != nodes.size()) throw std::logic_error("provenance graph has a cycle");

  if (stats) *stats = local_stats;
  return CoGraph(std::move(vars), std::move(table), std::move(edges), mode);
}

/// Definitional co-occurrence graph: an edge for every two variables that
/// share a prime implicant.
inline CoGraph cooccurrence_from_idnf(const Idnf& idnf) {
  std::vector<VarId> vars = idnf.variables();
  std::vector<VarPair> edges;
  for (const Implicant& imp : idnf.implicants())
    for (std::size_t i = 0; i < imp.size(); ++i)
      for (std::size_t j = i + 1; j < imp.size(); ++j) edges.emplace_back(imp[i], imp[j]);
  std::vector<std::uint32_t> table(vars.size(), kNoRelation);
  return CoGraph(std::move(vars), std::move(table), std::move(edges), CoGraphMode::CoOccurrence);
}

/// Scans every 4-vertex subset for an induced path. Returns the path in
/// order, or nothing when the graph is P4-free (a cograph).
inline std::optional<std::array<VarId, 4>> find_induced_p4(const CoGraph& g) {
  const auto verts = g.vertices();
  const std::size_t n = verts.size();
  std::vector<bool> adj(n * n, false);
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v : g.neighbors(u)) adj[u * n + v] = true;
  auto e = [&](std::size_t a, std::size_t b) { return adj[a * n + b]; };

  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t d = c + 1; d < n; ++d) {
          const std::array<std::size_t, 4> q{a, b, c, d};
          std::array<int, 4> deg{};
          int edge_count = 0;
          for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j)
              if (e(q[i], q[j])) {
                ++deg[i];
                ++deg[j];
                ++edge_count;
              }
          if (edge_count != 3) continue;
          if (std::any_of(deg.begin(), deg.end(), [](int x) { return x == 0 || x == 3; }))
            continue;
          // Walk the path from one endpoint.
          int cur = static_cast<int>(std::find(deg.begin(), deg.end(), 1) - deg.begin());
          int prev = -1;
          std::array<VarId, 4> path{};
          for (int step = 0; step < 4; ++step) {
            path[step] = verts[q[cur]];
            for (int nxt = 0; nxt < 4; ++nxt) {
              if (nxt != cur && nxt != prev && e(q[cur], q[nxt])) {
                prev = cur;
                cur = nxt;
                break;
              }
            }
          }
          return path;
        }
  return std::nullopt;
}

inline bool has_induced_p4(const CoGraph& g) { return find_induced_p4(g).has_value(); }

}  // namespace roq
