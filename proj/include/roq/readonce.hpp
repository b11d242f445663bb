#pragma once

// Read-once form of a self-join-free boolean query's answer, found by
// alternating row decompositions (components of the co-table graph, giving
// a Sum) and table decompositions (components of the table-adjacency graph
// over edges that are not fully connected in the co-table graph, giving a
// Product).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roq/cotable.hpp"
#include "roq/expr.hpp"
#include "roq/instance.hpp"
#include "roq/query.hpp"

namespace roq {

/// Induced subgraph of the co-table graph over one context's tuples.
struct LocalGraph {
  std::vector<VarId> vertices;
  std::vector<std::uint32_t> table;  // index into the context's tables
  std::vector<std::vector<std::uint32_t>> adj;

  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (const auto& a : adj) twice += a.size();
    return twice / 2;
  }
};

struct DecompositionContext {
  enum class Step : std::uint8_t { Row, Table };

  std::vector<std::uint32_t> tables;       // subgoal indices into the original query
  std::vector<Atom> atoms;                 // current (possibly renamed) subgoals
  std::vector<std::vector<VarId>> tuples;  // surviving tuples per table
  LocalGraph graph;
  Step next = Step::Row;
  std::size_t depth = 1;

  std::size_t k() const { return tables.size(); }
  std::size_t n() const { return graph.vertices.size(); }

  Query query() const { return Query(atoms); }

  std::vector<VarId> variables() const {
    std::vector<VarId> out = graph.vertices;
    std::sort(out.begin(), out.end());
    return out;
  }
};

namespace detail {

/// Splits `ctx` by a per-vertex group label. Tables keep their order; a
/// table with no tuples in a group is dropped from that group when
/// `drop_empty_tables` is set. Edges survive only inside a group.
inline std::vector<DecompositionContext> split_context(
    const DecompositionContext& ctx, std::span<const std::uint32_t> group_of_vertex,
    std::size_t groups, std::span<const std::uint32_t> group_of_table) {
  std::vector<DecompositionContext> out(groups);
  // Per group: map parent table index -> child table index.
  std::vector<std::vector<std::int64_t>> table_map(groups, std::vector<std::int64_t>(ctx.k(), -1));
  for (std::uint32_t t = 0; t < ctx.k(); ++t) {
    for (std::uint32_t g = 0; g < groups; ++g) {
      if (!group_of_table.empty() && group_of_table[t] != g) continue;
      table_map[g][t] = static_cast<std::int64_t>(out[g].tables.size());
      out[g].tables.push_back(ctx.tables[t]);
      out[g].atoms.push_back(ctx.atoms[t]);
      out[g].tuples.emplace_back();
    }
  }
  std::vector<std::uint32_t> local(ctx.n(), 0);
  for (std::uint32_t v = 0; v < ctx.n(); ++v) {
    std::uint32_t g = group_of_vertex[v];
    DecompositionContext& child = out[g];
    auto ct = static_cast<std::uint32_t>(table_map[g][ctx.graph.table[v]]);
    local[v] = static_cast<std::uint32_t>(child.graph.vertices.size());
    child.graph.vertices.push_back(ctx.graph.vertices[v]);
    child.graph.table.push_back(ct);
    child.tuples[ct].push_back(ctx.graph.vertices[v]);
  }
  for (DecompositionContext& c : out) c.graph.adj.resize(c.graph.vertices.size());
  for (std::uint32_t v = 0; v < ctx.n(); ++v) {
    std::uint32_t g = group_of_vertex[v];
    for (std::uint32_t w : ctx.graph.adj[v])
      if (group_of_vertex[w] == g) out[g].graph.adj[local[v]].push_back(local[w]);
  }
  for (DecompositionContext& c : out) {
    for (const auto& t : c.tuples)
      if (t.empty()) throw std::logic_error("decomposition produced a table without tuples");
    c.depth = ctx.depth + 1;
  }
  return out;
}

inline std::string fresh_variable(const std::string& current, std::uint32_t subgoal,
                                  std::uint64_t generation) {
  std::string root = current.substr(0, current.find('#'));
  return root + "#" + std::to_string(subgoal) + "#" + std::to_string(generation);
}

}  // namespace detail

/// Connected components of the context's co-table subgraph. Fails (nullopt)
/// when there is only one component.
inline std::optional<std::vector<DecompositionContext>> row_decomp(const DecompositionContext& ctx) {
  const std::size_t n = ctx.n();
  constexpr std::uint32_t kUnset = 0xffffffffu;
  std::vector<std::uint32_t> comp(n, kUnset);
  std::uint32_t count = 0;
  std::vector<std::uint32_t> stack;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (comp[s] != kUnset) continue;
    comp[s] = count;
    stack.push_back(s);
    while (!stack.empty()) {
      std::uint32_t v = stack.back();
      stack.pop_back();
      for (std::uint32_t w : ctx.graph.adj[v]) {
        if (comp[w] == kUnset) {
          comp[w] = count;
          stack.push_back(w);
        }
      }
    }
    ++count;
  }
  if (count < 2) return std::nullopt;
  auto children = detail::split_context(ctx, comp, count, {});
  for (auto& c : children) c.next = DecompositionContext::Step::Table;
  return children;
}

/// Outcome of marking the table-adjacency edges of a context.
struct TableMarking {
  struct Edge {
    std::uint32_t a, b;  // context table indices, a < b
    bool plus;
  };
  std::vector<Edge> edges;
  std::vector<std::uint32_t> component;  // per context table
  std::size_t components = 0;
};

/// An edge is "+" when every tuple of one side is adjacent to every tuple of
/// the other. Counts per-vertex neighbors in each table, so the work is
/// linear in the context's edges and tuples.
inline TableMarking mark_tables(const DecompositionContext& ctx, const TableAdjacencyGraph& gt) {
  const std::size_t k = ctx.k();
  TableMarking out;
  std::vector<std::vector<std::int64_t>> edge_index(k, std::vector<std::int64_t>(k, -1));
  for (std::uint32_t a = 0; a < k; ++a)
    for (std::uint32_t b = a + 1; b < k; ++b)
      if (gt.adjacent(ctx.tables[a], ctx.tables[b])) {
        edge_index[a][b] = edge_index[b][a] = static_cast<std::int64_t>(out.edges.size());
        out.edges.push_back({a, b, true});
      }
  std::vector<std::vector<std::uint32_t>> table_nbrs(k);
  for (const auto& e : out.edges) {
    table_nbrs[e.a].push_back(e.b);
    table_nbrs[e.b].push_back(e.a);
  }
  std::vector<std::size_t> count(k, 0);
  for (std::uint32_t v = 0; v < ctx.n(); ++v) {
    for (std::uint32_t w : ctx.graph.adj[v]) ++count[ctx.graph.table[w]];
    std::uint32_t a = ctx.graph.table[v];
    for (std::uint32_t b : table_nbrs[a])
      if (count[b] != ctx.tuples[b].size()) out.edges[edge_index[a][b]].plus = false;
    for (std::uint32_t w : ctx.graph.adj[v]) count[ctx.graph.table[w]] = 0;
  }

  std::vector<std::uint32_t> parent(k);
  std::iota(parent.begin(), parent.end(), 0u);
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : out.edges)
    if (!e.plus) parent[find(e.a)] = find(e.b);
  out.component.assign(k, 0);
  std::vector<std::int64_t> label(k, -1);
  for (std::uint32_t t = 0; t < k; ++t) {
    std::uint32_t r = find(t);
    if (label[r] < 0) label[r] = static_cast<std::int64_t>(out.components++);
    out.component[t] = static_cast<std::uint32_t>(label[r]);
  }
  return out;
}

/// Groups tables by components over "-" edges and rewrites each subgoal so
/// variables shared across components become fresh per-relation variables.
/// Fails (nullopt) when all tables stay in one component.
inline std::optional<std::vector<DecompositionContext>> table_decomp(
    const DecompositionContext& ctx, const TableAdjacencyGraph& gt, std::uint64_t generation = 0) {
  TableMarking marks = mark_tables(ctx, gt);
  if (marks.components < 2) return std::nullopt;

  std::vector<Atom> rewritten = ctx.atoms;
  for (std::uint32_t t = 0; t < ctx.k(); ++t) {
    std::vector<std::string> cross;
    for (const auto& e : marks.edges) {
      if (e.a != t && e.b != t) continue;
      std::uint32_t other = e.a == t ? e.b : e.a;
      if (marks.component[other] == marks.component[t]) continue;
      auto common = shared_variables(ctx.atoms[t], ctx.atoms[other]);
      cross.insert(cross.end(), common.begin(), common.end());
    }
    std::sort(cross.begin(), cross.end());
    cross.erase(std::unique(cross.begin(), cross.end()), cross.end());
    for (Term& term : rewritten[t].terms)
      if (term.is_variable() && std::binary_search(cross.begin(), cross.end(), term.text))
        term.text = detail::fresh_variable(term.text, ctx.tables[t], generation);
  }
  DecompositionContext renamed = ctx;
  renamed.atoms = std::move(rewritten);

  std::vector<std::uint32_t> group_of_vertex(ctx.n());
  for (std::uint32_t v = 0; v < ctx.n(); ++v)
    group_of_vertex[v] = marks.component[ctx.graph.table[v]];
  auto children = detail::split_context(renamed, group_of_vertex, marks.components, marks.component);
  for (auto& c : children) c.next = DecompositionContext::Step::Row;
  return children;
}

// ---------------------------------------------------------------------------

enum class RoOutcome : std::uint8_t { Success, NotReadOnce, EmptyResult };

struct RoStats {
  std::size_t depth = 0;  // deepest chain of recursive calls, root call = 1
  std::size_t row_decomps = 0;
  std::size_t table_decomps = 0;
  std::size_t exclusion_checks = 0;
};

struct RoResult {
  RoOutcome outcome = RoOutcome::NotReadOnce;
  std::optional<ReadOnceTree> tree;
  RoStats stats;
};

struct CompRoOptions {
  /// Run both decompositions at every call and throw std::logic_error if
  /// both succeed.
  bool verify_exclusion = false;
  /// Called after each successful decomposition with the parent and its
  /// children.
  std::function<void(const DecompositionContext&, std::span<const DecompositionContext>,
                     DecompositionContext::Step)>
      on_decompose;
};

/// One context per connected component of the table-adjacency graph, over
/// the instance's tuples for the query's subgoals. Every tuple must be a
/// vertex of `gc` (prune unused tuples first).
inline std::vector<DecompositionContext> root_contexts(const Query& q, const Instance& inst,
                                                       const CoGraph& gc,
                                                       const TableAdjacencyGraph& gt) {
  std::vector<DecompositionContext> out;
  for (const auto& comp : gt.components()) {
    DecompositionContext ctx;
    std::unordered_map<std::uint32_t, std::uint32_t> local;
    for (std::uint32_t sg : comp) {
      const Relation* rel = inst.find(q.atom(sg).relation);
      if (rel == nullptr) throw Error(ErrorCode::Schema, "relation '" + q.atom(sg).relation + "' missing");
      auto t = static_cast<std::uint32_t>(ctx.tables.size());
      ctx.tables.push_back(sg);
      ctx.atoms.push_back(q.atom(sg));
      ctx.tuples.emplace_back();
      for (const TupleRow& row : rel->rows) {
        if (!gc.index_of(row.var))
          throw Error(ErrorCode::InvalidArgument,
                      "tuple " + inst.name_of(row.var) + " is not in the co-table graph");
        local.emplace(row.var.value, static_cast<std::uint32_t>(ctx.graph.vertices.size()));
        ctx.graph.vertices.push_back(row.var);
        ctx.graph.table.push_back(t);
        ctx.tuples.back().push_back(row.var);
      }
    }
    ctx.graph.adj.resize(ctx.graph.vertices.size());
    for (std::uint32_t v = 0; v < ctx.graph.vertices.size(); ++v) {
      std::uint32_t gi = *gc.index_of(ctx.graph.vertices[v]);
      for (std::uint32_t w : gc.neighbors(gi)) {
        auto it = local.find(gc.vertices()[w].value);
        if (it != local.end()) ctx.graph.adj[v].push_back(it->second);
      }
    }
    out.push_back(std::move(ctx));
  }
  return out;
}

namespace detail {

class CompRo {
 public:
  CompRo(const TableAdjacencyGraph& gt, const CompRoOptions& opts, RoStats& stats)
      : gt_(gt), opts_(opts), stats_(stats) {}

  std::optional<ReadOnceTree> solve(const DecompositionContext& ctx) {
    stats_.depth = std::max(stats_.depth, ctx.depth);
    if (ctx.k() == 1) {
      const auto& tuples = ctx.tuples.front();
      if (tuples.size() == 1) return ReadOnceTree::leaf(tuples.front());
      std::vector<ReadOnceTree> leaves;
      for (VarId v : tuples) leaves.push_back(ReadOnceTree::leaf(v));
      return ReadOnceTree::sum(std::move(leaves));
    }

    std::optional<std::vector<DecompositionContext>> rows, tables;
    if (opts_.verify_exclusion) {
      rows = row_decomp(ctx);
      tables = table_decomp(ctx, gt_, ++generation_);
      ++stats_.exclusion_checks;
      if (rows && tables)
        throw std::logic_error("row and table decomposition both succeeded");
    } else if (ctx.next == DecompositionContext::Step::Row) {
      rows = row_decomp(ctx);
    } else {
      tables = table_decomp(ctx, gt_, ++generation_);
    }

    if (ctx.next == DecompositionContext::Step::Row) {
      if (!rows) return std::nullopt;
      ++stats_.row_decomps;
      if (opts_.on_decompose) opts_.on_decompose(ctx, *rows, ctx.next);
      return combine(*rows, ReadOnceTree::Kind::Sum);
    }
    if (!tables) return std::nullopt;
    ++stats_.table_decomps;
    if (opts_.on_decompose) opts_.on_decompose(ctx, *tables, ctx.next);
    return combine(*tables, ReadOnceTree::Kind::Product);
  }

 private:
  std::optional<ReadOnceTree> combine(const std::vector<DecompositionContext>& children,
                                      ReadOnceTree::Kind kind) {
    std::vector<ReadOnceTree> parts;
    parts.reserve(children.size());
    for (const DecompositionContext& c : children) {
      auto sub = solve(c);
      if (!sub) return std::nullopt;
      parts.push_back(std::move(*sub));
    }
    return ReadOnceTree{kind, VarId{}, std::move(parts)};
  }

  const TableAdjacencyGraph& gt_;
  const CompRoOptions& opts_;
  RoStats& stats_;
  std::uint64_t generation_ = 0;
};

}  // namespace detail

/// Decides whether the query's answer over `inst` is read-once and, if so,
/// returns its canonical read-once form. `gc` must be the co-table graph of
/// the same query and instance, and `inst` must hold only used tuples.
inline RoResult comp_ro(const Query& q, const Instance& inst, const CoGraph& gc,
                        const TableAdjacencyGraph& gt, const CompRoOptions& opts = {}) {
  RoResult result;
  for (const Atom& a : q.atoms()) {
    const Relation* rel = inst.find(a.relation);
    if (rel == nullptr) throw Error(ErrorCode::Schema, "relation '" + a.relation + "' missing");
    if (rel->rows.empty()) {
      result.outcome = RoOutcome::EmptyResult;
      return result;
    }
  }

  std::vector<DecompositionContext> roots = root_contexts(q, inst, gc, gt);
  detail::CompRo solver(gt, opts, result.stats);
  std::vector<ReadOnceTree> factors;
  for (DecompositionContext& ctx : roots) {
    if (ctx.k() > 1)
      ctx.next = row_decomp(ctx) ? DecompositionContext::Step::Row : DecompositionContext::Step::Table;
    auto tree = solver.solve(ctx);
    if (!tree) {
      result.outcome = RoOutcome::NotReadOnce;
      return result;
    }
    factors.push_back(std::move(*tree));
  }
  ReadOnceTree whole =
      factors.size() == 1 ? std::move(factors.front()) : ReadOnceTree::product(std::move(factors));
  result.outcome = RoOutcome::Success;
  result.tree = canonicalize(whole);
  return result;
}

}  // namespace roq
