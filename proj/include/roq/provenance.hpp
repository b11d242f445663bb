#pragma once

// SPJ plans over event tables and the provenance DAG they build: joins add
// And nodes, projections add Or nodes, and anything no longer reachable
// from a surviving row is dropped.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roq/error.hpp"
#include "roq/expr.hpp"
#include "roq/instance.hpp"
#include "roq/query.hpp"

namespace roq {

// ---------------------------------------------------------------------------
// Plans

struct ScanSelection {
  std::vector<std::pair<std::size_t, std::string>> constants;  // column == value
  std::vector<std::pair<std::size_t, std::size_t>> equalities;  // column == column
};

struct Plan {
  enum class Op : std::uint8_t { Scan, Join, Project };

  Op op = Op::Scan;
  std::uint32_t subgoal = 0;         // Scan
  ScanSelection selection;           // Scan
  std::vector<std::string> kept;     // Project
  std::vector<std::string> join_on;  // Join: equated variables
  std::vector<std::string> columns;  // output FO variables
  std::vector<Plan> inputs;

  static Plan scan(const Query& q, std::uint32_t subgoal) {
    const Atom& atom = q.atom(subgoal);
    Plan p;
    p.op = Op::Scan;
    p.subgoal = subgoal;
    for (std::size_t i = 0; i < atom.terms.size(); ++i) {
      const Term& t = atom.terms[i];
      if (!t.is_variable()) {
        p.selection.constants.emplace_back(i, t.text);
        continue;
      }
      auto it = std::find(p.columns.begin(), p.columns.end(), t.text);
      if (it == p.columns.end()) {
        p.columns.push_back(t.text);
      } else {
        for (std::size_t j = 0; j < i; ++j) {
          if (atom.terms[j] == t) {
            p.selection.equalities.emplace_back(j, i);
            break;
          }
        }
      }
    }
    return p;
  }

  static Plan join(Plan left, Plan right) {
    Plan p;
    p.op = Op::Join;
    p.columns = left.columns;
    for (const std::string& c : right.columns) {
      if (std::find(left.columns.begin(), left.columns.end(), c) != left.columns.end()) {
        p.join_on.push_back(c);
      } else {
        p.columns.push_back(c);
      }
    }
    p.inputs.push_back(std::move(left));
    p.inputs.push_back(std::move(right));
    return p;
  }

  static Plan project(Plan child, std::vector<std::string> kept) {
    for (const std::string& v : kept)
      if (std::find(child.columns.begin(), child.columns.end(), v) == child.columns.end())
        throw Error(ErrorCode::Plan, "projection onto unknown variable '" + v + "'");
    Plan p;
    p.op = Op::Project;
    p.columns = kept;
    p.kept = std::move(kept);
    p.inputs.push_back(std::move(child));
    return p;
  }

  std::vector<std::uint32_t> subgoals() const {
    if (op == Op::Scan) return {subgoal};
    std::vector<std::uint32_t> out;
    for (const Plan& in : inputs) {
      auto sub = in.subgoals();
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }

  std::string to_string(const Query& q) const {
    switch (op) {
      case Op::Scan:
        return "(scan " + q.atom(subgoal).relation + ")";
      case Op::Join:
        return "(join " + inputs[0].to_string(q) + " " + inputs[1].to_string(q) + ")";
      case Op::Project: {
        std::string vars;
        for (const std::string& v : kept) vars += (vars.empty() ? "" : " ") + v;
        return "(project (" + vars + ") " + inputs[0].to_string(q) + ")";
      }
    }
    return {};
  }
};

/// Left-deep join in subgoal order under a final empty projection.
inline Plan default_plan(const Query& q) {
  Plan p = Plan::scan(q, 0);
  for (std::uint32_t i = 1; i < q.k(); ++i) p = Plan::join(std::move(p), Plan::scan(q, i));
  return Plan::project(std::move(p), {});
}

/// Right-deep join in subgoal order under a final empty projection.
inline Plan right_deep_plan(const Query& q) {
  auto k = static_cast<std::uint32_t>(q.k());
  Plan p = Plan::scan(q, k - 1);
  for (std::uint32_t i = k - 1; i-- > 0;) p = Plan::join(Plan::scan(q, i), std::move(p));
  return Plan::project(std::move(p), {});
}

/// Throws unless `plan` computes the boolean query `q`: every subgoal scanned
/// exactly once, an empty projection at the root, and no intermediate
/// projection dropping a variable still needed outside its subtree.
inline void validate_plan(const Plan& plan, const Query& q) {
  if (plan.op != Plan::Op::Project || !plan.kept.empty())
    throw Error(ErrorCode::Plan, "plan root must be an empty projection");
  std::vector<std::uint32_t> used = plan.subgoals();
  std::sort(used.begin(), used.end());
  for (std::uint32_t i = 0; i < q.k(); ++i) {
    auto c = std::count(used.begin(), used.end(), i);
    if (c != 1)
      throw Error(ErrorCode::Plan, "subgoal " + q.atom(i).relation + " scanned " +
                                       std::to_string(c) + " times");
  }
  if (used.size() != q.k()) throw Error(ErrorCode::Plan, "plan scans unknown subgoals");

  std::function<void(const Plan&, bool)> check = [&](const Plan& p, bool is_root) {
    if (p.op == Plan::Op::Join && p.inputs.size() != 2)
      throw Error(ErrorCode::Plan, "join must be binary");
    if (p.op == Plan::Op::Project && !is_root) {
      std::vector<std::uint32_t> inside = p.subgoals();
      for (const std::string& v : p.inputs[0].columns) {
        if (std::find(p.kept.begin(), p.kept.end(), v) != p.kept.end()) continue;
        for (std::uint32_t i = 0; i < q.k(); ++i) {
          if (std::find(inside.begin(), inside.end(), i) != inside.end()) continue;
          auto vars = q.atom(i).variables();
          if (std::binary_search(vars.begin(), vars.end(), v))
            throw Error(ErrorCode::Plan, "projection drops join variable '" + v + "'");
        }
      }
    }
    for (const Plan& in : p.inputs) check(in, false);
  };
  check(plan, true);
}

namespace detail {

class SexprReader {
 public:
  explicit SexprReader(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }
  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string symbol() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')')
      ++pos_;
    if (start == pos_) fail("expected symbol");
    return std::string(text_.substr(start, pos_ - start));
  }
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Parse, "plan syntax error at offset " + std::to_string(pos_) + ": " + msg);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline Plan read_plan(SexprReader& in, const Query& q) {
  in.expect('(');
  std::string head = in.symbol();
  Plan out;
  if (head == "scan") {
    std::string rel = in.symbol();
    auto idx = q.index_of(rel);
    if (!idx) throw Error(ErrorCode::Plan, "plan scans relation '" + rel + "' not in query");
    out = Plan::scan(q, static_cast<std::uint32_t>(*idx));
  } else if (head == "join") {
    Plan l = read_plan(in, q);
    Plan r = read_plan(in, q);
    out = Plan::join(std::move(l), std::move(r));
  } else if (head == "project") {
    in.expect('(');
    std::vector<std::string> kept;
    while (!in.peek(')')) kept.push_back(in.symbol());
    in.expect(')');
    out = Plan::project(read_plan(in, q), std::move(kept));
  } else {
    in.fail("unknown operator '" + head + "'");
  }
  in.expect(')');
  return out;
}

}  // namespace detail

/// Parses `(project () (join (scan R) (scan S)))` against `q` and validates it.
inline Plan parse_plan(std::string_view text, const Query& q) {
  detail::SexprReader in(text);
  Plan p = detail::read_plan(in, q);
  if (!in.at_end()) in.fail("trailing input");
  validate_plan(p, q);
  return p;
}

// ---------------------------------------------------------------------------
// Provenance DAG

using NodeId = std::uint32_t;

struct DagNode {
  enum class Kind : std::uint8_t { Leaf, And, Or };

  Kind kind = Kind::Leaf;
  VarId var{};                 // Leaf
  std::uint32_t subgoal = 0;   // Leaf: subgoal whose scan produced it
  std::uint32_t layer = 0;     // plan operator that created the node
  std::vector<NodeId> succ;
};

struct DagStats {
  std::size_t n = 0;       // leaves
  std::size_t n_H = 0;     // nodes
  std::size_t m_H = 0;     // edges
  std::size_t beta_H = 0;  // widest layer
};

/// Nodes are stored so that every successor id is smaller than its
/// predecessor's; ascending id order is a reverse topological order.
class ProvenanceDag {
 public:
  ProvenanceDag() = default;
  ProvenanceDag(std::vector<DagNode> nodes, NodeId root, std::uint32_t layers)
      : nodes_(std::move(nodes)), root_(root), layers_(layers) {}

  std::span<const DagNode> nodes() const { return nodes_; }
  const DagNode& node(NodeId id) const { return nodes_.at(id); }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  std::uint32_t layer_count() const { return layers_; }

  /// Sorted leaf variables.
  std::vector<VarId> variables() const {
    std::vector<VarId> out;
    for (const DagNode& n : nodes_)
      if (n.kind == DagNode::Kind::Leaf) out.push_back(n.var);
    std::sort(out.begin(), out.end());
    return out;
  }

  DagStats stats() const {
    DagStats s;
    s.n_H = nodes_.size();
    std::vector<std::size_t> per_layer(layers_, 0);
    for (const DagNode& n : nodes_) {
      s.m_H += n.succ.size();
      if (n.kind == DagNode::Kind::Leaf) ++s.n;
      ++per_layer.at(n.layer);
    }
    for (std::size_t c : per_layer) s.beta_H = std::max(s.beta_H, c);
    return s;
  }

  /// Throws std::logic_error on any structural violation: successor order,
  /// node arity, a second root, unreachable nodes, a repeated leaf variable,
  /// or an And node whose two successors share a variable.
  void validate() const {
    if (nodes_.empty() || root_ >= nodes_.size())
      throw std::logic_error("provenance DAG has no root");
    std::vector<std::size_t> indeg(nodes_.size(), 0);
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      const DagNode& n = nodes_[u];
      switch (n.kind) {
        case DagNode::Kind::Leaf:
          if (!n.succ.empty()) throw std::logic_error("leaf with successors");
          break;
        case DagNode::Kind::And:
          if (n.succ.size() != 2) throw std::logic_error("And node without exactly two successors");
          break;
        case DagNode::Kind::Or:
          if (n.succ.empty()) throw std::logic_error("Or node without successors");
          break;
      }
      for (NodeId v : n.succ) {
        if (v >= u) throw std::logic_error("successor id not below predecessor id");
        ++indeg[v];
      }
    }
    for (NodeId u = 0; u < nodes_.size(); ++u)
      if (u != root_ && indeg[u] == 0) throw std::logic_error("node unreachable from the root");
    if (indeg[root_] != 0) throw std::logic_error("root has a predecessor");

    std::vector<VarId> leaves = variables();
    if (std::adjacent_find(leaves.begin(), leaves.end()) != leaves.end())
      throw std::logic_error("variable labels two leaves");
    std::unordered_map<std::uint32_t, std::size_t> slot;
    for (std::size_t i = 0; i < leaves.size(); ++i) slot[leaves[i].value] = i;
    const std::size_t words = (leaves.size() + 63) / 64;
    std::vector<std::vector<std::uint64_t>> vars(nodes_.size(), std::vector<std::uint64_t>(words));
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      const DagNode& n = nodes_[u];
      if (n.kind == DagNode::Kind::Leaf) {
        std::size_t s = slot[n.var.value];
        vars[u][s / 64] |= std::uint64_t{1} << (s % 64);
        continue;
      }
      if (n.kind == DagNode::Kind::And) {
        for (std::size_t w = 0; w < words; ++w)
          if (vars[n.succ[0]][w] & vars[n.succ[1]][w])
            throw std::logic_error("And node successors share a variable");
      }
      for (NodeId v : n.succ)
        for (std::size_t w = 0; w < words; ++w) vars[u][w] |= vars[v][w];
    }
  }

 private:
  std::vector<DagNode> nodes_;
  NodeId root_ = 0;
  std::uint32_t layers_ = 0;
};

inline DagStats dag_stats(const ProvenanceDag& dag) { return dag.stats(); }

struct EventRow {
  std::vector<std::string> values;
  NodeId node = 0;
};

struct EventTable {
  std::vector<std::string> columns;
  std::vector<EventRow> rows;
};

struct PlanResult {
  EventTable table;
  std::optional<ProvenanceDag> dag;  // empty when the query is unsatisfied

  bool empty() const { return !dag.has_value(); }
};

namespace detail {

class DagBuilder {
 public:
  NodeId add(DagNode n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  std::uint32_t next_layer() { return layers_++; }

  EventTable eval(const Plan& p, const Query& q, const Instance& inst) {
    switch (p.op) {
      case Plan::Op::Scan: return scan(p, q, inst);
      case Plan::Op::Join: return join(p, q, inst);
      case Plan::Op::Project: return project(p, q, inst);
    }
    return {};
  }

  /// Keeps only nodes reachable from `table`'s rows, renumbering in order.
  PlanResult finish(EventTable table) {
    PlanResult out;
    if (table.rows.empty()) {
      out.table = std::move(table);
      return out;
    }
    if (table.rows.size() != 1)
      throw std::logic_error("boolean plan produced more than one answer row");
    std::vector<bool> live(nodes_.size(), false);
    for (const EventRow& r : table.rows) live[r.node] = true;
    for (std::size_t u = nodes_.size(); u-- > 0;)
      if (live[u])
        for (NodeId v : nodes_[u].succ) live[v] = true;
    std::vector<NodeId> remap(nodes_.size(), 0);
    std::vector<DagNode> kept;
    for (NodeId u = 0; u < nodes_.size(); ++u) {
      if (!live[u]) continue;
      remap[u] = static_cast<NodeId>(kept.size());
      DagNode n = std::move(nodes_[u]);
      for (NodeId& v : n.succ) v = remap[v];
      kept.push_back(std::move(n));
    }
    for (EventRow& r : table.rows) r.node = remap[r.node];
    NodeId root = table.rows.front().node;
    out.table = std::move(table);
    out.dag.emplace(std::move(kept), root, layers_);
    return out;
  }

 private:
  EventTable scan(const Plan& p, const Query& q, const Instance& inst) {
    const Atom& atom = q.atom(p.subgoal);
    const Relation* rel = inst.find(atom.relation);
    if (rel == nullptr) throw Error(ErrorCode::Schema, "relation '" + atom.relation + "' missing");
    if (rel->arity() != atom.terms.size())
      throw Error(ErrorCode::Schema, "arity mismatch for " + atom.relation);
    std::vector<std::size_t> positions;
    for (const std::string& c : p.columns) {
      for (std::size_t i = 0; i < atom.terms.size(); ++i) {
        if (atom.terms[i].is_variable() && atom.terms[i].text == c) {
          positions.push_back(i);
          break;
        }
      }
    }
    std::uint32_t layer = next_layer();
    EventTable out{p.columns, {}};
    for (const TupleRow& row : rel->rows) {
      bool keep = true;
      for (const auto& [col, value] : p.selection.constants) keep = keep && row.values[col] == value;
      for (const auto& [a, b] : p.selection.equalities) keep = keep && row.values[a] == row.values[b];
      if (!keep) continue;
      EventRow er;
      for (std::size_t pos : positions) er.values.push_back(row.values[pos]);
      er.node = add(DagNode{DagNode::Kind::Leaf, row.var, p.subgoal, layer, {}});
      out.rows.push_back(std::move(er));
    }
    return out;
  }

  static std::string key_of(const EventRow& r, std::span<const std::size_t> cols) {
    std::string key;
    for (std::size_t c : cols) {
      key += r.values[c];
      key += '\t';
    }
    return key;
  }

  static std::size_t column_index(const EventTable& t, const std::string& name) {
    return static_cast<std::size_t>(
        std::find(t.columns.begin(), t.columns.end(), name) - t.columns.begin());
  }

  EventTable join(const Plan& p, const Query& q, const Instance& inst) {
    EventTable left = eval(p.inputs[0], q, inst);
    EventTable right = eval(p.inputs[1], q, inst);
    {
      auto ls = p.inputs[0].subgoals();
      for (std::uint32_t s : p.inputs[1].subgoals())
        if (std::find(ls.begin(), ls.end(), s) != ls.end())
          throw std::logic_error("join operands share a subgoal");
    }
    std::vector<std::size_t> lkey, rkey, rextra;
    for (const std::string& v : p.join_on) {
      lkey.push_back(column_index(left, v));
      rkey.push_back(column_index(right, v));
    }
    for (std::size_t c = 0; c < right.columns.size(); ++c)
      if (std::find(p.join_on.begin(), p.join_on.end(), right.columns[c]) == p.join_on.end())
        rextra.push_back(c);

    std::unordered_map<std::string, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < right.rows.size(); ++i)
      index[key_of(right.rows[i], rkey)].push_back(i);

    std::uint32_t layer = next_layer();
    EventTable out{p.columns, {}};
    for (const EventRow& l : left.rows) {
      auto it = index.find(key_of(l, lkey));
      if (it == index.end()) continue;
      for (std::size_t ri : it->second) {
        const EventRow& r = right.rows[ri];
        EventRow er;
        er.values = l.values;
        for (std::size_t c : rextra) er.values.push_back(r.values[c]);
        er.node = add(DagNode{DagNode::Kind::And, VarId{}, 0, layer, {l.node, r.node}});
        out.rows.push_back(std::move(er));
      }
    }
    return out;
  }

  EventTable project(const Plan& p, const Query& q, const Instance& inst) {
    EventTable in = eval(p.inputs[0], q, inst);
    std::vector<std::size_t> cols;
    for (const std::string& v : p.kept) cols.push_back(column_index(in, v));
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::vector<NodeId>> members;
    std::vector<std::vector<std::string>> values;
    for (const EventRow& r : in.rows) {
      auto [it, fresh] = group_of.emplace(key_of(r, cols), members.size());
      if (fresh) {
        members.emplace_back();
        std::vector<std::string> v;
        for (std::size_t c : cols) v.push_back(r.values[c]);
        values.push_back(std::move(v));
      }
      members[it->second].push_back(r.node);
    }
    std::uint32_t layer = next_layer();
    EventTable out{p.columns, {}};
    for (std::size_t g = 0; g < members.size(); ++g) {
      NodeId id = add(DagNode{DagNode::Kind::Or, VarId{}, 0, layer, std::move(members[g])});
      out.rows.push_back(EventRow{std::move(values[g]), id});
    }
    return out;
  }

  std::vector<DagNode> nodes_;
  std::uint32_t layers_ = 0;
};

}  // namespace detail

/// Evaluates `plan` over the event tables of `inst`, building the DAG bottom-up.
inline PlanResult eval_plan(const Plan& plan, const Query& q, const Instance& inst) {
  validate_plan(plan, q);
  q.check_against(inst);
  detail::DagBuilder builder;
  EventTable table = builder.eval(plan, q, inst);
  return builder.finish(std::move(table));
}

/// Expression read off the DAG from `from` (default: the root); shared
/// sub-DAGs become repeated subtrees.
inline Expr read_expression(const ProvenanceDag& dag, std::optional<NodeId> from = std::nullopt) {
  std::vector<std::optional<Expr>> memo(dag.size());
  std::function<Expr(NodeId)> go = [&](NodeId u) -> Expr {
    if (memo[u]) return *memo[u];
    const DagNode& n = dag.node(u);
    Expr e = Expr::var(n.var);
    if (n.kind != DagNode::Kind::Leaf) {
      std::vector<Expr> kids;
      kids.reserve(n.succ.size());
      for (NodeId v : n.succ) kids.push_back(go(v));
      e = n.kind == DagNode::Kind::And ? Expr::conj(std::move(kids)) : Expr::disj(std::move(kids));
    }
    memo[u] = e;
    return e;
  };
  return go(from.value_or(dag.root()));
}

}  // namespace roq
