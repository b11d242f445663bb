#pragma once

// Monotone event expressions over tuple variables, their irredundant DNF,
// read-once trees, and the exhaustive oracles used to check everything else.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "roq/error.hpp"

namespace roq {

struct VarId {
  std::uint32_t value = 0;
  friend auto operator<=>(const VarId&, const VarId&) = default;
};

inline constexpr std::size_t kDefaultEnumerationCap = 22;
inline constexpr std::size_t kDefaultImplicantCap = std::size_t{1} << 20;
inline constexpr double kProbTolerance = 1e-9;

/// Display names indexed by VarId; ids past the end render as "x<id>".
using NameTable = std::span<const std::string>;

inline std::string var_name(NameTable names, VarId v) {
  if (v.value < names.size()) return names[v.value];
  return "x" + std::to_string(v.value);
}

/// Probability per variable, dense over the id space.
class ProbMap {
 public:
  ProbMap() = default;
  explicit ProbMap(std::vector<double> dense) : p_(std::move(dense)) {
    for (std::size_t i = 0; i < p_.size(); ++i) check(p_[i]);
  }

  void set(VarId v, double p) {
    check(p);
    if (v.value >= p_.size()) p_.resize(v.value + 1, kMissing);
    p_[v.value] = p;
  }

  bool contains(VarId v) const {
    return v.value < p_.size() && !std::isnan(p_[v.value]);
  }

  double at(VarId v) const {
    if (!contains(v))
      throw Error(ErrorCode::InvalidArgument,
                  "no probability for variable " + std::to_string(v.value));
    return p_[v.value];
  }

 private:
  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  static void check(double p) {
    if (std::isnan(p)) return;
    if (!(p > 0.0 && p <= 1.0))
      throw Error(ErrorCode::Domain,
                  "probability " + std::to_string(p) + " outside (0,1]");
  }

  std::vector<double> p_;
};

// ---------------------------------------------------------------------------
// MonotoneExpr

/// Immutable monotone boolean expression. Copies share structure.
class Expr {
 public:
  enum class Kind : std::uint8_t { Var, And, Or };

  static Expr var(VarId v) { return Expr(Kind::Var, v, {}); }
  static Expr conj(std::vector<Expr> children) {
    return make(Kind::And, std::move(children));
  }
  static Expr disj(std::vector<Expr> children) {
    return make(Kind::Or, std::move(children));
  }

  Kind kind() const { return node_->kind; }
  VarId variable() const { return node_->var; }
  std::span<const Expr> children() const { return node_->children; }

  /// Opaque identity of the shared node, used for memoized traversals.
  const void* identity() const { return node_.get(); }

  /// Sorted distinct variables.
  std::vector<VarId> variables() const;

  /// Node count of the tree view (shared subtrees counted per use).
  std::size_t tree_size() const;

 private:
  struct Node {
    Kind kind;
    VarId var;
    std::vector<Expr> children;
  };

  Expr(Kind kind, VarId v, std::vector<Expr> children)
      : node_(std::make_shared<const Node>(Node{kind, v, std::move(children)})) {}

  static Expr make(Kind kind, std::vector<Expr> children) {
    if (children.empty())
      throw Error(ErrorCode::InvalidArgument,
                  "And/Or expression needs at least one child");
    return Expr(kind, VarId{}, std::move(children));
  }

  std::shared_ptr<const Node> node_;
};

inline std::vector<VarId> Expr::variables() const {
  std::vector<VarId> out;
  std::unordered_map<const void*, bool> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (!seen.emplace(e.identity(), true).second) return;
    if (e.kind() == Kind::Var) {
      out.push_back(e.variable());
      return;
    }
    for (const Expr& c : e.children()) walk(c);
  };
  walk(*this);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::size_t Expr::tree_size() const {
  std::unordered_map<const void*, std::size_t> memo;
  std::function<std::size_t(const Expr&)> walk = [&](const Expr& e) -> std::size_t {
    if (auto it = memo.find(e.identity()); it != memo.end()) return it->second;
    std::size_t s = 1;
    for (const Expr& c : e.children()) s += walk(c);
    memo.emplace(e.identity(), s);
    return s;
  };
  return walk(*this);
}

namespace detail {

inline void render_into(const Expr& e, NameTable names, bool in_product,
                        std::string& out) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      out += var_name(names, e.variable());
      return;
    case Expr::Kind::And: {
      bool first = true;
      for (const Expr& c : e.children()) {
        if (!first) out += '*';
        first = false;
        render_into(c, names, true, out);
      }
      return;
    }
    case Expr::Kind::Or: {
      // A unary Or is transparent.
      bool paren = in_product && e.children().size() > 1;
      if (paren) out += '(';
      bool first = true;
      for (const Expr& c : e.children()) {
        if (!first) out += '+';
        first = false;
        render_into(c, names, in_product && !paren, out);
      }
      if (paren) out += ')';
      return;
    }
  }
}

}  // namespace detail

/// `+` for Or, `*` for And, parentheses only where an Or sits under an And.
inline std::string render(const Expr& e, NameTable names = {}) {
  std::string out;
  detail::render_into(e, names, false, out);
  return out;
}

// ---------------------------------------------------------------------------
// Irredundant DNF

/// Sorted, duplicate-free list of variables.
using Implicant = std::vector<VarId>;

class Idnf {
 public:
  Idnf() = default;

  /// Applies idempotence and absorption; result is irredundant.
  static Idnf from_implicants(std::vector<Implicant> implicants);

  const std::vector<Implicant>& implicants() const { return implicants_; }
  std::size_t size() const { return implicants_.size(); }
  std::vector<VarId> variables() const;

  /// Cofactor with the given variables fixed to true.
  Idnf with_true(std::span<const VarId> fixed) const;

  friend bool operator==(const Idnf&, const Idnf&) = default;

 private:
  std::vector<Implicant> implicants_;  // lexicographically sorted
};

namespace detail {

inline void normalize_implicant(Implicant& imp) {
  std::sort(imp.begin(), imp.end());
  imp.erase(std::unique(imp.begin(), imp.end()), imp.end());
}

inline void dedupe_implicants(std::vector<Implicant>& imps) {
  std::sort(imps.begin(), imps.end());
  imps.erase(std::unique(imps.begin(), imps.end()), imps.end());
}

/// Drops every implicant that strictly contains another one.
inline std::vector<Implicant> absorb(std::vector<Implicant> imps) {
  dedupe_implicants(imps);
  std::vector<std::size_t> order(imps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return imps[a].size() < imps[b].size();
  });
  std::vector<Implicant> kept;
  kept.reserve(imps.size());
  for (std::size_t idx : order) {
    const Implicant& cand = imps[idx];
    bool absorbed = false;
    for (const Implicant& k : kept) {
      if (k.size() >= cand.size()) break;
      if (std::includes(cand.begin(), cand.end(), k.begin(), k.end())) {
        absorbed = true;
        break;
      }
    }
    if (!absorbed) kept.push_back(cand);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace detail

inline Idnf Idnf::from_implicants(std::vector<Implicant> implicants) {
  for (Implicant& imp : implicants) {
    detail::normalize_implicant(imp);
    if (imp.empty())
      throw Error(ErrorCode::InvalidArgument, "empty implicant");
  }
  Idnf out;
  out.implicants_ = detail::absorb(std::move(implicants));
  return out;
}

inline std::vector<VarId> Idnf::variables() const {
  std::vector<VarId> out;
  for (const Implicant& imp : implicants_) out.insert(out.end(), imp.begin(), imp.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline Idnf Idnf::with_true(std::span<const VarId> fixed) const {
  std::vector<VarId> sorted(fixed.begin(), fixed.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<Implicant> imps;
  imps.reserve(implicants_.size());
  for (const Implicant& imp : implicants_) {
    Implicant reduced;
    std::set_difference(imp.begin(), imp.end(), sorted.begin(), sorted.end(),
                        std::back_inserter(reduced));
    if (reduced.empty())
      throw Error(ErrorCode::InvalidArgument,
                  "cofactor is the constant true; not representable as Idnf");
    imps.push_back(std::move(reduced));
  }
  Idnf out;
  out.implicants_ = detail::absorb(std::move(imps));
  return out;
}

/// Expansion by distributivity and idempotence only (no absorption).
inline std::vector<Implicant> expand_distributive(
    const Expr& expr, std::size_t implicant_cap = kDefaultImplicantCap) {
  std::unordered_map<const void*, std::vector<Implicant>> memo;
  auto over_cap = [&](std::size_t n) {
    if (n > implicant_cap)
      throw Error(ErrorCode::ResourceLimit,
                  "DNF expansion exceeds " + std::to_string(implicant_cap) +
                      " implicants");
  };
  std::function<const std::vector<Implicant>&(const Expr&)> go =
      [&](const Expr& e) -> const std::vector<Implicant>& {
    if (auto it = memo.find(e.identity()); it != memo.end()) return it->second;
    std::vector<Implicant> result;
    switch (e.kind()) {
      case Expr::Kind::Var:
        result.push_back({e.variable()});
        break;
      case Expr::Kind::Or:
        for (const Expr& c : e.children()) {
          const auto& sub = go(c);
          result.insert(result.end(), sub.begin(), sub.end());
          over_cap(result.size());
        }
        detail::dedupe_implicants(result);
        break;
      case Expr::Kind::And: {
        result.push_back({});
        for (const Expr& c : e.children()) {
          const auto& sub = go(c);
          over_cap(result.size() * sub.size());
          std::vector<Implicant> next;
          next.reserve(result.size() * sub.size());
          for (const Implicant& a : result) {
            for (const Implicant& b : sub) {
              Implicant merged;
              merged.reserve(a.size() + b.size());
              std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                             std::back_inserter(merged));
              next.push_back(std::move(merged));
            }
          }
          detail::dedupe_implicants(next);
          result = std::move(next);
        }
        break;
      }
    }
    return memo.emplace(e.identity(), std::move(result)).first->second;
  };
  std::vector<Implicant> out = go(expr);
  detail::dedupe_implicants(out);
  return out;
}

inline Idnf expand_to_idnf(const Expr& expr,
                           std::size_t implicant_cap = kDefaultImplicantCap) {
  return Idnf::from_implicants(expand_distributive(expr, implicant_cap));
}

inline Expr to_expr(const Idnf& idnf) {
  std::vector<Expr> terms;
  for (const Implicant& imp : idnf.implicants()) {
    std::vector<Expr> factors;
    for (VarId v : imp) factors.push_back(Expr::var(v));
    terms.push_back(factors.size() == 1 ? factors.front()
                                        : Expr::conj(std::move(factors)));
  }
  if (terms.empty())
    throw Error(ErrorCode::InvalidArgument, "empty Idnf has no expression");
  return terms.size() == 1 ? terms.front() : Expr::disj(std::move(terms));
}

// ---------------------------------------------------------------------------
// Possible-world enumeration

namespace detail {

/// Expressions flattened into a post-ordered DAG over local variable slots,
/// evaluated in three-valued logic under a partial assignment.
class WorldEvaluator {
 public:
  static constexpr std::int8_t kUnknown = -1;

  WorldEvaluator(std::span<const Expr> roots, std::size_t cap) {
    for (const Expr& r : roots) {
      for (VarId v : r.variables()) vars_.push_back(v);
    }
    std::sort(vars_.begin(), vars_.end());
    vars_.erase(std::unique(vars_.begin(), vars_.end()), vars_.end());
    if (vars_.size() > cap)
      throw Error(ErrorCode::CapExceeded,
                  std::to_string(vars_.size()) +
                      " variables exceed the enumeration cap of " +
                      std::to_string(cap));
    occurrences_.assign(vars_.size(), 0);
    for (const Expr& r : roots) roots_.push_back(flatten(r));
    assignment_.assign(vars_.size(), kUnknown);
    values_.assign(nodes_.size(), kUnknown);

    order_.resize(vars_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
      return occurrences_[a] > occurrences_[b];
    });
  }

  std::span<const VarId> variables() const { return vars_; }
  /// Branching order: slots by descending occurrence count.
  std::span<const std::size_t> order() const { return order_; }

  void assign(std::size_t slot, std::int8_t value) { assignment_[slot] = value; }

  /// Three-valued value of each root under the current assignment.
  std::int8_t root_value(std::size_t root) {
    evaluate();
    return values_[roots_[root]];
  }

  void evaluate() {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.kind == Expr::Kind::Var) {
        values_[i] = assignment_[n.slot];
        continue;
      }
      bool is_and = n.kind == Expr::Kind::And;
      std::int8_t absorbing = is_and ? 0 : 1;
      bool unknown = false;
      std::int8_t v = is_and ? 1 : 0;
      for (std::uint32_t c = n.first; c < n.first + n.count; ++c) {
        std::int8_t cv = values_[edges_[c]];
        if (cv == absorbing) {
          v = absorbing;
          unknown = false;
          break;
        }
        if (cv == kUnknown) unknown = true;
      }
      values_[i] = unknown ? kUnknown : v;
    }
  }

 private:
  struct Node {
    Expr::Kind kind;
    std::uint32_t slot = 0;
    std::uint32_t first = 0;
    std::uint32_t count = 0;
  };

  std::uint32_t flatten(const Expr& e) {
    if (auto it = index_.find(e.identity()); it != index_.end()) {
      count_vars(e);
      return it->second;
    }
    Node n{e.kind()};
    if (e.kind() == Expr::Kind::Var) {
      auto pos = std::lower_bound(vars_.begin(), vars_.end(), e.variable());
      n.slot = static_cast<std::uint32_t>(pos - vars_.begin());
      ++occurrences_[n.slot];
    } else {
      std::vector<std::uint32_t> kids;
      kids.reserve(e.children().size());
      for (const Expr& c : e.children()) kids.push_back(flatten(c));
      n.first = static_cast<std::uint32_t>(edges_.size());
      n.count = static_cast<std::uint32_t>(kids.size());
      edges_.insert(edges_.end(), kids.begin(), kids.end());
    }
    nodes_.push_back(n);
    auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
    index_.emplace(e.identity(), id);
    return id;
  }

  // Shared subtrees still count toward occurrence frequency.
  void count_vars(const Expr& e) {
    if (e.kind() == Expr::Kind::Var) {
      auto pos = std::lower_bound(vars_.begin(), vars_.end(), e.variable());
      ++occurrences_[static_cast<std::size_t>(pos - vars_.begin())];
      return;
    }
    for (const Expr& c : e.children()) count_vars(c);
  }

  std::vector<VarId> vars_;
  std::vector<std::size_t> occurrences_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> edges_;
  std::vector<std::uint32_t> roots_;
  std::unordered_map<const void*, std::uint32_t> index_;
  std::vector<std::int8_t> assignment_;
  std::vector<std::int8_t> values_;
};

}  // namespace detail

/// Probability of `expr` over all possible worlds, by Shannon expansion on
/// the most frequent variables with early exit once the value is fixed.
inline double exact_probability(const Expr& expr, const ProbMap& p,
                                std::size_t cap = kDefaultEnumerationCap) {
  detail::WorldEvaluator ev(std::span<const Expr>(&expr, 1), cap);
  std::vector<double> prob;
  for (VarId v : ev.variables()) prob.push_back(p.at(v));
  auto order = ev.order();
  std::function<double(std::size_t)> go = [&](std::size_t depth) -> double {
    std::int8_t v = ev.root_value(0);
    if (v != detail::WorldEvaluator::kUnknown) return v;
    std::size_t slot = order[depth];
    ev.assign(slot, 1);
    double hi = go(depth + 1);
    ev.assign(slot, 0);
    double lo = go(depth + 1);
    ev.assign(slot, detail::WorldEvaluator::kUnknown);
    return prob[slot] * hi + (1.0 - prob[slot]) * lo;
  };
  return go(0);
}

/// True iff both expressions agree on every assignment of their variables.
inline bool equivalent_on_all_assignments(
    const Expr& a, const Expr& b, std::size_t cap = kDefaultEnumerationCap) {
  const Expr roots[] = {a, b};
  detail::WorldEvaluator ev(roots, cap);
  auto order = ev.order();
  std::function<bool(std::size_t)> go = [&](std::size_t depth) -> bool {
    std::int8_t va = ev.root_value(0);
    std::int8_t vb = ev.root_value(1);
    if (va != detail::WorldEvaluator::kUnknown &&
        vb != detail::WorldEvaluator::kUnknown)
      return va == vb;
    std::size_t slot = order[depth];
    ev.assign(slot, 1);
    bool ok = go(depth + 1);
    if (ok) {
      ev.assign(slot, 0);
      ok = go(depth + 1);
    }
    ev.assign(slot, detail::WorldEvaluator::kUnknown);
    return ok;
  };
  return go(0);
}

// ---------------------------------------------------------------------------
// Read-once trees

struct ReadOnceTree {
  enum class Kind : std::uint8_t { Leaf, Sum, Product };

  Kind kind = Kind::Leaf;
  VarId var{};
  std::vector<ReadOnceTree> children;

  static ReadOnceTree leaf(VarId v) { return {Kind::Leaf, v, {}}; }
  static ReadOnceTree sum(std::vector<ReadOnceTree> c) {
    return {Kind::Sum, VarId{}, std::move(c)};
  }
  static ReadOnceTree product(std::vector<ReadOnceTree> c) {
    return {Kind::Product, VarId{}, std::move(c)};
  }

  VarId min_var() const {
    if (kind == Kind::Leaf) return var;
    VarId m{std::numeric_limits<std::uint32_t>::max()};
    for (const ReadOnceTree& c : children) m = std::min(m, c.min_var());
    return m;
  }

  std::vector<VarId> variables() const {
    std::vector<VarId> out;
    collect(out);
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t leaf_count() const {
    if (kind == Kind::Leaf) return 1;
    std::size_t n = 0;
    for (const ReadOnceTree& c : children) n += c.leaf_count();
    return n;
  }

  friend bool operator==(const ReadOnceTree&, const ReadOnceTree&) = default;

 private:
  void collect(std::vector<VarId>& out) const {
    if (kind == Kind::Leaf) {
      out.push_back(var);
      return;
    }
    for (const ReadOnceTree& c : children) c.collect(out);
  }
};

/// Flattens same-kind nesting, collapses unary nodes, and orders children
/// by their minimum variable id.
inline ReadOnceTree canonicalize(const ReadOnceTree& tree) {
  if (tree.kind == ReadOnceTree::Kind::Leaf) return tree;
  std::vector<ReadOnceTree> flat;
  for (const ReadOnceTree& c : tree.children) {
    ReadOnceTree cc = canonicalize(c);
    if (cc.kind == tree.kind) {
      for (ReadOnceTree& g : cc.children) flat.push_back(std::move(g));
    } else {
      flat.push_back(std::move(cc));
    }
  }
  if (flat.empty())
    throw Error(ErrorCode::InvalidArgument, "internal read-once node without children");
  if (flat.size() == 1) return std::move(flat.front());
  std::sort(flat.begin(), flat.end(), [](const ReadOnceTree& a, const ReadOnceTree& b) {
    return a.min_var() < b.min_var();
  });
  return {tree.kind, VarId{}, std::move(flat)};
}

/// Checks the canonical read-once invariants: every variable once, internal
/// nodes with at least two children, strict Sum/Product alternation, and
/// children ordered by minimum variable.
inline bool is_canonical_read_once(const ReadOnceTree& tree) {
  std::vector<VarId> vars = tree.variables();
  if (std::adjacent_find(vars.begin(), vars.end()) != vars.end()) return false;
  std::function<bool(const ReadOnceTree&)> ok = [&](const ReadOnceTree& t) {
    if (t.kind == ReadOnceTree::Kind::Leaf) return t.children.empty();
    if (t.children.size() < 2) return false;
    for (std::size_t i = 0; i < t.children.size(); ++i) {
      const ReadOnceTree& c = t.children[i];
      if (c.kind == t.kind) return false;
      if (i > 0 && !(t.children[i - 1].min_var() < c.min_var())) return false;
      if (!ok(c)) return false;
    }
    return true;
  };
  return ok(tree);
}

/// Independent-event rules: products multiply, sums take 1 - prod(1 - p).
inline double readonce_probability(const ReadOnceTree& tree, const ProbMap& p) {
  switch (tree.kind) {
    case ReadOnceTree::Kind::Leaf:
      return p.at(tree.var);
    case ReadOnceTree::Kind::Product: {
      double r = 1.0;
      for (const ReadOnceTree& c : tree.children) r *= readonce_probability(c, p);
      return r;
    }
    case ReadOnceTree::Kind::Sum: {
      double miss = 1.0;
      for (const ReadOnceTree& c : tree.children) miss *= 1.0 - readonce_probability(c, p);
      return 1.0 - miss;
    }
  }
  return 0.0;
}

inline Expr to_expr(const ReadOnceTree& tree) {
  if (tree.kind == ReadOnceTree::Kind::Leaf) return Expr::var(tree.var);
  std::vector<Expr> kids;
  kids.reserve(tree.children.size());
  for (const ReadOnceTree& c : tree.children) kids.push_back(to_expr(c));
  return tree.kind == ReadOnceTree::Kind::Sum ? Expr::disj(std::move(kids))
                                              : Expr::conj(std::move(kids));
}

inline std::string render(const ReadOnceTree& tree, NameTable names = {}) {
  return render(to_expr(tree), names);
}

}  // namespace roq

template <>
struct std::hash<roq::VarId> {
  std::size_t operator()(const roq::VarId& v) const noexcept {
    return std::hash<std::uint32_t>{}(v.value);
  }
};
