#pragma once

// Boolean conjunctive queries without self-joins, in rule form, and the
// table-adjacency graph over their subgoals.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "roq/error.hpp"
#include "roq/instance.hpp"

namespace roq {

struct Term {
  enum class Kind : std::uint8_t { Variable, Constant };

  Kind kind = Kind::Variable;
  std::string text;

  static Term variable(std::string name) { return {Kind::Variable, std::move(name)}; }
  static Term constant(std::string value) { return {Kind::Constant, std::move(value)}; }

  bool is_variable() const { return kind == Kind::Variable; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct Atom {
  std::string relation;
  std::vector<Term> terms;

  /// Sorted distinct FO variables of the subgoal.
  std::vector<std::string> variables() const {
    std::vector<std::string> out;
    for (const Term& t : terms)
      if (t.is_variable()) out.push_back(t.text);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Sorted intersection of the FO variables of two subgoals.
inline std::vector<std::string> shared_variables(const Atom& a, const Atom& b) {
  std::vector<std::string> va = a.variables();
  std::vector<std::string> vb = b.variables();
  std::vector<std::string> out;
  std::set_intersection(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(out));
  return out;
}

class Query {
 public:
  Query() = default;

  explicit Query(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw Error(ErrorCode::Parse, "query has no subgoals");
    std::unordered_set<std::string> seen;
    for (const Atom& a : atoms_) {
      if (!seen.insert(a.relation).second)
        throw Error(ErrorCode::SelfJoin, "relation '" + a.relation +
                                             "' appears in more than one subgoal");
    }
  }

  std::span<const Atom> atoms() const { return atoms_; }
  const Atom& atom(std::size_t i) const { return atoms_.at(i); }
  std::size_t k() const { return atoms_.size(); }

  std::size_t alpha() const {
    std::size_t a = 0;
    for (const Atom& at : atoms_) a = std::max(a, at.terms.size());
    return a;
  }

  std::optional<std::size_t> index_of(std::string_view relation) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i].relation == relation) return i;
    return std::nullopt;
  }

  /// Throws if a subgoal names a missing relation or has the wrong arity.
  void check_against(const Instance& inst) const {
    for (const Atom& a : atoms_) {
      const Relation* r = inst.find(a.relation);
      if (r == nullptr)
        throw Error(ErrorCode::Schema, "query relation '" + a.relation + "' not in instance");
      if (r->arity() != a.terms.size())
        throw Error(ErrorCode::Schema, "subgoal " + a.relation + " has arity " +
                                           std::to_string(a.terms.size()) +
                                           " but the relation has arity " +
                                           std::to_string(r->arity()));
    }
  }

  std::string to_string() const {
    std::string out = "Q() :- ";
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (i > 0) out += ", ";
      out += atoms_[i].relation;
      out += '(';
      for (std::size_t j = 0; j < atoms_[i].terms.size(); ++j) {
        if (j > 0) out += ',';
        const Term& t = atoms_[i].terms[j];
        bool numeral = !t.text.empty() &&
                       std::all_of(t.text.begin(), t.text.end(),
                                   [](unsigned char c) { return std::isdigit(c); });
        if (t.is_variable() || numeral) {
          out += t.text;
        } else {
          out += '\'' + t.text + '\'';
        }
      }
      out += ')';
    }
    out += '.';
    return out;
  }

  friend bool operator==(const Query&, const Query&) = default;

 private:
  std::vector<Atom> atoms_;
};

namespace detail {

class QueryLexer {
 public:
  explicit QueryLexer(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  bool try_consume(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!try_consume(tok)) fail("expected '" + std::string(tok) + "'");
  }

  bool peek_ident() {
    skip_ws();
    return pos_ < text_.size() && is_ident_start(text_[pos_]);
  }

  std::string ident() {
    skip_ws();
    if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) fail("expected identifier");
    std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Term term() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected term");
    char c = text_[pos_];
    if (c == '\'') {
      std::size_t close = text_.find('\'', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated quoted constant");
      std::string value(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return Term::constant(std::move(value));
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ < text_.size() && is_ident_char(text_[pos_])) fail("malformed numeral");
      return Term::constant(std::string(text_.substr(start, pos_ - start)));
    }
    return Term::variable(ident());
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::Parse, "query syntax error at offset " + std::to_string(pos_) +
                                      ": " + msg);
  }

 private:
  static bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses `Q() :- R(x), S(x,'c'), T(3).`
///
/// Unquoted identifiers are FO variables; single-quoted strings and bare
/// numerals are constants.
inline Query parse_query(std::string_view text) {
  detail::QueryLexer lex(text);
  lex.ident();
  lex.expect("(");
  if (!lex.try_consume(")")) {
    if (lex.peek_ident())
      throw Error(ErrorCode::HeadVariable, "query head must be empty (boolean query)");
    lex.fail("expected ')'");
  }
  lex.expect(":-");
  std::vector<Atom> atoms;
  do {
    Atom a;
    a.relation = lex.ident();
    lex.expect("(");
    do {
      a.terms.push_back(lex.term());
    } while (lex.try_consume(","));
    lex.expect(")");
    atoms.push_back(std::move(a));
  } while (lex.try_consume(","));
  lex.expect(".");
  if (!lex.at_end()) lex.fail("trailing input after '.'");
  return Query(std::move(atoms));
}

// ---------------------------------------------------------------------------
// Table-adjacency graph

struct AdjacencyEdge {
  std::uint32_t a = 0;  // subgoal index, a < b
  std::uint32_t b = 0;
  std::vector<std::string> shared;  // sorted, non-empty
};

class TableAdjacencyGraph {
 public:
  TableAdjacencyGraph() = default;

  TableAdjacencyGraph(std::vector<std::string> tables, std::vector<AdjacencyEdge> edges)
      : tables_(std::move(tables)),
        edges_(std::move(edges)),
        matrix_(tables_.size() * tables_.size(), kNone),
        neighbors_(tables_.size()) {
    std::sort(edges_.begin(), edges_.end(), [](const AdjacencyEdge& x, const AdjacencyEdge& y) {
      return std::pair(x.a, x.b) < std::pair(y.a, y.b);
    });
    for (std::uint32_t e = 0; e < edges_.size(); ++e) {
      const AdjacencyEdge& ed = edges_[e];
      matrix_[ed.a * tables_.size() + ed.b] = e;
      matrix_[ed.b * tables_.size() + ed.a] = e;
      neighbors_[ed.a].push_back(ed.b);
      neighbors_[ed.b].push_back(ed.a);
    }
  }

  std::size_t k() const { return tables_.size(); }
  std::span<const std::string> tables() const { return tables_; }
  std::span<const AdjacencyEdge> edges() const { return edges_; }
  std::size_t m() const { return edges_.size(); }

  bool adjacent(std::uint32_t i, std::uint32_t j) const {
    return i < k() && j < k() && matrix_[i * k() + j] != kNone;
  }

  const AdjacencyEdge* edge(std::uint32_t i, std::uint32_t j) const {
    if (!adjacent(i, j)) return nullptr;
    return &edges_[matrix_[i * k() + j]];
  }

  std::span<const std::uint32_t> neighbors(std::uint32_t i) const { return neighbors_[i]; }

  /// Connected components as sorted lists of subgoal indices.
  std::vector<std::vector<std::uint32_t>> components() const {
    std::vector<int> comp(k(), -1);
    std::vector<std::vector<std::uint32_t>> out;
    for (std::uint32_t s = 0; s < k(); ++s) {
      if (comp[s] >= 0) continue;
      std::vector<std::uint32_t> members{s};
      comp[s] = static_cast<int>(out.size());
      for (std::size_t h = 0; h < members.size(); ++h) {
        for (std::uint32_t nb : neighbors_[members[h]]) {
          if (comp[nb] < 0) {
            comp[nb] = comp[s];
            members.push_back(nb);
          }
        }
      }
      std::sort(members.begin(), members.end());
      out.push_back(std::move(members));
    }
    return out;
  }

 private:
  static constexpr std::uint32_t kNone = 0xffffffffu;

  std::vector<std::string> tables_;
  std::vector<AdjacencyEdge> edges_;
  std::vector<std::uint32_t> matrix_;
  std::vector<std::vector<std::uint32_t>> neighbors_;
};

/// Pairs of subgoals sharing at least one FO variable, found by sorting each
/// subgoal's variables once and merging pairwise.
inline TableAdjacencyGraph table_adjacency(const Query& q) {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> vars;
  for (const Atom& a : q.atoms()) {
    names.push_back(a.relation);
    vars.push_back(a.variables());
  }
  std::vector<AdjacencyEdge> edges;
  for (std::uint32_t i = 0; i < vars.size(); ++i) {
    for (std::uint32_t j = i + 1; j < vars.size(); ++j) {
      std::vector<std::string> common;
      std::set_intersection(vars[i].begin(), vars[i].end(), vars[j].begin(), vars[j].end(),
                            std::back_inserter(common));
      if (!common.empty()) edges.push_back({i, j, std::move(common)});
    }
  }
  return TableAdjacencyGraph(std::move(names), std::move(edges));
}

}  // namespace roq
