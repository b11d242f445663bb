#pragma once

// Tuple-independent probabilistic instances: relations whose rows each carry
// a boolean variable and an occurrence probability.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "roq/error.hpp"
#include "roq/expr.hpp"

namespace roq {

struct TupleRow {
  std::vector<std::string> values;
  VarId var;
  double prob = 1.0;
};

struct Relation {
  std::string name;
  std::vector<std::string> attributes;
  std::vector<TupleRow> rows;

  std::size_t arity() const { return attributes.size(); }
};

inline constexpr std::uint32_t kNoRelation = std::numeric_limits<std::uint32_t>::max();

class InstanceBuilder;

/// Immutable instance. Variable ids index a shared table of names and
/// probabilities; a restricted instance keeps its parent's id space.
class Instance {
 public:
  Instance() : vars_(std::make_shared<const VarTable>()) {}

  std::span<const Relation> relations() const { return relations_; }

  const Relation* find(std::string_view name) const {
    for (const Relation& r : relations_)
      if (r.name == name) return &r;
    return nullptr;
  }

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < relations_.size(); ++i)
      if (relations_[i].name == name) return i;
    return std::nullopt;
  }

  /// Number of tuples currently present.
  std::size_t n() const {
    std::size_t total = 0;
    for (const Relation& r : relations_) total += r.rows.size();
    return total;
  }

  /// Size of the variable id space (the unrestricted tuple count).
  std::size_t id_space() const { return vars_->names.size(); }

  NameTable names() const { return vars_->names; }
  std::string name_of(VarId v) const { return var_name(vars_->names, v); }

  std::optional<VarId> lookup(std::string_view name) const {
    auto it = vars_->by_name.find(std::string(name));
    if (it == vars_->by_name.end()) return std::nullopt;
    return it->second;
  }

  /// Index of the relation that owns `v` in the unrestricted instance.
  std::uint32_t relation_of(VarId v) const {
    return v.value < vars_->relation.size() ? vars_->relation[v.value] : kNoRelation;
  }

  ProbMap probabilities() const { return ProbMap(vars_->prob); }

  std::vector<VarId> variables() const {
    std::vector<VarId> out;
    for (const Relation& r : relations_)
      for (const TupleRow& row : r.rows) out.push_back(row.var);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Same relations, keeping only rows whose variable is in `keep`.
  Instance restrict(std::span<const VarId> keep) const {
    std::vector<bool> mask(id_space(), false);
    for (VarId v : keep)
      if (v.value < mask.size()) mask[v.value] = true;
    Instance out;
    out.vars_ = vars_;
    out.relations_.reserve(relations_.size());
    for (const Relation& r : relations_) {
      Relation kept{r.name, r.attributes, {}};
      for (const TupleRow& row : r.rows)
        if (mask[row.var.value]) kept.rows.push_back(row);
      out.relations_.push_back(std::move(kept));
    }
    return out;
  }

 private:
  friend class InstanceBuilder;

  struct VarTable {
    std::vector<std::string> names;
    std::vector<double> prob;
    std::vector<std::uint32_t> relation;
    std::unordered_map<std::string, VarId> by_name;
  };

  std::vector<Relation> relations_;
  std::shared_ptr<const VarTable> vars_;
};

/// Assigns variable ids densely in insertion order and enforces the
/// instance invariants as rows arrive.
class InstanceBuilder {
 public:
  std::size_t add_relation(std::string name, std::vector<std::string> attributes) {
    if (name.empty()) throw Error(ErrorCode::Schema, "empty relation name");
    for (const Relation& r : relations_)
      if (r.name == name)
        throw Error(ErrorCode::Schema, "duplicate relation '" + name + "'");
    std::unordered_set<std::string> seen;
    for (const std::string& a : attributes) {
      if (a.empty() || a == "_var" || a == "_p")
        throw Error(ErrorCode::Schema, "invalid attribute name '" + a + "' in " + name);
      if (!seen.insert(a).second)
        throw Error(ErrorCode::Schema, "duplicate attribute '" + a + "' in " + name);
    }
    relations_.push_back(Relation{std::move(name), std::move(attributes), {}});
    row_keys_.emplace_back();
    return relations_.size() - 1;
  }

  /// Appends a row; an empty `name` generates `<relation>:<row number>`.
  VarId add_row(std::size_t relation, std::vector<std::string> values, double prob,
                std::string name = {}) {
    Relation& rel = relations_.at(relation);
    if (values.size() != rel.arity())
      throw Error(ErrorCode::Parse, "row of arity " + std::to_string(values.size()) +
                                        " in relation " + rel.name + " of arity " +
                                        std::to_string(rel.arity()));
    if (!(prob > 0.0 && prob <= 1.0))
      throw Error(ErrorCode::Domain, "probability " + std::to_string(prob) +
                                         " outside (0,1] in relation " + rel.name);
    for (const std::string& v : values)
      if (v.find_first_of("\t\n\r") != std::string::npos)
        throw Error(ErrorCode::Parse, "value contains a tab or newline in " + rel.name);
    std::string key;
    for (const std::string& v : values) {
      key += v;
      key += '\t';
    }
    if (!row_keys_[relation].insert(key).second)
      throw Error(ErrorCode::DuplicateTuple, "duplicate tuple in relation " + rel.name);
    if (name.empty()) name = rel.name + ":" + std::to_string(rel.rows.size() + 1);
    if (name.find_first_of("\t\n\r") != std::string::npos)
      throw Error(ErrorCode::Parse, "variable name contains a tab or newline");
    VarId id{static_cast<std::uint32_t>(vars_.names.size())};
    if (!vars_.by_name.emplace(name, id).second)
      throw Error(ErrorCode::DuplicateTuple, "duplicate variable name '" + name + "'");
    vars_.names.push_back(std::move(name));
    vars_.prob.push_back(prob);
    vars_.relation.push_back(static_cast<std::uint32_t>(relation));
    rel.rows.push_back(TupleRow{std::move(values), id, prob});
    return id;
  }

  Instance build() && {
    Instance out;
    out.relations_ = std::move(relations_);
    out.vars_ = std::make_shared<const Instance::VarTable>(std::move(vars_));
    return out;
  }

 private:
  std::vector<Relation> relations_;
  std::vector<std::unordered_set<std::string>> row_keys_;
  Instance::VarTable vars_;
};

// ---------------------------------------------------------------------------
// TSV directory format

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_probability(std::string_view text, const std::string& where) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorCode::Parse, where + ": malformed probability '" + std::string(text) + "'");
  if (!(value > 0.0 && value <= 1.0))
    throw Error(ErrorCode::Domain, where + ": probability " + std::string(text) +
                                       " outside (0,1]");
  return value;
}

inline std::string format_probability(double p) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, ptr);
}

inline void load_relation_file(InstanceBuilder& builder, const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
  const std::string rel_name = file.stem().string();
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorCode::Parse, file.string() + ": missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_tabs(line);
  if (header.empty() || header.back() != "_p")
    throw Error(ErrorCode::Parse, file.string() + ": header must end with _p");
  header.pop_back();
  bool has_var = !header.empty() && header.back() == "_var";
  if (has_var) header.pop_back();
  const std::size_t arity = header.size();
  const std::size_t width = arity + (has_var ? 2 : 1);
  std::size_t rel = builder.add_relation(rel_name, std::move(header));

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = file.string() + ":" + std::to_string(line_no);
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != width)
      throw Error(ErrorCode::Parse, where + ": expected " + std::to_string(width) +
                                        " fields, got " + std::to_string(fields.size()));
    double p = parse_probability(fields.back(), where);
    std::string name = has_var ? fields[arity] : std::string();
    if (has_var && name.empty())
      throw Error(ErrorCode::Parse, where + ": empty _var field");
    fields.resize(arity);
    try {
      builder.add_row(rel, std::move(fields), p, std::move(name));
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
  }
}

}  // namespace detail

/// Loads every `<relation>.tsv` in `dir`, in file-name order.
inline Instance load_instance(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(ErrorCode::Io, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".tsv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  InstanceBuilder builder;
  for (const auto& f : files) detail::load_relation_file(builder, f);
  return std::move(builder).build();
}

/// Writes one `<relation>.tsv` per relation with explicit `_var` names.
inline void save_instance(const Instance& inst, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const Relation& r : inst.relations()) {
    std::ofstream out(dir / (r.name + ".tsv"), std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / (r.name + ".tsv")).string());
    for (const std::string& a : r.attributes) out << a << '\t';
    out << "_var\t_p\n";
    for (const TupleRow& row : r.rows) {
      for (const std::string& v : row.values) out << v << '\t';
      out << inst.name_of(row.var) << '\t' << detail::format_probability(row.prob) << '\n';
    }
  }
}

}  // namespace roq
