#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "roq/roq.hpp"

namespace roq::testing {

struct Prepared {
  Generated gen;
  std::optional<ProvenanceDag> dag;
  Instance pruned;
  TableAdjacencyGraph gt;
  CoGraph gc;
};

inline Prepared prepare(Generated gen, const Plan* plan = nullptr) {
  Prepared p{std::move(gen), std::nullopt, {}, {}, {}};
  p.gt = table_adjacency(p.gen.query);
  PlanResult r = eval_plan(plan ? *plan : default_plan(p.gen.query), p.gen.query, p.gen.instance);
  if (r.empty()) return p;
  p.dag = std::move(*r.dag);
  p.pruned = p.gen.instance.restrict(p.dag->variables());
  p.gc = comp_cotable(*p.dag, p.gt, CoGraphMode::CoTable);
  return p;
}

/// The i-th member of the seeded random workload: k <= 4, arity <= 3, and
/// at most 30 tuples in total.
inline family::Random random_workload(std::uint64_t i) {
  family::Random f;
  f.k = 2 + i % 3;
  f.max_arity = 1 + (i / 3) % 3;
  f.rows = 2 + (i / 9) % 6;
  if (f.rows * f.k > 30) f.rows = 30 / f.k;
  f.domain = 2 + (i / 5) % 3;
  f.seed = 0x5eed0000 + i;
  return f;
}

/// IDNF of `q` over `inst`, or nullopt when the answer is empty.
inline std::optional<Idnf> idnf_of(const Query& q, const Instance& inst) {
  PlanResult r = eval_plan(default_plan(q), q, inst);
  if (r.empty()) return std::nullopt;
  return expand_to_idnf(read_expression(*r.dag));
}

/// All products of one implicant from each factor.
inline Idnf product_of(std::span<const Idnf> factors) {
  std::vector<Implicant> acc{Implicant{}};
  for (const Idnf& f : factors) {
    std::vector<Implicant> next;
    for (const Implicant& a : acc)
      for (const Implicant& b : f.implicants()) {
        Implicant c = a;
        c.insert(c.end(), b.begin(), b.end());
        next.push_back(std::move(c));
      }
    acc = std::move(next);
  }
  return Idnf::from_implicants(std::move(acc));
}

/// True when the parent's sub-query over its tuples has the same IDNF as
/// the conjunction of the rewritten child sub-queries over theirs.
inline bool rewrite_preserves_idnf(const DecompositionContext& parent,
                                   std::span<const DecompositionContext> children,
                                   const Instance& inst) {
  std::vector<VarId> pv = parent.variables();
  auto whole = idnf_of(parent.query(), inst.restrict(pv));
  std::vector<Idnf> parts;
  for (const DecompositionContext& c : children) {
    std::vector<VarId> cv = c.variables();
    auto part = idnf_of(c.query(), inst.restrict(cv));
    if (!part) return !whole.has_value();
    parts.push_back(std::move(*part));
  }
  return whole && *whole == product_of(parts);
}

inline std::size_t ceil_sqrt(std::size_t n) {
  std::size_t r = 0;
  while (r * r < n) ++r;
  return r;
}

inline std::size_t depth_bound(std::size_t k, std::size_t n) {
  return std::min(2 * k + 1, 4 * ceil_sqrt(n));
}

}  // namespace roq::testing
