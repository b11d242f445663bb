#pragma once

// Deterministic instance families for tests and benchmarks.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "roq/chain.hpp"
#include "roq/error.hpp"
#include "roq/instance.hpp"
#include "roq/query.hpp"

namespace roq {

namespace family {

/// The three-relation instance with tuples w1..w3, v1..v4, u1..u3.
struct Sample {};

/// n copies of a two-block pattern shaped like Sample: |R| = |T| = 3n and
/// |S| = 4n.
struct Blocks {
  std::size_t n = 1;
};

/// Two unary relations with n tuples each and no shared variable.
struct CrossProduct {
  std::size_t n = 1;
};

/// k binary relations R_i(x_i, y) sharing only y, n tuples each.
struct Star {
  std::size_t k = 3;
  std::size_t n = 4;
};

struct Chain {
  std::size_t n = 1;
};

/// k relations of arity 1..max_arity over a pool of FO variables, with
/// `rows` distinct random tuples each from a domain of `domain` values.
struct Random {
  std::size_t k = 3;
  std::size_t max_arity = 2;
  std::size_t rows = 4;
  std::size_t domain = 3;
  std::uint64_t seed = 0;
};

}  // namespace family

struct GenSpec {
  using Family = std::variant<family::Sample, family::Blocks, family::CrossProduct,
                              family::Star, family::Chain, family::Random>;

  GenSpec() = default;
  GenSpec(Family f, std::optional<double> p = std::nullopt) : family(f), uniform_p(p) {}

  Family family;
  /// Overrides every non-deterministic tuple's probability. Families default
  /// to 0.5 except Sample (its own values) and Random (drawn from (0.05, 0.95)).
  std::optional<double> uniform_p;
};

struct Generated {
  Instance instance;
  Query query;
};

namespace detail {

/// Seeded source whose output depends only on the 64-bit engine, not on
/// library distribution implementations.
class SeededSource {
 public:
  explicit SeededSource(std::uint64_t seed) : engine_(seed) {}

  std::size_t below(std::size_t bound) { return static_cast<std::size_t>(engine_() % bound); }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

inline Generated make_sample(std::optional<double> p) {
  InstanceBuilder b;
  auto r = b.add_relation("R", {"A"});
  auto s = b.add_relation("S", {"A", "B"});
  auto t = b.add_relation("T", {"B"});
  auto pr = [&](double v) { return p.value_or(v); };
  b.add_row(r, {"a1"}, pr(0.3), "w1");
  b.add_row(r, {"b1"}, pr(0.4), "w2");
  b.add_row(r, {"a2"}, pr(0.6), "w3");
  b.add_row(s, {"a1", "c1"}, pr(0.1), "v1");
  b.add_row(s, {"b1", "c1"}, pr(0.5), "v2");
  b.add_row(s, {"a2", "c2"}, pr(0.2), "v3");
  b.add_row(s, {"a2", "d2"}, pr(0.1), "v4");
  b.add_row(t, {"c1"}, pr(0.7), "u1");
  b.add_row(t, {"c2"}, pr(0.8), "u2");
  b.add_row(t, {"d2"}, pr(0.4), "u3");
  return {std::move(b).build(), parse_query("Q() :- R(x), S(x,y), T(y).")};
}

inline Generated make_blocks(std::size_t n, double p) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "Blocks needs n >= 1");
  InstanceBuilder b;
  auto r = b.add_relation("R", {"A"});
  auto s = b.add_relation("S", {"A", "B"});
  auto t = b.add_relation("T", {"B"});
  auto num = [](std::size_t i) { return std::to_string(i); };
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t odd = 2 * j - 1, even = 2 * j;
    b.add_row(r, {"a" + num(odd)}, p, "x" + num(odd));
    b.add_row(r, {"b" + num(odd)}, p, "y" + num(odd));
    b.add_row(r, {"a" + num(even)}, p, "x" + num(even));
  }
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t odd = 2 * j - 1, even = 2 * j;
    b.add_row(s, {"a" + num(odd), "c" + num(odd)}, p, "z" + num(4 * j - 3));
    b.add_row(s, {"b" + num(odd), "c" + num(odd)}, p, "z" + num(4 * j - 2));
    b.add_row(s, {"a" + num(even), "c" + num(even)}, p, "z" + num(4 * j - 1));
    b.add_row(s, {"a" + num(even), "d" + num(even)}, p, "z" + num(4 * j));
  }
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t odd = 2 * j - 1, even = 2 * j;
    b.add_row(t, {"c" + num(odd)}, p, "u" + num(odd));
    b.add_row(t, {"c" + num(even)}, p, "u" + num(even));
    b.add_row(t, {"d" + num(even)}, p, "v" + num(even));
  }
  return {std::move(b).build(), parse_query("Q() :- R(x), S(x,y), T(y).")};
}

inline Generated make_cross_product(std::size_t n, double p) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "CrossProduct needs n >= 1");
  InstanceBuilder b;
  auto r1 = b.add_relation("R1", {"A"});
  auto r2 = b.add_relation("R2", {"B"});
  for (std::size_t i = 1; i <= n; ++i) b.add_row(r1, {"a" + std::to_string(i)}, p, "r" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) b.add_row(r2, {"b" + std::to_string(i)}, p, "s" + std::to_string(i));
  return {std::move(b).build(), parse_query("Q() :- R1(x), R2(y).")};
}

inline Generated make_star(std::size_t k, std::size_t n, double p) {
  if (k < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "Star needs k >= 1 and n >= 1");
  InstanceBuilder b;
  const std::size_t hubs = (n + 1) / 2;
  std::string text = "Q() :- ";
  for (std::size_t i = 1; i <= k; ++i) {
    std::string rel = "R" + std::to_string(i);
    auto id = b.add_relation(rel, {"X", "Y"});
    for (std::size_t j = 0; j < n; ++j)
      b.add_row(id, {"e" + std::to_string(j), "h" + std::to_string(j % hubs)}, p,
                "r" + std::to_string(i) + "_" + std::to_string(j + 1));
    if (i > 1) text += ", ";
    text += rel + "(x" + std::to_string(i) + ",y)";
  }
  text += ".";
  return {std::move(b).build(), parse_query(text)};
}

inline Generated make_random(const family::Random& spec, std::optional<double> p) {
  if (spec.k < 1 || spec.max_arity < 1 || spec.rows < 1 || spec.domain < 1)
    throw Error(ErrorCode::InvalidArgument, "Random family parameters must be positive");
  SeededSource rng(spec.seed);
  const std::size_t pool = std::max<std::size_t>(2, spec.k);
  InstanceBuilder b;
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < spec.k; ++i) {
    std::size_t arity = 1 + rng.below(spec.max_arity);
    Atom a;
    a.relation = "R" + std::to_string(i + 1);
    std::vector<std::string> attrs;
    for (std::size_t c = 0; c < arity; ++c) {
      a.terms.push_back(Term::variable("v" + std::to_string(rng.below(pool))));
      attrs.push_back("c" + std::to_string(c + 1));
    }
    auto rel = b.add_relation(a.relation, attrs);
    std::size_t space = 1;
    for (std::size_t c = 0; c < arity && space < spec.rows; ++c) space *= spec.domain;
    std::size_t target = std::min(spec.rows, space);
    std::vector<std::vector<std::string>> seen;
    while (seen.size() < target) {
      std::vector<std::string> values;
      for (std::size_t c = 0; c < arity; ++c) values.push_back("d" + std::to_string(rng.below(spec.domain)));
      if (std::find(seen.begin(), seen.end(), values) != seen.end()) continue;
      seen.push_back(values);
      double prob = p ? *p : 0.05 + 0.9 * rng.unit();
      if (!p && prob <= 0.05) prob = 0.05 + 1e-6;
      b.add_row(rel, std::move(values), prob,
                a.relation + "_" + std::to_string(seen.size()));
    }
    atoms.push_back(std::move(a));
  }
  return {std::move(b).build(), Query(std::move(atoms))};
}

}  // namespace detail

inline Generated generate(const GenSpec& spec) {
  const double p = spec.uniform_p.value_or(0.5);
  return std::visit(
      [&](const auto& f) -> Generated {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, family::Sample>) {
          return detail::make_sample(spec.uniform_p);
        } else if constexpr (std::is_same_v<F, family::Blocks>) {
          return detail::make_blocks(f.n, p);
        } else if constexpr (std::is_same_v<F, family::CrossProduct>) {
          return detail::make_cross_product(f.n, p);
        } else if constexpr (std::is_same_v<F, family::Star>) {
          return detail::make_star(f.k, f.n, p);
        } else if constexpr (std::is_same_v<F, family::Chain>) {
          ChainInstance c = chain_instance(f.n, p);
          return {std::move(c.instance), std::move(c.query)};
        } else {
          return detail::make_random(f, spec.uniform_p);
        }
      },
      spec.family);
}

}  // namespace roq
