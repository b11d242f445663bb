#pragma once

// The chain family x1x2 + x2x3 + ... + xn x(n+1): an exact linear-time
// probability and the three-relation instance whose answer is that chain.

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roq/error.hpp"
#include "roq/instance.hpp"
#include "roq/query.hpp"

namespace roq {

/// P(x1x2 + ... + xn x(n+1)) for p = (p(x1), ..., p(x(n+1))).
///
/// P_i = P_{i-1} + p_i p_{i+1} (1 - p_{i-1}) (1 - P_{i-3}), with
/// P_{-1} = P_0 = 0 and p_0 = 0. The new term x_i x_{i+1} adds probability
/// only in worlds where x_{i-1} is false, and there the earlier terms reduce
/// to the chain ending at x_{i-2}.
inline double chain_probability(std::span<const double> p) {
  if (p.size() < 2) throw Error(ErrorCode::InvalidArgument, "chain needs at least two probabilities");
  for (double v : p)
    if (!(v > 0.0 && v <= 1.0)) throw Error(ErrorCode::Domain, "chain probability outside (0,1]");
  const std::size_t n = p.size() - 1;
  // P[i + 1] holds P_i, so P[0] is P_{-1}.
  std::vector<double> P(n + 2, 0.0);
  auto prob = [&](std::size_t i) { return i == 0 ? 0.0 : p[i - 1]; };
  for (std::size_t i = 1; i <= n; ++i) {
    double before = i >= 2 ? P[i - 2] : 0.0;  // P_{i-3}
    P[i + 1] = P[i] + prob(i) * prob(i + 1) * (1.0 - prob(i - 1)) * (1.0 - before);
  }
  return P[n + 1];
}

struct ChainInstance {
  Instance instance;
  Query query;
  std::vector<VarId> x;  // x1 .. x(n+1)
  std::vector<VarId> z;  // deterministic S tuples, one per chain term
};

/// R(A) holds a_j named x(2j-1), T(B) holds b_j named x(2j), and S(A,B)
/// links them with probability-1 rows so that the i-th S row produces x_i x_(i+1).
inline ChainInstance chain_instance(std::size_t n, std::span<const double> p) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "chain length must be at least 1");
  if (p.size() != n + 1)
    throw Error(ErrorCode::InvalidArgument, "chain of length " + std::to_string(n) + " needs " +
                                                std::to_string(n + 1) + " probabilities");
  InstanceBuilder b;
  std::size_t r = b.add_relation("R", {"A"});
  std::size_t s = b.add_relation("S", {"A", "B"});
  std::size_t t = b.add_relation("T", {"B"});
  ChainInstance out;
  out.x.resize(n + 1);
  for (std::size_t i = 1; i <= n + 1; i += 2)
    out.x[i - 1] = b.add_row(r, {"a" + std::to_string((i + 1) / 2)}, p[i - 1], "x" + std::to_string(i));
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t a = i % 2 == 1 ? (i + 1) / 2 : i / 2 + 1;
    std::size_t bb = i % 2 == 1 ? (i + 1) / 2 : i / 2;
    out.z.push_back(b.add_row(s, {"a" + std::to_string(a), "b" + std::to_string(bb)}, 1.0,
                              "z" + std::to_string(i)));
  }
  for (std::size_t i = 2; i <= n + 1; i += 2)
    out.x[i - 1] = b.add_row(t, {"b" + std::to_string(i / 2)}, p[i - 1], "x" + std::to_string(i));
  out.instance = std::move(b).build();
  out.query = parse_query("Q() :- R(A), S(A,B), T(B).");
  return out;
}

inline ChainInstance chain_instance(std::size_t n, double p = 0.5) {
  std::vector<double> probs(n + 1, p);
  return chain_instance(n, probs);
}

}  // namespace roq
