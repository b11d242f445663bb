// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace roq;
using roq::testing::Prepared;
using roq::testing::prepare;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Median wall time of `reps` runs of `f`, in seconds.
double median_time(int reps, const std::function<void()>& f) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    auto s = Clock::now();
    f();
    t.push_back(seconds_since(s));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

std::set<std::pair<std::string, std::string>> named_edges(const CoGraph& g, const Instance& inst) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& [a, b] : g.edges()) {
    std::string x = inst.name_of(a), y = inst.name_of(b);
    out.emplace(std::min(x, y), std::max(x, y));
  }
  return out;
}

const char* const kSampleExpression = "(w1*v1+w2*v2)*u1+w3*(v3*u2+v4*u3)";

// 1. The sample instance end to end from the on-disk fixture.
void criterion1(Outcome& o) {
  const auto dir = std::filesystem::path(ROQ_TEST_DATA) / "sample";
  auto start = Clock::now();
  Report r = evaluate(read_text_file(dir / "query.txt"), dir);
  double t = seconds_since(start);
  o.require(r.outcome == RoOutcome::Success, "not read-once");
  if (r.outcome != RoOutcome::Success) return;
  o.require(*r.expression == kSampleExpression, "expression " + *r.expression);
  Generated g = generate(GenSpec{family::Sample{}});
  PlanResult pr = eval_plan(default_plan(g.query), g.query, g.instance);
  double oracle = exact_probability(read_expression(*pr.dag), g.instance.probabilities());
  o.require(std::abs(*r.probability - oracle) <= 1e-9, "probability differs from enumeration");
  o.require(std::abs(oracle - 0.254746112) <= 1e-9, "enumeration differs from frozen value");
  o.require(t < 1.0, "took " + std::to_string(t) + " s");
  o.detail << (o.pass ? "" : "; ") << "p=" << *r.probability << " in " << t * 1e3 << " ms";
}

// 2. Golden co-table and co-occurrence graphs of the sample.
void criterion2(Outcome& o) {
  Generated g = generate(GenSpec{family::Sample{}});
  ProvenanceDag dag = *eval_plan(default_plan(g.query), g.query, g.instance).dag;
  TableAdjacencyGraph gt = table_adjacency(g.query);
  CoGraph gc = comp_cotable(dag, gt, CoGraphMode::CoTable);
  CoGraph gco = comp_cotable(dag, gt, CoGraphMode::CoOccurrence);
  std::set<std::pair<std::string, std::string>> cotable{
      {"v1", "w1"}, {"v2", "w2"}, {"v3", "w3"}, {"v4", "w3"},
      {"u1", "v1"}, {"u1", "v2"}, {"u2", "v3"}, {"u3", "v4"}};
  auto cooc = cotable;
  cooc.insert({{"u1", "w1"}, {"u1", "w2"}, {"u2", "w3"}, {"u3", "w3"}});
  o.require(named_edges(gc, g.instance) == cotable, "co-table edges differ");
  o.require(named_edges(gco, g.instance) == cooc, "co-occurrence edges differ");
  o.require(has_induced_p4(gc), "co-table graph has no P4");
  o.require(!has_induced_p4(gco), "co-occurrence graph has a P4");
  if (o.pass) o.detail << "m_C=" << gc.m() << " m_co=" << gco.m();
}

// 3. Oracle equivalence on 500 seeded random instances.
void criterion3(Outcome& o) {
  auto start = Clock::now();
  std::size_t nonempty = 0, read_once = 0, prob_checked = 0;
  for (std::uint64_t i = 0; i < 500; ++i) {
    Prepared p = prepare(generate(GenSpec{testing::random_workload(i)}));
    if (!p.dag) continue;
    ++nonempty;
    const std::string tag = "instance " + std::to_string(i) + ": ";
    Expr lineage = read_expression(*p.dag);
    Idnf idnf = expand_to_idnf(lineage);
    CoGraph gco = comp_cotable(*p.dag, p.gt, CoGraphMode::CoOccurrence);
    o.require(gco.same_graph(cooccurrence_from_idnf(idnf)), tag + "(a) co-occurrence mismatch");
    RoResult r = comp_ro(p.gen.query, p.pruned, p.gc, p.gt);
    bool ok = r.outcome == RoOutcome::Success;
    o.require(ok == !has_induced_p4(gco), tag + "(b) read-once disagrees with P4 test");
    if (!ok) continue;
    ++read_once;
    const std::size_t n = p.pruned.n();
    Expr f = to_expr(*r.tree);
    o.require(r.tree->leaf_count() == n && r.tree->variables() == p.dag->variables(),
              tag + "(c) variable not read exactly once");
    if (n <= kDefaultEnumerationCap) {
      o.require(equivalent_on_all_assignments(f, lineage), tag + "(c) not equivalent");
    } else {
      o.require(expand_to_idnf(f) == idnf, tag + "(c) IDNF differs");
    }
    if (n <= 20) {
      ProbMap pm = p.gen.instance.probabilities();
      double exact = exact_probability(lineage, pm);
      o.require(std::abs(exact - readonce_probability(*r.tree, pm)) <= 1e-9,
                tag + "(d) probability differs");
      ++prob_checked;
    }
  }
  double t = seconds_since(start);
  o.require(t < 60.0, "took " + std::to_string(t) + " s");
  o.require(read_once > 0 && read_once < nonempty, "workload lacks both outcomes");
  o.detail << (o.pass ? "" : "; ") << nonempty << " non-empty, " << read_once << " read-once, "
           << prob_checked << " probability checks in " << t << " s";
}

// 4. Left-deep and right-deep plans agree.
void criterion4(Outcome& o) {
  Generated g = generate(GenSpec{family::Sample{}});
  Plan left = default_plan(g.query);
  Plan right = right_deep_plan(g.query);
  Prepared a = prepare(g, &left);
  Prepared b = prepare(g, &right);
  o.require(left.to_string(g.query) != right.to_string(g.query), "plans are identical");
  o.require(expand_to_idnf(read_expression(*a.dag)) == expand_to_idnf(read_expression(*b.dag)),
            "IDNF differs");
  o.require(a.gc.same_graph(b.gc), "co-table graph differs");
  RoResult ra = comp_ro(g.query, a.pruned, a.gc, a.gt);
  RoResult rb = comp_ro(g.query, b.pruned, b.gc, b.gt);
  o.require(ra.tree && rb.tree && *ra.tree == *rb.tree, "canonical form differs");
  if (o.pass) o.detail << "both plans give " << render(*ra.tree, g.instance.names());
}

// 5. Cross product of two 50-tuple relations.
void criterion5(Outcome& o) {
  Generated g = generate(GenSpec{family::CrossProduct{50}});
  std::size_t m_c = 0;
  RoOutcome outcome = RoOutcome::NotReadOnce;
  double t = median_time(5, [&] {
    PlanResult pr = eval_plan(default_plan(g.query), g.query, g.instance);
    TableAdjacencyGraph gt = table_adjacency(g.query);
    CoGraph gc = comp_cotable(*pr.dag, gt, CoGraphMode::CoTable);
    m_c = gc.m();
    outcome = comp_ro(g.query, g.instance.restrict(pr.dag->variables()), gc, gt).outcome;
  });
  ProvenanceDag dag = *eval_plan(default_plan(g.query), g.query, g.instance).dag;
  std::size_t m_co = comp_cotable(dag, table_adjacency(g.query), CoGraphMode::CoOccurrence).m();
  o.require(m_c == 0, "m_C=" + std::to_string(m_c));
  o.require(m_co == 2500, "m_co=" + std::to_string(m_co));
  o.require(outcome == RoOutcome::Success, "not read-once");
  o.require(t < 0.1, "co-table path took " + std::to_string(t) + " s");
  o.detail << (o.pass ? "" : "; ") << "m_C=" << m_c << " m_co=" << m_co << ", co-table path "
           << t * 1e3 << " ms";
}

std::string blocks_expected(std::size_t n) {
  std::string out;
  auto s = [](std::size_t i) { return std::to_string(i); };
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t a = 2 * j - 1, b = 2 * j;
    if (j > 1) out += "+";
    out += "(x" + s(a) + "*z" + s(4 * j - 3) + "+y" + s(a) + "*z" + s(4 * j - 2) + ")*u" + s(a);
    out += "+x" + s(b) + "*(z" + s(4 * j - 1) + "*u" + s(b) + "+z" + s(4 * j) + "*v" + s(b) + ")";
  }
  return out;
}

// 6. Block family: structure, oracle probability, and near-linear time.
void criterion6(Outcome& o) {
  for (std::size_t n : {1u, 2u, 50u}) {
    Generated g = generate(GenSpec{family::Blocks{n}});
    auto start = Clock::now();
    Report r = evaluate(g.query, g.instance);
    double t = seconds_since(start);
    const std::string tag = "n=" + std::to_string(n) + ": ";
    o.require(r.outcome == RoOutcome::Success, tag + "not read-once");
    if (!r.tree) continue;
    o.require(r.tree->kind == ReadOnceTree::Kind::Sum && r.tree->children.size() == 2 * n,
              tag + "top level is not a Sum of 2n blocks");
    o.require(*r.expression == blocks_expected(n), tag + "block structure differs");
    if (n <= 2) {
      PlanResult pr = eval_plan(default_plan(g.query), g.query, g.instance);
      double exact = exact_probability(read_expression(*pr.dag), g.instance.probabilities());
      o.require(std::abs(exact - *r.probability) <= 1e-9, tag + "probability differs");
    }
    if (n == 50) o.require(t < 1.0, tag + "took " + std::to_string(t) + " s");
  }
  std::vector<double> per_n;
  std::ostringstream times;
  for (std::size_t n : {50u, 100u, 200u}) {
    Generated g = generate(GenSpec{family::Blocks{n}});
    double t = median_time(7, [&] { evaluate(g.query, g.instance); });
    per_n.push_back(t / static_cast<double>(n));
    times << " t(" << n << ")=" << t * 1e3 << "ms";
  }
  double spread = *std::max_element(per_n.begin(), per_n.end()) /
                  *std::min_element(per_n.begin(), per_n.end());
  o.require(spread <= 3.0, "time per block varies " + std::to_string(spread) + "x");
  o.detail << (o.pass ? "" : "; ") << "per-block time spread " << spread << "x;" << times.str();
}

// 7. Chain family: dynamic program against enumeration, and not read-once
// from two terms on.
void criterion7(Outcome& o) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.05, 0.95);
  for (std::size_t n = 1; n <= 15; ++n) {
    std::vector<double> p(n + 1);
    for (double& x : p) x = unit(rng);
    ChainInstance c = chain_instance(n, p);
    std::vector<Expr> terms;
    for (std::size_t i = 0; i < n; ++i)
      terms.push_back(Expr::conj({Expr::var(c.x[i]), Expr::var(c.x[i + 1])}));
    double exact = exact_probability(Expr::disj(terms), c.instance.probabilities());
    o.require(std::abs(chain_probability(p) - exact) <= 1e-9,
              "n=" + std::to_string(n) + ": dynamic program differs from enumeration");
    if (n >= 2) {
      Prepared pp = prepare({c.instance, c.query});
      RoResult r = comp_ro(c.query, pp.pruned, pp.gc, pp.gt);
      if (r.outcome != RoOutcome::NotReadOnce)
        o.require(false, "n=" + std::to_string(n) + ": judged read-once as " +
                             render(*r.tree, c.instance.names()));
    }
  }
  o.require(std::abs(chain_probability(std::vector<double>(3, 0.5)) - 0.375) <= 1e-12,
            "n=2 uniform value");
  o.require(std::abs(chain_probability(std::vector<double>(4, 0.5)) - 0.5) <= 1e-12,
            "n=3 uniform value");
  if (o.pass) o.detail << "15 lengths checked";
}

// 8. Mutual exclusion of the two decompositions and the depth bound.
void criterion8(Outcome& o) {
  std::vector<Generated> workload;
  workload.push_back(generate(GenSpec{family::Sample{}}));
  for (std::size_t n : {1u, 2u, 50u}) workload.push_back(generate(GenSpec{family::Blocks{n}}));
  workload.push_back(generate(GenSpec{family::CrossProduct{50}}));
  for (std::size_t k : {2u, 3u, 5u}) workload.push_back(generate(GenSpec{family::Star{k, 6}}));
  for (std::size_t n = 1; n <= 15; ++n) workload.push_back(generate(GenSpec{family::Chain{n}}));
  for (std::uint64_t i = 0; i < 500; ++i)
    workload.push_back(generate(GenSpec{testing::random_workload(i)}));

  std::size_t runs = 0, nodes = 0, max_depth = 0;
  for (std::size_t w = 0; w < workload.size(); ++w) {
    Prepared p = prepare(workload[w]);
    if (!p.dag) continue;
    CompRoOptions opts;
    opts.verify_exclusion = true;
    RoResult r;
    try {
      r = comp_ro(p.gen.query, p.pruned, p.gc, p.gt, opts);
    } catch (const std::logic_error& e) {
      o.require(false, "workload " + std::to_string(w) + ": " + e.what());
      continue;
    }
    ++runs;
    nodes += r.stats.exclusion_checks;
    max_depth = std::max(max_depth, r.stats.depth);
    std::size_t bound = testing::depth_bound(p.gen.query.k(), p.pruned.n());
    o.require(r.stats.depth <= bound, "workload " + std::to_string(w) + ": depth " +
                                          std::to_string(r.stats.depth) + " > " +
                                          std::to_string(bound));
  }
  o.detail << (o.pass ? "" : "; ") << runs << " runs, " << nodes
           << " recursion nodes checked, max depth " << max_depth;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    void (*run)(Outcome&);
  };
  const Criterion criteria[] = {
      {"1 example end-to-end", criterion1},
      {"2 golden co-table and co-occurrence graphs", criterion2},
      {"3 oracle equivalence on random instances", criterion3},
      {"4 plan invariance", criterion4},
      {"5 cross-product asymmetry", criterion5},
      {"6 block family scaling", criterion6},
      {"7 chain family", criterion7},
      {"8 structural properties", criterion8},
  };
  bool all = true;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    all = all && o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
