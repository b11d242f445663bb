#include <gtest/gtest.h>

#include <set>
#include <string>

#include "roq/cotable.hpp"
#include "roq/generate.hpp"

namespace roq {
namespace {

using EdgeNames = std::set<std::pair<std::string, std::string>>;

EdgeNames named(const CoGraph& g, const Instance& inst) {
  EdgeNames out;
  for (const auto& [a, b] : g.edges()) {
    std::string x = inst.name_of(a), y = inst.name_of(b);
    out.emplace(std::min(x, y), std::max(x, y));
  }
  return out;
}

class SampleGraphs : public ::testing::Test {
 protected:
  void SetUp() override {
    dag = *eval_plan(default_plan(g.query), g.query, g.instance).dag;
    gt = table_adjacency(g.query);
  }
  Generated g = generate(GenSpec{family::Sample{}});
  ProvenanceDag dag;
  TableAdjacencyGraph gt;
};

const EdgeNames kCoTable{{"v1", "w1"}, {"v2", "w2"}, {"v3", "w3"}, {"v4", "w3"},
                         {"u1", "v1"}, {"u1", "v2"}, {"u2", "v3"}, {"u3", "v4"}};

TEST_F(SampleGraphs, CoTableHasEightEdges) {
  CoGraph gc = comp_cotable(dag, gt, CoGraphMode::CoTable);
  EXPECT_EQ(named(gc, g.instance), kCoTable);
  EXPECT_TRUE(gc.is_k_partite());
  EXPECT_TRUE(has_induced_p4(gc));
}

TEST_F(SampleGraphs, CoOccurrenceHasTwelveEdges) {
  CoGraph gco = comp_cotable(dag, gt, CoGraphMode::CoOccurrence);
  EdgeNames want = kCoTable;
  want.insert({{"u1", "w1"}, {"u1", "w2"}, {"u2", "w3"}, {"u3", "w3"}});
  EXPECT_EQ(named(gco, g.instance), want);
  EXPECT_FALSE(has_induced_p4(gco));
  EXPECT_TRUE(gco.same_graph(cooccurrence_from_idnf(expand_to_idnf(read_expression(dag)))));
}

TEST_F(SampleGraphs, WitnessIsAnInducedPath) {
  CoGraph gc = comp_cotable(dag, gt, CoGraphMode::CoTable);
  auto w = find_induced_p4(gc);
  ASSERT_TRUE(w);
  const auto& p = *w;
  EXPECT_TRUE(gc.has_edge(p[0], p[1]));
  EXPECT_TRUE(gc.has_edge(p[1], p[2]));
  EXPECT_TRUE(gc.has_edge(p[2], p[3]));
  EXPECT_FALSE(gc.has_edge(p[0], p[2]));
  EXPECT_FALSE(gc.has_edge(p[0], p[3]));
  EXPECT_FALSE(gc.has_edge(p[1], p[3]));
}

TEST_F(SampleGraphs, TraversalOrderDoesNotChangeTheGraph) {
  CoGraph base = comp_cotable(dag, gt, CoGraphMode::CoTable);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CoTableOptions opts;
    opts.tie_break_seed = seed;
    EXPECT_TRUE(comp_cotable(dag, gt, CoGraphMode::CoTable, opts).same_graph(base));
  }
}

TEST_F(SampleGraphs, HashFallbackMatchesBitTable) {
  CoTableOptions opts;
  opts.bit_table_limit = 0;
  EXPECT_TRUE(comp_cotable(dag, gt, CoGraphMode::CoOccurrence, opts)
                  .same_graph(comp_cotable(dag, gt, CoGraphMode::CoOccurrence)));
}

TEST(CoTable, CrossProductAsymmetry) {
  Generated g = generate(GenSpec{family::CrossProduct{50}});
  ProvenanceDag dag = *eval_plan(default_plan(g.query), g.query, g.instance).dag;
  TableAdjacencyGraph gt = table_adjacency(g.query);
  EXPECT_EQ(comp_cotable(dag, gt, CoGraphMode::CoTable).m(), 0u);
  EXPECT_EQ(comp_cotable(dag, gt, CoGraphMode::CoOccurrence).m(), 2500u);
}

TEST(CoTable, EachPairExaminedOnceOnATree) {
  Generated g = generate(GenSpec{family::Blocks{3}});
  ProvenanceDag dag = *eval_plan(default_plan(g.query), g.query, g.instance).dag;
  CoTableOptions opts;
  opts.count_pair_visits = true;
  CoTableStats stats;
  comp_cotable(dag, table_adjacency(g.query), CoGraphMode::CoOccurrence, opts, &stats);
  EXPECT_EQ(stats.max_pair_visits, 1u);
  EXPECT_GT(stats.pairs_examined, 0u);
}

TEST(P4, SmallGraphs) {
  auto path = [](std::uint32_t len) {
    std::vector<VarId> vs;
    std::vector<VarPair> es;
    for (std::uint32_t i = 0; i < len; ++i) vs.push_back(VarId{i});
    for (std::uint32_t i = 0; i + 1 < len; ++i) es.emplace_back(VarId{i}, VarId{i + 1});
    return CoGraph(vs, std::vector<std::uint32_t>(len, 0), es, CoGraphMode::CoOccurrence);
  };
  EXPECT_FALSE(has_induced_p4(path(3)));
  EXPECT_TRUE(has_induced_p4(path(4)));
  std::vector<VarId> vs{VarId{0}, VarId{1}, VarId{2}, VarId{3}};
  std::vector<VarPair> cycle{{VarId{0}, VarId{1}}, {VarId{1}, VarId{2}}, {VarId{2}, VarId{3}},
                             {VarId{3}, VarId{0}}};
  EXPECT_FALSE(has_induced_p4(CoGraph(vs, std::vector<std::uint32_t>(4, 0), cycle,
                                      CoGraphMode::CoOccurrence)));
}

}  // namespace
}  // namespace roq
