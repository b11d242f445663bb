#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace roq {
namespace {

TEST(Generate, SampleMatchesTheLoadedFixture) {
  Generated g = generate(GenSpec{family::Sample{}});
  Instance fixture = load_instance(std::filesystem::path(ROQ_TEST_DATA) / "sample");
  ASSERT_EQ(g.instance.relations().size(), fixture.relations().size());
  for (std::size_t r = 0; r < fixture.relations().size(); ++r) {
    const Relation& a = g.instance.relations()[r];
    const Relation& b = fixture.relations()[r];
    EXPECT_EQ(a.name, b.name);
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      EXPECT_EQ(a.rows[i].values, b.rows[i].values);
      EXPECT_EQ(a.rows[i].prob, b.rows[i].prob);
      EXPECT_EQ(g.instance.name_of(a.rows[i].var), fixture.name_of(b.rows[i].var));
    }
  }
}

TEST(Generate, BlocksSizes) {
  for (std::size_t n : {1u, 2u, 7u}) {
    Generated g = generate(GenSpec{family::Blocks{n}});
    EXPECT_EQ(g.instance.find("R")->rows.size(), 3 * n);
    EXPECT_EQ(g.instance.find("S")->rows.size(), 4 * n);
    EXPECT_EQ(g.instance.find("T")->rows.size(), 3 * n);
  }
}

TEST(Generate, BlocksFirstSlice) {
  testing::Prepared p = testing::prepare(generate(GenSpec{family::Blocks{1}}));
  RoResult r = comp_ro(p.gen.query, p.pruned, p.gc, p.gt);
  ASSERT_EQ(r.outcome, RoOutcome::Success);
  EXPECT_EQ(render(*r.tree, p.gen.instance.names()), "(x1*z1+y1*z2)*u1+x2*(z3*u2+z4*v2)");
}

TEST(Generate, NoUnusedTuplesInFixedFamilies) {
  std::vector<GenSpec> specs{{family::Sample{}}, {family::Blocks{3}}, {family::CrossProduct{4}},
                             {family::Star{3, 5}}, {family::Chain{6}}};
  for (const GenSpec& s : specs) {
    testing::Prepared p = testing::prepare(generate(s));
    ASSERT_TRUE(p.dag);
    EXPECT_EQ(p.pruned.n(), p.gen.instance.n());
  }
}

TEST(Generate, RandomIsReproducible) {
  family::Random f{4, 3, 6, 3, 1234};
  Generated a = generate(GenSpec{f});
  Generated b = generate(GenSpec{f});
  EXPECT_EQ(a.query, b.query);
  ASSERT_EQ(a.instance.n(), b.instance.n());
  for (std::size_t r = 0; r < a.instance.relations().size(); ++r)
    for (std::size_t i = 0; i < a.instance.relations()[r].rows.size(); ++i) {
      EXPECT_EQ(a.instance.relations()[r].rows[i].values, b.instance.relations()[r].rows[i].values);
      EXPECT_EQ(a.instance.relations()[r].rows[i].prob, b.instance.relations()[r].rows[i].prob);
    }
  for (const Relation& r : a.instance.relations())
    for (const TupleRow& row : r.rows) {
      EXPECT_GT(row.prob, 0.05);
      EXPECT_LT(row.prob, 0.95);
    }
}

TEST(Generate, RandomWorkloadStaysSmall) {
  for (std::uint64_t i = 0; i < 500; ++i) {
    family::Random f = testing::random_workload(i);
    EXPECT_LE(f.k, 4u);
    EXPECT_LE(f.max_arity, 3u);
    EXPECT_LE(generate(GenSpec{f}).instance.n(), 30u);
  }
}

TEST(Generate, ParameterErrors) {
  EXPECT_THROW(generate(GenSpec{family::Blocks{0}}), Error);
  EXPECT_THROW(generate(GenSpec{family::Chain{0}}), Error);
  EXPECT_THROW(generate(GenSpec{family::Random{0, 1, 1, 1, 0}}), Error);
}

}  // namespace
}  // namespace roq
