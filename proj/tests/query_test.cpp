#include <gtest/gtest.h>

#include "roq/query.hpp"

namespace roq {
namespace {

ErrorCode parse_error(const std::string& text) {
  try {
    parse_query(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << text;
  return ErrorCode::InvalidArgument;
}

TEST(Query, ParsesVariablesAndConstants) {
  Query q = parse_query("Q() :- R(x, 'a b'), S(x, y, 42), T(y).");
  ASSERT_EQ(q.k(), 3u);
  EXPECT_EQ(q.alpha(), 3u);
  EXPECT_TRUE(q.atom(0).terms[0].is_variable());
  EXPECT_EQ(q.atom(0).terms[1], Term::constant("a b"));
  EXPECT_EQ(q.atom(1).terms[2], Term::constant("42"));
  EXPECT_EQ(q.to_string(), "Q() :- R(x,'a b'), S(x,y,42), T(y).");
  EXPECT_EQ(parse_query(q.to_string()), q);
}

TEST(Query, RejectsMalformedText) {
  EXPECT_EQ(parse_error("Q() :- R(x), S(x,y) T(y)."), ErrorCode::Parse);
  EXPECT_EQ(parse_error("Q() :- R(x)"), ErrorCode::Parse);
  EXPECT_EQ(parse_error("Q() :- R(x). extra"), ErrorCode::Parse);
  EXPECT_EQ(parse_error("Q(x) :- R(x)."), ErrorCode::HeadVariable);
  EXPECT_EQ(parse_error("Q() :- R(x), R(y)."), ErrorCode::SelfJoin);
}

TEST(Query, CheckAgainstInstanceSchema) {
  InstanceBuilder b;
  b.add_relation("R", {"A"});
  Instance inst = std::move(b).build();
  EXPECT_NO_THROW(parse_query("Q() :- R(x).").check_against(inst));
  EXPECT_THROW(parse_query("Q() :- R(x,y).").check_against(inst), Error);
  EXPECT_THROW(parse_query("Q() :- S(x).").check_against(inst), Error);
}

TEST(TableAdjacency, ExampleQueryIsAPath) {
  TableAdjacencyGraph gt = table_adjacency(parse_query("Q() :- R(x), S(x,y), T(y)."));
  EXPECT_EQ(gt.m(), 2u);
  EXPECT_TRUE(gt.adjacent(0, 1));
  EXPECT_TRUE(gt.adjacent(1, 2));
  EXPECT_FALSE(gt.adjacent(0, 2));
  EXPECT_EQ(gt.edge(0, 1)->shared, std::vector<std::string>{"x"});
  EXPECT_EQ(gt.components().size(), 1u);
}

TEST(TableAdjacency, DisconnectedAndComplete) {
  EXPECT_EQ(table_adjacency(parse_query("Q() :- R1(x), R2(y).")).components().size(), 2u);
  TableAdjacencyGraph star = table_adjacency(parse_query("Q() :- R1(a,y), R2(b,y), R3(c,y)."));
  EXPECT_EQ(star.m(), 3u);
  EXPECT_TRUE(table_adjacency(parse_query("Q() :- R(x,'c'), S('c').")).edges().empty());
}

}  // namespace
}  // namespace roq
