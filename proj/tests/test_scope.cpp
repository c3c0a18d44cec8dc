#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/properties.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

const Address kAttack = Address::from_hex("0x4ebc0a6b7c2d4d6f7b2b6f9e5d3e5a3c2b1a0f91");

CallGraphNode node(std::uint32_t id, std::uint64_t addr, std::uint32_t depth) {
  CallGraphNode n;
  n.id = id;
  n.address = Address::from_word(Word(addr));
  n.depth = depth;
  return n;
}

}  // namespace

TEST(Scope, FixtureKeepsOnlyAttackFunctions) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  auto cg = build_call_graph(g, ts);
  auto scope = localize_scope(cg, ts.initial_recipient);
  auto db = fixture_selectors("webkey");
  std::set<std::string> names;
  for (const auto& [id, rule] : scope.functions) {
    EXPECT_EQ(cg.nodes[id].address, kAttack);
    EXPECT_EQ(rule, ScopeRule::DirectInvocation);
    ASSERT_TRUE(cg.nodes[id].selector.has_value());
    names.insert(db.name_of(*cg.nodes[id].selector));
  }
  EXPECT_EQ(names, (std::set<std::string>{"wheeaappP", "DVMFlashLoanCall"}));
  EXPECT_EQ(scope.functions.size(), 2u);
  EXPECT_EQ(scope.contracts.size(), 1u);
  EXPECT_TRUE(scope.contains_contract(kAttack));
}

TEST(Scope, FixtureMetrics) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  auto cg = build_call_graph(g, ts);
  auto scope = localize_scope(cg, ts.initial_recipient);
  auto fts = extract_instructions(scope, cg, g, ts);
  ASSERT_EQ(fts.size(), 2u);
  EXPECT_LT(fts[0].blocks.front().begin, fts[1].blocks.front().begin);
  auto m = scope_metrics(scope, cg, ts, fts);
  EXPECT_EQ(m.total_instructions, ts.steps.size());
  EXPECT_LT(m.scope_instructions, m.total_instructions);
  EXPECT_EQ(m.scope_contracts, 1u);
  EXPECT_GT(m.total_contracts, m.scope_contracts);
}

TEST(Scope, CreationAdmitsNewContract) {
  CallGraph cg;
  cg.nodes = {node(0, 1, 1), node(1, 2, 2), node(2, 2, 2), node(3, 3, 3)};
  cg.nodes[0].children = {{op::CREATE, 1}, {op::CALL, 3}};
  cg.nodes[1].children = {};
  cg.nodes[2].children = {{op::DELEGATECALL, 3}};
  // node 2 runs the created contract's code later; node 3 is entered by delegatecall from it
  cg.nodes[0].children.push_back({op::CALL, 2});
  auto scope = localize_scope(cg, Address::from_word(Word(1)));
  EXPECT_TRUE(scope.contains_function(0));
  EXPECT_EQ(scope.functions.at(1), ScopeRule::DynamicInstantiation);
  EXPECT_EQ(scope.functions.at(2), ScopeRule::DynamicInstantiation);
  EXPECT_EQ(scope.functions.at(3), ScopeRule::ContextDelegation);
  EXPECT_FALSE(scope.contains_contract(Address::from_word(Word(3))));
}

TEST(Scope, PlainCallsStayOutside) {
  CallGraph cg;
  cg.nodes = {node(0, 1, 1), node(1, 2, 2), node(2, 3, 3)};
  cg.nodes[0].children = {{op::CALL, 1}};
  cg.nodes[1].children = {{op::DELEGATECALL, 2}};
  auto scope = localize_scope(cg, Address::from_word(Word(1)));
  EXPECT_EQ(scope.functions.size(), 1u);
}

TEST(Scope, MissingInitialRecipientIsEmptyScope) {
  CallGraph cg;
  cg.nodes = {node(0, 1, 1)};
  try {
    localize_scope(cg, Address::from_word(Word(9)));
    FAIL() << "expected EmptyScope";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyScope);
  }
}

TEST(Scope, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 100; ++trial) {
    auto cg = random_call_graph(rng, 50);
    EXPECT_EQ(scope_mismatch(cg, cg.nodes[0].address), "") << "trial " << trial;
  }
}
