#include <gtest/gtest.h>

#include <chrono>

#include "support/fixtures.hpp"
#include "support/properties.hpp"
#include "support/scenarios.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

const Address kAttack = Address::from_hex("0x4ebc0a6b7c2d4d6f7b2b6f9e5d3e5a3c2b1a0f91");
const Address kSale = Address::from_hex("0xd511096a73292a7419a94354d4c1c73e8a3cd851");

std::size_t frame_runs(const TraceStream& ts, std::uint32_t frame) {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < ts.steps.size(); ++i)
    if (ts.steps[i].frame == frame && (i == 0 || ts.steps[i - 1].frame != frame)) ++runs;
  return runs;
}

}  // namespace

TEST(Cefg, RootContextSegmentsShareOneNode) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  const auto& root = g.nodes[g.root];
  EXPECT_EQ(root.address, kAttack);
  EXPECT_EQ(root.depth, 1u);
  EXPECT_EQ(root.frames, std::vector<std::uint32_t>{0});
  // entry segment, segment after the base-token query, segment after the loan returns
  EXPECT_EQ(root.ins.size(), frame_runs(ts, 0));
  EXPECT_EQ(root.ins.size(), 3u);
  for (const auto& b : root.ins) EXPECT_EQ(b.frame, 0u);
}

TEST(Cefg, StaticCallNodesCarryNoInstructions) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  std::size_t statics = 0;
  for (const auto& n : g.nodes) {
    if (n.call_type != op::STATICCALL) continue;
    ++statics;
    EXPECT_TRUE(n.ins.empty());
    EXPECT_FALSE(n.frames.empty());
  }
  EXPECT_GT(statics, 0u);
}

TEST(Cefg, RepeatedCallsAggregate) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  const CefgNode* buy = nullptr;
  for (const auto& n : g.nodes)
    if (n.address == kSale) buy = &n;
  ASSERT_NE(buy, nullptr);
  EXPECT_EQ(buy->frames.size(), 67u);
  EXPECT_GE(buy->ins.size(), 67u);
}

TEST(Cefg, EdgesFollowTheTrace) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  std::size_t calls = 0, returns = 0;
  for (const auto& e : g.edges) {
    ASSERT_LT(e.from, g.nodes.size());
    ASSERT_LT(e.to, g.nodes.size());
    if (opens_context(e.opcode))
      ++calls;
    else
      ++returns;
  }
  EXPECT_EQ(calls, ts.frames.size() - 1);
  EXPECT_EQ(returns, ts.frames.size() - 1);
}

TEST(Cefg, InvariantsOnFixtures) {
  for (const auto* ts : {&webkey_trace(), &flash_trace()}) {
    auto g = build_cefg(*ts);
    EXPECT_EQ(cefg_violation(*ts, g), "");
  }
}

TEST(Cefg, InvariantsOnRandomTraces) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto s = random_scenario(seed);
    auto ts = parse_trace(s.trace, TraceFormat::Native);
    auto g = build_cefg(ts);
    EXPECT_EQ(cefg_violation(ts, g), "") << "seed " << seed;
  }
}

TEST(Cefg, BuildsWithinASecond) {
  const auto& ts = webkey_trace();
  auto t0 = std::chrono::steady_clock::now();
  auto g = build_cefg(ts);
  auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_FALSE(g.empty());
  EXPECT_LT(ms, 1000.0);
}

TEST(Cefg, AggregateMergesEqualKeys) {
  CefgNode a, b, c;
  a.id = 0;
  a.address = Address::from_word(Word(1));
  a.ins = {{0, 0, 3}};
  a.frames = {0};
  b = a;
  b.id = 1;
  b.ins = {{1, 5, 7}};
  b.frames = {1};
  c = a;
  c.id = 2;
  c.depth = 2;
  c.frames = {2};
  c.ins = {{2, 3, 5}};
  std::vector<std::uint32_t> remap;
  auto out = aggregate({a, b, c}, &remap);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(remap, (std::vector<std::uint32_t>{0, 0, 1}));
  EXPECT_EQ(out[0].ins.size(), 2u);
  EXPECT_EQ(out[0].frames, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(aggregate(out), out);
}

TEST(Cefg, EmptyTraceGivesEmptyGraph) {
  TraceStream ts;
  EXPECT_TRUE(build_cefg(ts).empty());
}
