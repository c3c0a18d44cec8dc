#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/properties.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

std::vector<RenderedLine> webkey_lines(std::size_t fn) {
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  auto cg = build_call_graph(g, ts);
  auto scope = localize_scope(cg, ts.initial_recipient);
  auto db = fixture_selectors("webkey");
  auto lifted = lift_scope(extract_instructions(scope, cg, g, ts), ts, db);
  RenderOptions ro;
  ro.selectors = &db;
  ro.minimal = true;
  return render_lines(lifted.at(fn).body, lifted.at(fn).calldata, ro);
}

std::vector<std::uint64_t> ids(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (char c : s) out.push_back(static_cast<std::uint64_t>(c));
  return out;
}

}  // namespace

TEST(Loops, DetectsSimpleRepetition) {
  auto r = detect_loops(ids("xabababy"));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].entry, 1u);
  EXPECT_EQ(r[0].exit, 7u);
  EXPECT_EQ(r[0].body_length, 2u);
  EXPECT_EQ(r[0].k, 3u);
}

TEST(Loops, DetectsNestedRepetition) {
  // (c (ab)x2 d) x2
  auto r = detect_loops(ids("cababdcababd"));
  bool inner = false, outer = false;
  for (const auto& x : r) {
    if (x.body_length == 2 && x.k == 2 && x.level == 0) inner = true;
    if (x.body_length == 6 && x.k == 2 && x.entry == 0 && x.exit == 12 && x.level == 1) outer = true;
  }
  EXPECT_TRUE(inner);
  EXPECT_TRUE(outer);
}

TEST(Loops, NoRepetitionNoRegion) {
  EXPECT_TRUE(detect_loops(ids("abcdefg")).empty());
  // single-statement bodies are not loops
  EXPECT_TRUE(detect_loops(ids("xaaaay")).empty());
}

TEST(Template, RoundTripsRandomRegions) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    auto c = random_region(rng);
    ASSERT_EQ(region_roundtrip_violation(c), "") << "trial " << trial;
  }
}

TEST(Template, ClassifiesRoles) {
  auto f = fit_values({"7", "7", "7"}, {3});
  EXPECT_EQ(f.role, SlotRole::Invariant);
  f = fit_values({"10", "13", "16", "19"}, {4});
  EXPECT_EQ(f.role, SlotRole::DeterministicVariation);
  EXPECT_EQ(f.at({3}, {4}), "19");
  f = fit_values({"0x10", "0x0c", "0x08"}, {3});
  EXPECT_NE(f.role, SlotRole::Invariant);
  f = fit_values({"5", "1", "9"}, {3});
  EXPECT_EQ(f.role, SlotRole::ComplexDivergence);
  EXPECT_EQ(f.at({2}, {3}), "9");
}

TEST(Template, RejectsMismatchedShapes) {
  std::vector<Statement> s{tokenize({1, 0, 0, "f(1)"}), tokenize({1, 1, 0, "g(2)"})};
  LoopRegion r{0, 2, 1, 2, 0};
  EXPECT_THROW(summarize(s, r), Error);
}

TEST(Compressor, CallbackLoopBecomesOneTemplate) {
  auto lines = webkey_lines(1);
  auto cf = compress_lines(lines);
  ASSERT_EQ(cf.regions.size(), 1u);
  const auto& r = cf.regions[0];
  EXPECT_EQ(r.k, 67u);
  auto t = summarize(cf.statements, r);
  auto back = expand(t);
  ASSERT_EQ(back.size(), r.exit - r.entry);
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(materialize(back[i]), lines[r.entry + i].text);
  auto text = render_compressed(cf);
  EXPECT_NE(text.find("for i in 0..67:"), std::string::npos);
}

TEST(Compressor, ShrinksTenfold) {
  auto lines = webkey_lines(1);
  auto before = join_lines(lines).size();
  auto after = render_compressed(compress_lines(lines)).size();
  EXPECT_GE(before, 10 * after);
}

TEST(Compressor, ShortRepeatsStayInline) {
  std::vector<RenderedLine> lines{{1, 0, 0, "a()"}, {1, 1, 0, "a()"}, {2, 2, 0, "b()"}};
  auto cf = compress_lines(lines);
  EXPECT_TRUE(cf.regions.empty());
  EXPECT_EQ(render_compressed(cf), join_lines(lines));
}

TEST(Compressor, IdentityWithoutLoops) {
  std::vector<RenderedLine> lines{{1, 0, 0, "x = 1"}, {2, 1, 1, "y = 0x20"}, {3, 2, 0, "z = 5 * 10^18"}};
  auto cf = compress_lines(lines);
  EXPECT_EQ(render_compressed(cf), join_lines(lines));
}
