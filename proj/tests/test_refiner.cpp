#include <gtest/gtest.h>

#include <random>

#include "support/fake_harness.hpp"
#include "support/fixtures.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

const Address kUsdt = Address::from_hex("0x55d398326f99059ff775485246999027b3197955");

BuildResult compiles_unless(const std::string& src, const std::string& bad) {
  BuildResult b;
  b.ok = src.find(bad) == std::string::npos;
  if (!b.ok) b.diagnostics = {"Error (7576): Undeclared identifier."};
  return b;
}

RunResult profit_run(bool profit) {
  RunResult r;
  r.executed = true;
  r.test_passed = true;
  r.pre["USDT"] = 0;
  r.post["USDT"] = profit ? 5 : 0;
  return r;
}

OracleSpec usdt_oracle() {
  OracleSpec o;
  o.assets.push_back({AssetId::erc20(kUsdt), 1, Word(5)});
  return o;
}

RefineContext usdt_context() {
  RefineContext ctx;
  ctx.oracle = usdt_oracle();
  ctx.labels = {"USDT"};
  return ctx;
}

CallSummary call(std::string target, std::string fn, std::vector<std::string> args, bool reverted = false, int depth = 1) {
  CallSummary c;
  c.target = std::move(target);
  c.function = std::move(fn);
  c.args = std::move(args);
  c.reverted = reverted;
  c.depth = depth;
  return c;
}

std::string code(const std::string& s) { return "```solidity\n" + s + "\n```"; }

}  // namespace

TEST(Completion, ParsesSectionsInAnyOrder) {
  std::string reply = "Here you go.\n/*<<OTHER_CONTRACTS>>*/\ncontract X {}\n/*<<ATTACK_LOGIC>>*/\n```solidity\nfoo();\nbar();\n```\n"
                      "/*<<OTHER_FUNCTIONS>>*/\n";
  auto s = parse_completion(reply);
  EXPECT_EQ(s.at(PlaceholderKind::AttackLogic), "foo();\nbar();");
  EXPECT_EQ(s.at(PlaceholderKind::OtherFunctions), "");
  EXPECT_EQ(s.at(PlaceholderKind::OtherContracts), "contract X {}");
}

TEST(Completion, MissingMarkerIsRejected) {
  try {
    parse_completion("/*<<ATTACK_LOGIC>>*/ x(); /*<<OTHER_FUNCTIONS>>*/");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MarkerMissing);
  }
}

TEST(Completion, MergeIndentsContinuationLines) {
  std::string sketch = "contract A {\n    function f() public {\n        /*<<ATTACK_LOGIC>>*/\n    }\n    /*<<OTHER_FUNCTIONS>>*/\n}\n/*<<OTHER_CONTRACTS>>*/\n";
  std::map<PlaceholderKind, std::string> s{{PlaceholderKind::AttackLogic, "a();\nb();"},
                                           {PlaceholderKind::OtherFunctions, "function g() public {}"}};
  auto out = merge_completion(sketch, s);
  EXPECT_EQ(out, "contract A {\n    function f() public {\n        a();\n        b();\n    }\n    function g() public {}\n}\n\n");
}

TEST(Completion, ExtractCode) {
  EXPECT_EQ(extract_code("text\n```solidity\nx\n```\nmore"), "x\n");
  EXPECT_EQ(extract_code("plain"), "plain");
}

TEST(Profit, ValidatesDirection) {
  auto o = usdt_oracle();
  EXPECT_TRUE(validate_profit(profit_run(true), o, {"USDT"}));
  EXPECT_FALSE(validate_profit(profit_run(false), o, {"USDT"}));
  EXPECT_FALSE(validate_profit(profit_run(true), o, {"WBNB"}));
  o.assets[0].expected_sign = -1;
  auto r = profit_run(false);
  r.pre["USDT"] = 9;
  EXPECT_TRUE(validate_profit(r, o, {"USDT"}));
  EXPECT_FALSE(validate_profit(profit_run(true), OracleSpec{}, {}));
  RunResult infra;
  infra.infra_failure = true;
  EXPECT_THROW(validate_profit(infra, o, {"USDT"}), Error);
}

TEST(Align, ScoreWeights) {
  auto g = call("WBNB", "transfer", {"Cake_LP", "5"});
  EXPECT_DOUBLE_EQ(match_score(g, g), 1.0);
  EXPECT_DOUBLE_EQ(match_score(g, call("WBNB", "transfer", {"attacker", "5"})), 0.5 + 0.3 + 0.1);
  EXPECT_DOUBLE_EQ(match_score(g, call("USDT", "transfer", {"x", "y"})), 0.5);
  EXPECT_DOUBLE_EQ(match_score(g, call("WBNB", "approve", {})), 0.3);
}

TEST(Align, DifferentParametersSummary) {
  std::vector<CallSummary> ground{call("Cake_LP", "swap", {"0", "5000000000000000000", "AttackerC", "0x00"}),
                                  call("AttackerC", "pancakeCall", {"AttackerC", "0", "5000000000000000000", "0x00"}, false, 2),
                                  call("WBNB", "transfer", {"Cake_LP", "5000000000000000000"}, false, 3)};
  std::vector<CallSummary> observed{call("Cake_LP", "swap", {"0", "5000000000000000000", "AttackerC", "0x00"}, true),
                                    call("AttackerC", "pancakeCall", {"AttackerC", "0", "5000000000000000000", "0x00"}, true, 2),
                                    call("WBNB", "transfer", {"attacker", "5000000000000000000"}, true, 3)};
  auto d = align_traces(ground, observed, 8);
  EXPECT_EQ(d.error_site, 2u);
  EXPECT_EQ(d.summary,
            "Observed execution with different parameters: WBNB.transfer(attacker, ...), but expected: WBNB.transfer(Cake_LP, ...)");
  EXPECT_EQ(d.matched_pair.first.text(), "WBNB.transfer(Cake_LP, 5000000000000000000)");
}

TEST(Align, CreationOrderRemapsAddresses) {
  CallSummary gnew = call("Helper", "new", {}), onew = call("Contract_5615deb7", "new", {});
  gnew.create = onew.create = true;
  std::vector<CallSummary> ground{gnew, call("Helper", "go", {"1"})};
  std::vector<CallSummary> observed{onew, call("Contract_5615deb7", "go", {"2"}, true)};
  auto d = align_traces(ground, observed, 4);
  EXPECT_EQ(d.address_alignment.at("Contract_5615deb7"), "Helper");
  EXPECT_EQ(d.matched_pair.second.target, "Helper");
  observed.push_back(onew);
  EXPECT_THROW(align_traces(ground, observed, 4), Error);
}

TEST(Align, ErrorsWithoutSiteOrMatch) {
  std::vector<CallSummary> ground{call("A", "f", {})};
  try {
    align_traces(ground, {call("A", "f", {})}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoErrorSite);
  }
  try {
    align_traces(ground, {call("B", "g", {}, true)}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoMatchInWindow);
  }
  std::vector<CallSummary> far(20, call("X", "pad", {}));
  far.push_back(call("A", "f", {"1"}));
  try {
    align_traces(far, {call("A", "f", {"2"}, true)}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoMatchInWindow);
  }
}

TEST(Refine, AdversarialProvidersStayWithinBudgets) {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 300; ++trial) ASSERT_EQ(adversarial_budget_violation(rng()), "");
}

TEST(Refine, SmallerBudgetsAreHonoured) {
  std::mt19937_64 rng(778);
  for (int trial = 0; trial < 100; ++trial) ASSERT_EQ(adversarial_budget_violation(rng(), Budgets{2, 1, 1}), "");
}

TEST(Refine, SyntaxBudgetExhaustionIsR2) {
  MockProvider provider([](const CompletionRequest&) { return code("still broken"); });
  FakeHarness h;
  h.on_build = [](const std::string& s) { return compiles_unless(s, "broken"); };
  h.on_run = [](const std::string&) { return profit_run(true); };
  RefinementSession s;
  s.poc_source = "broken";
  refine(s, h, provider, usdt_context());
  EXPECT_EQ(s.label(), "Failed(R2)");
  EXPECT_EQ(s.syntax_iterations_used, 5u);
  EXPECT_EQ(provider.calls(), 5u);
  EXPECT_EQ(h.builds, 6u);
  EXPECT_EQ(h.runs, 0u);
}

TEST(Refine, SemanticBudgetExhaustionIsR5OrR3) {
  for (std::string reason : {"overflow", "Ownable: caller is not the owner"}) {
    MockProvider provider([](const CompletionRequest&) { return code("attempt"); });
    FakeHarness h;
    h.on_build = [](const std::string& s) { return compiles_unless(s, "broken"); };
    h.on_run = [&](const std::string&) {
      auto r = profit_run(false);
      r.calls = {call("A", "f", {"1"}, true)};
      r.calls[0].revert_reason = reason;
      return r;
    };
    RefineContext ctx = usdt_context();
    ctx.ground = {call("A", "f", {"2"})};
    RefinementSession s;
    s.poc_source = "start";
    refine(s, h, provider, ctx);
    EXPECT_EQ(s.semantic_iterations_used, 3u);
    EXPECT_EQ(s.label(), reason == "overflow" ? "Failed(R5)" : "Failed(R3)");
  }
}

TEST(Refine, ExplicitBudgetGuard) {
  MockProvider provider([](const CompletionRequest&) { return code("x"); });
  FakeHarness h;
  h.on_build = [](const std::string&) { return BuildResult{true, {}, ""}; };
  h.on_run = [](const std::string&) { return profit_run(false); };
  RefinementSession s;
  s.semantic_iterations_used = 3;
  try {
    semantic_refine(s, fallback_diff("x"), provider, h, usdt_context());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetExhausted);
  }
}

TEST(Refine, AuxiliaryRepairStaysInOneIteration) {
  MockProvider provider([](const CompletionRequest& req) {
    return req.purpose == "semantic" ? code("v2 broken") : code("v2 fixed");
  });
  FakeHarness h;
  h.on_build = [](const std::string& s) { return compiles_unless(s, "broken"); };
  h.on_run = [](const std::string& s) {
    auto r = profit_run(s.find("fixed") != std::string::npos);
    if (s.find("fixed") == std::string::npos) r.calls = {call("A", "f", {"1"}, true)};
    return r;
  };
  RefineContext ctx = usdt_context();
  ctx.ground = {call("A", "f", {"2"})};
  RefinementSession s;
  s.poc_source = "v1";
  refine(s, h, provider, ctx);
  EXPECT_EQ(s.label(), "Verifiable");
  EXPECT_EQ(s.syntax_iterations_used, 0u);
  EXPECT_EQ(s.semantic_iterations_used, 1u);
  EXPECT_EQ(s.aux_syntax_used, std::vector<std::size_t>{1});
  EXPECT_EQ(s.last_diff_summary, "Observed execution with different parameters: A.f(1), but expected: A.f(2)");
}

TEST(Refine, ExhaustedAuxRepairsRevertToSnapshot) {
  MockProvider provider([](const CompletionRequest&) { return code("broken"); });
  FakeHarness h;
  h.on_build = [](const std::string& s) { return compiles_unless(s, "broken"); };
  h.on_run = [](const std::string&) { return profit_run(false); };
  RefinementSession s;
  s.poc_source = "good";
  bool verified = true;
  semantic_refine(s, fallback_diff("why"), provider, h, usdt_context(), &verified);
  EXPECT_FALSE(verified);
  EXPECT_EQ(s.poc_source, "good");
  EXPECT_EQ(s.semantic_iterations_used, 1u);
  EXPECT_EQ(s.aux_syntax_used, std::vector<std::size_t>{3});
  EXPECT_EQ(provider.calls(), 4u);
  EXPECT_EQ(s.transcript.back().kind, "revert_edit");
}

TEST(Refine, InfrastructureFailureIsR4) {
  MockProvider provider([](const CompletionRequest&) { return code("x"); });
  FakeHarness h;
  h.on_build = [](const std::string&) { return BuildResult{true, {}, ""}; };
  h.on_run = [](const std::string&) {
    RunResult r;
    r.infra_failure = true;
    r.infra_error = "fork unavailable";
    return r;
  };
  RefinementSession s;
  s.poc_source = "x";
  refine(s, h, provider, usdt_context());
  EXPECT_EQ(s.label(), "Failed(R4)");
  EXPECT_EQ(provider.calls(), 0u);
}

TEST(Refine, StatusOnlyMovesForward) {
  RefinementSession s;
  s.promote(PocStatus::Verifiable);
  s.promote(PocStatus::Runnable);
  EXPECT_EQ(s.status, PocStatus::Verifiable);
  s.fail(FailureReason::SemanticRepairFailure);
  EXPECT_EQ(s.label(), "Verifiable");
  RefinementSession t;
  t.fail(FailureReason::Timeout);
  t.promote(PocStatus::Runnable);
  EXPECT_EQ(t.label(), "Failed(R1)");
}
