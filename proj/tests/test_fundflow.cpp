#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/properties.hpp"
#include "support/scenarios.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

const Address kEoa = Address::from_hex("0x8f921e27e3af106015d1c3a244ec4f48dbfcad14");
const Address kReceiver = Address::from_hex("0xe63a5c68a8dc8c2f3b12e9da2bc83d2fc0f6ad33");
const Address kWbnb = Address::from_hex("0xbb4cdb9cbd36b01bd1cbaebf2de08d9173bc095c");
const Address kPair = Address::from_hex("0x58f876857a02d6762e0101bb5c46a8c1ed44dc16");
const Address kUsdt = Address::from_hex("0x55d398326f99059ff775485246999027b3197955");

AssetDelta delta(const Address& who, const AssetId& a, long long v) {
  Word w = v >= 0 ? Word(static_cast<unsigned long long>(v)) : negate(Word(static_cast<unsigned long long>(-v)));
  return {who, a, w};
}

LogEntry log_of(std::size_t step, std::uint32_t frame, const Address& token, const std::vector<Word>& topics, const Word& amount) {
  LogEntry l;
  l.step_index = step;
  l.frame = frame;
  l.emitter = token;
  l.topics = topics;
  l.data = word_to_bytes(amount);
  return l;
}

}  // namespace

TEST(FundFlow, TransferLogsMatchBruteForce) {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    auto c = random_transfers(rng, false);
    ASSERT_EQ(fund_flow_violation(c, true), "") << "trial " << trial;
  }
}

TEST(FundFlow, MintAndBurnSidesAreSkipped) {
  std::mt19937_64 rng(4343);
  for (int trial = 0; trial < 200; ++trial) {
    auto c = random_transfers(rng, true);
    ASSERT_EQ(fund_flow_violation(c, false), "") << "trial " << trial;
  }
}

TEST(FundFlow, NativeTransfersAreCaptured) {
  auto flow = extract_fund_flow(flash_trace());
  ASSERT_EQ(flow.native_transfers.size(), 2u);
  EXPECT_EQ(flow.native_transfers[0].from, kWbnb);
  EXPECT_EQ(flow.native_transfers[0].to, kReceiver);
  EXPECT_EQ(flow.native_transfers[1].from, kReceiver);
  EXPECT_EQ(flow.native_transfers[1].to, kEoa);
  EXPECT_EQ(flow.native_transfers[1].amount, 5 * kEther);
  EXPECT_EQ(flow.delta(kEoa, AssetId::native_asset()), 5 * kEther);
  EXPECT_EQ(flow.delta(kReceiver, AssetId::native_asset()), Word(0));
  EXPECT_EQ(flow.delta(kReceiver, AssetId::erc20(kWbnb)), Word(0));
  EXPECT_EQ(flow.delta(kPair, AssetId::erc20(kWbnb)), negate(5 * kEther));
}

TEST(FundFlow, WebkeyProfitGoesToSender) {
  const auto& ts = webkey_trace();
  auto flow = extract_fund_flow(ts);
  EXPECT_EQ(flow.delta(ts.sender, AssetId::erc20(kUsdt)), 67 * kEther);
  auto b = identify_beneficiary(flow.deltas, ts.sender, ts.initial_recipient);
  EXPECT_EQ(b, ts.sender);
}

TEST(FundFlow, RolledBackLogsAreIgnored) {
  TraceStream ts;
  Frame ok, bad;
  ok.id = 0;
  bad.id = 1;
  bad.rolled_back = true;
  ts.frames = {ok, bad};
  Address a = Address::from_word(Word(0xa1)), b = Address::from_word(Word(0xb1));
  ts.logs.push_back(log_of(1, 0, kUsdt, {event_topics::transfer(), a.to_word(), b.to_word()}, Word(10)));
  ts.logs.push_back(log_of(2, 1, kUsdt, {event_topics::transfer(), b.to_word(), a.to_word()}, Word(10)));
  auto flow = extract_fund_flow(ts);
  EXPECT_EQ(flow.delta(b, AssetId::erc20(kUsdt)), Word(10));
}

TEST(FundFlow, DepositAndWithdrawalCount) {
  TraceStream ts;
  ts.frames.push_back(Frame{});
  Address a = Address::from_word(Word(0xa1));
  ts.logs.push_back(log_of(1, 0, kWbnb, {event_topics::deposit(), a.to_word()}, Word(7)));
  ts.logs.push_back(log_of(2, 0, kWbnb, {event_topics::withdrawal(), a.to_word()}, Word(3)));
  auto flow = extract_fund_flow(ts);
  EXPECT_EQ(flow.delta(a, AssetId::erc20(kWbnb)), Word(4));
}

TEST(FundFlow, MalformedTransferIsCounted) {
  TraceStream ts;
  ts.frames.push_back(Frame{});
  ts.logs.push_back(log_of(1, 0, kUsdt, {event_topics::transfer(), Word(1)}, Word(5)));
  auto flow = extract_fund_flow(ts);
  EXPECT_EQ(flow.malformed_logs, 1u);
  EXPECT_TRUE(flow.deltas.empty());
}

TEST(Beneficiary, NativeOutranksTokens) {
  Address s = Address::from_word(Word(1)), c = Address::from_word(Word(2));
  std::vector<AssetDelta> d{delta(s, AssetId::erc20(kUsdt), 1000), delta(c, AssetId::native_asset(), 1)};
  EXPECT_EQ(identify_beneficiary(d, s, c), c);
}

TEST(Beneficiary, LargerGainWinsWithinClass) {
  Address s = Address::from_word(Word(1)), c = Address::from_word(Word(2));
  std::vector<AssetDelta> d{delta(s, AssetId::erc20(kUsdt), 5), delta(c, AssetId::erc20(kUsdt), 9)};
  EXPECT_EQ(identify_beneficiary(d, s, c), c);
}

TEST(Beneficiary, FallsBackToAnyGainer) {
  Address s = Address::from_word(Word(1)), c = Address::from_word(Word(2)), x = Address::from_word(Word(3));
  std::vector<AssetDelta> d{delta(s, AssetId::native_asset(), -5), delta(x, AssetId::native_asset(), 5)};
  EXPECT_EQ(identify_beneficiary(d, s, c), x);
}

TEST(Beneficiary, NobodyGainsIsAnError) {
  Address s = Address::from_word(Word(1)), c = Address::from_word(Word(2));
  std::vector<AssetDelta> d{delta(s, AssetId::native_asset(), -5)};
  try {
    identify_beneficiary(d, s, c);
    FAIL() << "expected NoBeneficiary";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoBeneficiary);
  }
}

TEST(Oracle, FundingCoversPeakOutflow) {
  Address s = Address::from_word(Word(1)), c = Address::from_word(Word(2));
  FundFlow flow;
  flow.deltas = {delta(s, AssetId::native_asset(), 1)};
  flow.native_transfers = {{1, 0, s, c, 3 * kEther, "CALL"}, {2, 0, c, s, 3 * kEther + 1, "CALL"}};
  auto spec = synthesize_oracles(flow, s, s);
  EXPECT_EQ(spec.min_funding, 3 * kEther);
  ASSERT_EQ(spec.assets.size(), 1u);
  EXPECT_EQ(spec.assets[0].observed, Word(1));
  OracleOptions floor;
  floor.funding_floor = 10 * kEther;
  EXPECT_EQ(synthesize_oracles(flow, s, s, floor).min_funding, 10 * kEther);
}

TEST(Oracle, FlashFixture) {
  const auto& ts = flash_trace();
  auto flow = extract_fund_flow(ts);
  auto b = identify_beneficiary(flow.deltas, ts.sender, ts.initial_recipient);
  EXPECT_EQ(b, kEoa);
  auto spec = synthesize_oracles(flow, b, ts.sender);
  ASSERT_EQ(spec.assets.size(), 1u);
  EXPECT_TRUE(spec.assets[0].asset.native);
  EXPECT_EQ(spec.assets[0].observed, 5 * kEther);
  EXPECT_EQ(spec.min_funding, kEther);
}
