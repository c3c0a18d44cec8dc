#pragma once

// Net asset deltas from token events and native value transfers, beneficiary
// selection, and the balance assertions a PoC must reproduce.

#include <algorithm>
#include <map>
#include <vector>

#include "txpoc/abi.hpp"
#include "txpoc/trace.hpp"

namespace txpoc {

struct AssetId {
  bool native = false;
  Address token;

  static AssetId native_asset() { return {true, {}}; }
  static AssetId erc20(const Address& a) { return {false, a}; }
  std::string name() const { return native ? "NATIVE" : token.hex(); }
  auto operator<=>(const AssetId&) const = default;
};

/// Signed amounts are two's-complement words.
struct AssetDelta {
  Address account;
  AssetId asset;
  Word delta = 0;
  bool operator==(const AssetDelta&) const = default;
};

inline bool delta_positive(const Word& d) { return d != 0 && !is_negative(d); }
inline Word delta_magnitude(const Word& d) { return is_negative(d) ? negate(d) : d; }

struct FundFlow {
  std::vector<AssetDelta> deltas;
  /// Native transfers that survived, in execution order.
  std::vector<ValueTransfer> native_transfers;
  std::size_t malformed_logs = 0;

  Word delta(const Address& account, const AssetId& asset) const {
    for (const auto& d : deltas)
      if (d.account == account && d.asset == asset) return d.delta;
    return 0;
  }
};

namespace event_topics {
inline const Word& transfer() {
  static const Word t = hash_to_word(keccak256(std::string_view("Transfer(address,address,uint256)")));
  return t;
}
inline const Word& deposit() {
  static const Word t = hash_to_word(keccak256(std::string_view("Deposit(address,uint256)")));
  return t;
}
inline const Word& withdrawal() {
  static const Word t = hash_to_word(keccak256(std::string_view("Withdrawal(address,uint256)")));
  return t;
}
}  // namespace event_topics

/// Logs and transfers of rolled-back frames do not count.
inline FundFlow extract_fund_flow(const TraceStream& ts) {
  FundFlow out;
  std::map<std::pair<Address, AssetId>, Word> net;
  std::vector<std::pair<Address, AssetId>> order;
  auto add = [&](const Address& who, const AssetId& asset, const Word& amount, bool credit) {
    auto key = std::make_pair(who, asset);
    auto [it, fresh] = net.try_emplace(key, 0);
    if (fresh) order.push_back(key);
    if (credit)
      it->second += amount;
    else
      it->second -= amount;
  };
  auto rolled_back = [&](std::uint32_t frame) { return frame < ts.frames.size() && ts.frames[frame].rolled_back; };

  std::size_t li = 0, vi = 0;
  // Merge logs and value transfers by step index so the native sequence keeps execution order.
  while (li < ts.logs.size() || vi < ts.value_transfers.size()) {
    bool take_log = vi >= ts.value_transfers.size() ||
                    (li < ts.logs.size() && ts.logs[li].step_index < ts.value_transfers[vi].step_index);
    if (!take_log) {
      const auto& v = ts.value_transfers[vi++];
      if (rolled_back(v.frame) || v.amount == 0) continue;
      out.native_transfers.push_back(v);
      add(v.from, AssetId::native_asset(), v.amount, false);
      add(v.to, AssetId::native_asset(), v.amount, true);
      continue;
    }
    const auto& l = ts.logs[li++];
    if (rolled_back(l.frame) || l.topics.empty()) continue;
    const Word& t0 = l.topics[0];
    AssetId asset = AssetId::erc20(l.emitter);
    auto amount = [&] { return word_from_bytes(l.data.data(), 32); };
    if (t0 == event_topics::transfer()) {
      if (l.topics.size() != 3 || l.data.size() < 32) {
        ++out.malformed_logs;
        continue;
      }
      Address from = Address::from_word(l.topics[1] & address_mask());
      Address to = Address::from_word(l.topics[2] & address_mask());
      Word a = amount();
      if (!from.is_zero()) add(from, asset, a, false);
      if (!to.is_zero()) add(to, asset, a, true);
    } else if (t0 == event_topics::deposit() || t0 == event_topics::withdrawal()) {
      if (l.topics.size() != 2 || l.data.size() < 32) {
        ++out.malformed_logs;
        continue;
      }
      add(Address::from_word(l.topics[1] & address_mask()), asset, amount(), t0 == event_topics::deposit());
    }
  }
  for (const auto& key : order) {
    const Word& d = net[key];
    if (d != 0) out.deltas.push_back({key.first, key.second, d});
  }
  return out;
}

/// Orders assets for cross-asset comparison: class order first, raw magnitude within a class.
struct AssetRanking {
  std::vector<AssetClass> order{AssetClass::Native, AssetClass::WrappedNative, AssetClass::Stable, AssetClass::Other};
  TokenDb tokens = TokenDb::builtin();

  AssetClass classify(const AssetId& a) const {
    if (a.native) return AssetClass::Native;
    if (const auto* t = tokens.find(a.token)) return t->cls;
    return AssetClass::Other;
  }
  std::size_t rank(const AssetId& a) const {
    auto c = classify(a);
    auto it = std::find(order.begin(), order.end(), c);
    return static_cast<std::size_t>(it - order.begin());
  }
};

namespace detail {

/// Best positive holding of `who`: (rank, magnitude); nullopt when nothing is gained.
inline std::optional<std::pair<std::size_t, Word>> best_gain(const std::vector<AssetDelta>& deltas, const Address& who,
                                                             const AssetRanking& ranking) {
  std::optional<std::pair<std::size_t, Word>> best;
  for (const auto& d : deltas) {
    if (d.account != who || !delta_positive(d.delta)) continue;
    std::pair<std::size_t, Word> g{ranking.rank(d.asset), d.delta};
    if (!best || g.first < best->first || (g.first == best->first && g.second > best->second)) best = g;
  }
  return best;
}

inline bool better_gain(const std::pair<std::size_t, Word>& a, const std::pair<std::size_t, Word>& b) {
  return a.first < b.first || (a.first == b.first && a.second > b.second);
}

}  // namespace detail

inline Address identify_beneficiary(const std::vector<AssetDelta>& deltas, const Address& sender, const Address& attack_contract,
                                    const AssetRanking& ranking = {}) {
  std::optional<std::pair<Address, std::pair<std::size_t, Word>>> pick;
  auto consider = [&](const Address& who) {
    auto g = detail::best_gain(deltas, who, ranking);
    if (g && (!pick || detail::better_gain(*g, pick->second))) pick = std::make_pair(who, *g);
  };
  consider(sender);
  if (attack_contract != sender) consider(attack_contract);
  if (pick) return pick->first;
  std::vector<Address> seen;
  for (const auto& d : deltas)
    if (std::find(seen.begin(), seen.end(), d.account) == seen.end()) seen.push_back(d.account);
  for (const auto& a : seen) consider(a);
  if (!pick) throw Error(ErrorCode::NoBeneficiary, "no address gains any asset");
  return pick->first;
}

struct OracleAssertion {
  AssetId asset;
  int expected_sign = 1;
  Word observed = 0;  ///< magnitude
};

struct OracleSpec {
  Address beneficiary;
  std::vector<OracleAssertion> assets;
  Word min_funding = 0;
};

struct OracleOptions {
  Word funding_floor = Word(1000000000000000000ull);
};

/// Peak cumulative native outflow of `who` over the transfer sequence.
inline Word peak_native_outflow(const std::vector<ValueTransfer>& transfers, const Address& who) {
  Word out = 0, in = 0, peak = 0;
  for (const auto& v : transfers) {
    if (v.from == v.to) continue;
    if (v.from == who) out += v.amount;
    if (v.to == who) in += v.amount;
    if (out > in) peak = std::max(peak, Word(out - in));
  }
  return peak;
}

inline OracleSpec synthesize_oracles(const FundFlow& flow, const Address& beneficiary, const Address& sender,
                                     const OracleOptions& opt = {}) {
  OracleSpec spec;
  spec.beneficiary = beneficiary;
  for (const auto& d : flow.deltas)
    if (d.account == beneficiary && delta_positive(d.delta)) spec.assets.push_back({d.asset, 1, d.delta});
  spec.min_funding = std::max(peak_native_outflow(flow.native_transfers, sender), opt.funding_floor);
  return spec;
}

inline json fund_flow_to_json(const FundFlow& flow, const TokenDb* tokens = nullptr) {
  json rows = json::array();
  for (const auto& d : flow.deltas) {
    json r;
    r["account"] = d.account.hex();
    r["asset"] = d.asset.name();
    if (tokens && !d.asset.native)
      if (const auto* t = tokens->find(d.asset.token)) r["symbol"] = t->symbol;
    r["delta"] = (is_negative(d.delta) ? "-" : "") + word_to_dec(delta_magnitude(d.delta));
    rows.push_back(r);
  }
  return json{{"deltas", rows}, {"malformed_logs", flow.malformed_logs}};
}

inline json oracle_to_json(const OracleSpec& o) {
  json assets = json::array();
  for (const auto& a : o.assets)
    assets.push_back({{"asset", a.asset.name()}, {"sign", a.expected_sign}, {"observed", word_to_dec(a.observed)}});
  return json{{"beneficiary", o.beneficiary.hex()}, {"assets", assets}, {"min_funding", word_to_dec(o.min_funding)}};
}

}  // namespace txpoc
