#pragma once

// Foundry-layout PoC sketch: fork/funding context, balance logs around the attack calls,
// and marker holes for the completion provider.

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "txpoc/decompiler.hpp"
#include "txpoc/fundflow.hpp"

namespace txpoc {

inline constexpr std::string_view kAttackLogicMarker = "/*<<ATTACK_LOGIC>>*/";
inline constexpr std::string_view kOtherFunctionsMarker = "/*<<OTHER_FUNCTIONS>>*/";
inline constexpr std::string_view kOtherContractsMarker = "/*<<OTHER_CONTRACTS>>*/";

enum class PlaceholderKind { AttackLogic, OtherFunctions, OtherContracts };

inline std::string_view placeholder_marker(PlaceholderKind k) {
  switch (k) {
    case PlaceholderKind::AttackLogic: return kAttackLogicMarker;
    case PlaceholderKind::OtherFunctions: return kOtherFunctionsMarker;
    case PlaceholderKind::OtherContracts: return kOtherContractsMarker;
  }
  return kAttackLogicMarker;
}

inline const std::vector<PlaceholderKind>& all_placeholders() {
  static const std::vector<PlaceholderKind> v{PlaceholderKind::AttackLogic, PlaceholderKind::OtherFunctions,
                                              PlaceholderKind::OtherContracts};
  return v;
}

/// EIP-55 mixed-case rendering.
inline std::string checksum_address(const Address& a) {
  std::string lower = a.hex().substr(2);
  Hash h = keccak256(std::string_view(lower));
  std::string out = "0x";
  for (std::size_t i = 0; i < lower.size(); ++i) {
    char c = lower[i];
    unsigned nib = (h[i / 2] >> (i % 2 ? 0 : 4)) & 0xf;
    out += (std::isalpha(static_cast<unsigned char>(c)) && nib >= 8) ? static_cast<char>(std::toupper(c)) : c;
  }
  return out;
}

/// Address aliases in first-registration order.
class AliasTable {
 public:
  const std::string& add(const Address& a, const std::string& preferred) {
    if (auto it = by_addr_.find(a); it != by_addr_.end()) return entries_[it->second].first;
    std::string name = preferred;
    for (int n = 2; taken_.count(name); ++n) name = preferred + "_" + std::to_string(n);
    taken_.insert(name);
    by_addr_[a] = entries_.size();
    entries_.emplace_back(name, a);
    return entries_.back().first;
  }
  const std::string* find(const Address& a) const {
    auto it = by_addr_.find(a);
    return it == by_addr_.end() ? nullptr : &entries_[it->second].first;
  }
  const std::vector<std::pair<std::string, Address>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, Address>> entries_;
  std::map<Address, std::size_t> by_addr_;
  std::set<std::string> taken_;
};

inline std::string default_alias(const Address& a, const TokenDb& tokens) {
  if (const auto* t = tokens.find(a)) return t->symbol;
  return "Contract_" + a.hex().substr(2, 8);
}

struct SketchMeta {
  std::string chain;
  std::uint64_t block = 0;
};

inline std::string chain_name(std::uint64_t chain_id) {
  switch (chain_id) {
    case 1: return "mainnet";
    case 56: return "bsc";
    case 137: return "polygon";
    case 42161: return "arbitrum";
    case 10: return "optimism";
    case 8453: return "base";
    case 43114: return "avalanche";
    default: return "";
  }
}

inline SketchMeta meta_from_trace(const TraceStream& ts) {
  SketchMeta m;
  m.chain = !ts.chain.empty() ? ts.chain : chain_name(ts.chain_id);
  m.block = ts.block_number;
  return m;
}

struct FundingEntry {
  std::string account;
  AssetId asset;
  Word amount = 0;
};

struct InvocationCall {
  std::string receiver;  ///< "attC" or a constant alias
  std::string function;
  std::optional<std::uint32_t> selector;
  std::vector<std::string> args;  ///< rendered literals
  std::vector<Address> address_literals;
  Word value = 0;
  bool constructor = false;
};

struct InterfaceDecl {
  std::string name;
  Address address;
  std::vector<std::string> functions;
};

struct ObservedCall {
  Address target;
  std::optional<std::uint32_t> selector;
  Bytes calldata;
  Bytes return_data;
  bool is_static = false;
};

struct PocSketch {
  std::string chain;
  std::uint64_t fork_block = 0;
  std::vector<std::pair<std::string, Address>> constants;
  std::vector<FundingEntry> funding;
  OracleSpec oracle;
  std::vector<std::string> pre_logs;
  std::vector<std::string> post_logs;
  /// Balance log label per oracle asset, in oracle order.
  std::vector<std::string> oracle_labels;
  std::vector<InvocationCall> invocation_sequence;
  std::vector<PlaceholderKind> placeholders;
  std::vector<InterfaceDecl> abis;
  std::string beneficiary_expr;
  std::string source_text;
};

struct SketchOptions {
  /// Invoke the recorded top-level call from the test body instead of through an attacker contract.
  bool direct_call = false;
  const SelectorDb* selectors = nullptr;
  const TokenDb* tokens = nullptr;
};

namespace detail {

inline bool is_dynamic_type(const std::string& t) {
  return t == "bytes" || t == "string" || t.find('[') != std::string::npos;
}

inline std::string param_decl(const std::string& type, const std::string& name, const char* location) {
  std::string out = type;
  if (is_dynamic_type(type)) out += std::string(" ") + location;
  if (!name.empty()) out += " " + name;
  return out;
}

inline std::string uint_literal(const Word& v) {
  static const Word e18 = Word("1000000000000000000");
  if (v >= e18 && v % e18 == 0) return word_to_dec(v / e18) + " ether";
  return word_to_dec(v);
}

inline std::string interface_function(const ObservedCall& c, const SelectorDb& db) {
  std::uint32_t sel = *c.selector;
  std::vector<std::string> params, rets;
  std::string name;
  if (auto sig = db.lookup(sel)) {
    name = sig->name;
    for (const auto& p : sig->params) params.push_back(param_decl(p.type, p.name, "calldata"));
    for (const auto& r : sig->returns) rets.push_back(param_decl(r, "", "memory"));
  } else {
    name = db.name_of(sel);
    Bytes args(c.calldata.begin() + 4, c.calldata.end());
    for (const auto& t : infer_param_types(args)) params.push_back(param_decl(t, "", "calldata"));
    for (const auto& t : infer_return_types(c.return_data)) rets.push_back(param_decl(t, "", "memory"));
  }
  std::string out = "function " + name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) out += (i ? ", " : "") + params[i];
  out += ") external";
  if (c.is_static) out += " view";
  if (!rets.empty()) {
    out += " returns (";
    for (std::size_t i = 0; i < rets.size(); ++i) out += (i ? ", " : "") + rets[i];
    out += ")";
  }
  return out + ";";
}

}  // namespace detail

/// One interface per called address, one entry per selector, in first-call order.
inline std::vector<InterfaceDecl> render_abis(const std::vector<ObservedCall>& calls, const SelectorDb& db,
                                              const std::function<std::string(const Address&)>& alias) {
  std::vector<InterfaceDecl> out;
  std::map<Address, std::size_t> idx;
  std::set<std::pair<Address, std::uint32_t>> seen;
  for (const auto& c : calls) {
    if (!c.selector || !seen.insert({c.target, *c.selector}).second) continue;
    auto [it, fresh] = idx.try_emplace(c.target, out.size());
    if (fresh) out.push_back({"I" + alias(c.target), c.target, {}});
    auto& decl = out[it->second];
    decl.functions.push_back(detail::interface_function(c, db));
  }
  return out;
}

inline std::string render_interface(const InterfaceDecl& d) {
  std::string out = "interface " + d.name + " {\n";
  for (const auto& f : d.functions) out += "  " + f + "\n";
  return out + "}\n";
}

inline const char* kIerc20Interface =
    "interface IERC20 {\n"
    "  function balanceOf(address account) external view returns (uint256);\n"
    "  function transfer(address to, uint256 amount) external returns (bool);\n"
    "  function transferFrom(address from, address to, uint256 amount) external returns (bool);\n"
    "  function approve(address spender, uint256 amount) external returns (bool);\n"
    "  function allowance(address owner, address spender) external view returns (uint256);\n"
    "  function decimals() external view returns (uint8);\n"
    "}\n";

/// Calls leaving the attack scope: frames whose caller frame runs in-scope code and whose own code does not.
inline std::vector<ObservedCall> observed_calls(const TraceStream& ts, const AttackScope& scope) {
  std::vector<ObservedCall> out;
  for (const auto& f : ts.frames) {
    if (!f.parent || is_create(f.call_type)) continue;
    const auto& p = ts.frames[*f.parent];
    if (!scope.contains_contract(p.code_address) || scope.contains_contract(f.code_address)) continue;
    const Bytes& in = ts.calldata(f.input);
    out.push_back({f.code_address, selector_from_calldata(in), in, f.return_data, f.call_type == op::STATICCALL});
  }
  return out;
}

namespace detail {

/// Head words rendered as Solidity literals; addresses become aliases.
inline std::vector<std::string> render_args(const Bytes& calldata, const std::vector<std::string>& types,
                                            AliasTable& aliases, const TokenDb& tokens,
                                            std::vector<Address>& literals) {
  std::vector<std::string> out;
  if (calldata.size() < 4) return out;
  Bytes args(calldata.begin() + 4, calldata.end());
  for (std::size_t j = 0; j < types.size() && 32 * (j + 1) <= args.size(); ++j) {
    Word v = word_from_bytes(args.data() + 32 * j, 32);
    const auto& t = types[j];
    if (t == "address") {
      Address a = Address::from_word(v);
      if (a.is_zero()) {
        out.push_back("address(0)");
        continue;
      }
      out.push_back(aliases.add(a, default_alias(a, tokens)));
      literals.push_back(a);
    } else if (is_dynamic_type(t)) {
      auto off = static_cast<std::size_t>(std::min(v, Word(args.size())));
      if (off + 32 > args.size()) {
        out.push_back("\"\"");
        continue;
      }
      auto len = static_cast<std::size_t>(std::min(word_from_bytes(args.data() + off, 32), Word(args.size())));
      std::size_t end = std::min(args.size(), off + 32 + len);
      out.push_back("hex\"" + to_hex(Bytes(args.begin() + static_cast<std::ptrdiff_t>(off + 32),
                                           args.begin() + static_cast<std::ptrdiff_t>(end)))
                                  .substr(2) +
                    "\"");
    } else if (t == "bool") {
      out.push_back(v != 0 ? "true" : "false");
    } else {
      out.push_back(uint_literal(v));
    }
  }
  return out;
}

inline std::vector<std::string> arg_types(const Bytes& calldata, const SelectorDb& db) {
  std::vector<std::string> types;
  if (auto sel = selector_from_calldata(calldata); sel)
    if (auto sig = db.lookup(*sel)) {
      for (const auto& p : sig->params) types.push_back(p.type);
      return types;
    }
  if (calldata.size() < 4) return types;
  return infer_param_types(Bytes(calldata.begin() + 4, calldata.end()));
}

inline std::string call_text(const InvocationCall& c) {
  std::string s = c.receiver + "." + c.function;
  if (c.value != 0) s += "{value: " + uint_literal(c.value) + "}";
  s += "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) s += (i ? ", " : "") + c.args[i];
  return s + ")";
}

}  // namespace detail

/// Pieces of the transaction the sketch is grounded in.
struct SketchScope {
  const TraceStream& ts;
  const AttackScope& scope;
};

inline PocSketch build_sketch(const SketchScope& in, const std::vector<LiftedFunction>& pseudocode, const OracleSpec& oracle,
                              const SketchMeta& meta, const SketchOptions& opt = {}) {
  if (meta.chain.empty()) throw Error(ErrorCode::MissingMeta, "no chain name known for the transaction");
  if (meta.block == 0) throw Error(ErrorCode::MissingMeta, "no block number known for the transaction");
  static const SelectorDb builtin_selectors = SelectorDb::builtin();
  static const TokenDb builtin_tokens = TokenDb::builtin();
  const SelectorDb& db = opt.selectors ? *opt.selectors : builtin_selectors;
  const TokenDb& tokens = opt.tokens ? *opt.tokens : builtin_tokens;
  const TraceStream& ts = in.ts;

  PocSketch sk;
  sk.chain = meta.chain;
  sk.fork_block = meta.block - 1;
  sk.oracle = oracle;
  sk.placeholders = all_placeholders();

  AliasTable aliases;
  aliases.add(ts.sender, "attacker");
  auto alias_of = [&](const Address& a) { return aliases.add(a, default_alias(a, tokens)); };

  const bool direct = opt.direct_call || in.scope.contracts.empty();
  const bool create_tx = ts.is_create && !direct;
  const Address attack = ts.initial_recipient;
  const bool attc_beneficiary = !direct && oracle.beneficiary == attack && attack != ts.sender;

  // Invocation sequence: the recorded top-level call.
  InvocationCall top;
  if (!ts.frames.empty()) {
    const Bytes& cd = ts.calldata(ts.frames.front().input);
    top.selector = selector_from_calldata(cd);
    top.value = ts.tx_value;
    if (create_tx) {
      top.receiver = "attC";
      top.function = "constructor";
      top.constructor = true;
    } else if (direct) {
      top.receiver = "I" + alias_of(attack) + "(" + alias_of(attack) + ")";
      top.function = top.selector ? db.name_of(*top.selector) : "fallback";
      top.args = detail::render_args(cd, detail::arg_types(cd, db), aliases, tokens, top.address_literals);
      top.address_literals.push_back(attack);
    } else {
      top.receiver = "attC";
      top.function = top.selector ? db.name_of(*top.selector) : "attack";
      // concrete arguments go to the provider through the pseudocode; the entry takes none
      detail::render_args(cd, detail::arg_types(cd, db), aliases, tokens, top.address_literals);
    }
    if (!direct) sk.invocation_sequence.push_back(top);
  }

  // Oracle labels and expressions.
  std::string who = attc_beneficiary ? "address(attC)" : alias_of(oracle.beneficiary);
  if (oracle.beneficiary == ts.sender) who = "attacker";
  sk.beneficiary_expr = who;
  for (const auto& a : oracle.assets) {
    std::string label, expr;
    if (a.asset.native) {
      label = "NATIVE";
      expr = who + ".balance";
    } else {
      label = alias_of(a.asset.token);
      expr = "IERC20(" + label + ").balanceOf(" + who + ")";
    }
    sk.oracle_labels.push_back(label);
    sk.pre_logs.push_back("emit log_named_uint(\"before attack: " + label + "\", " + expr + ");");
    sk.post_logs.push_back("emit log_named_uint(\"after attack: " + label + "\", " + expr + ");");
  }

  sk.funding.push_back({"attacker", AssetId::native_asset(), oracle.min_funding});

  // Interfaces for every selector the scope called.
  auto calls = observed_calls(ts, in.scope);
  for (const auto& c : calls) alias_of(c.target);
  sk.abis = render_abis(calls, db, [&](const Address& a) { return alias_of(a); });
  std::vector<ObservedCall> direct_calls;
  if (direct && top.selector && !ts.frames.empty()) {
    direct_calls.push_back({attack, top.selector, ts.calldata(ts.frames.front().input), ts.frames.front().return_data, false});
    auto extra = render_abis(direct_calls, db, [&](const Address& a) { return alias_of(a); });
    for (auto& d : extra) {
      auto it = std::find_if(sk.abis.begin(), sk.abis.end(), [&](const auto& x) { return x.address == d.address; });
      if (it == sk.abis.end())
        sk.abis.push_back(d);
      else
        for (auto& f : d.functions)
          if (std::find(it->functions.begin(), it->functions.end(), f) == it->functions.end()) it->functions.push_back(f);
    }
  }

  // In-scope functions other than the entry: callbacks and helper-contract logic.
  std::vector<std::string> callbacks, helpers;
  std::set<std::string> seen_cb, seen_helper;
  for (const auto& f : pseudocode) {
    const auto& t = f.trace;
    if (t.address == attack && t.depth == 1) continue;
    if (t.address == attack || t.context_address == attack) {
      std::string d = f.name;
      if (t.selector) {
        auto sig = db.lookup(*t.selector);
        d = (sig ? sig->pretty() : f.name) + " " + selector_hex(*t.selector);
      }
      if (t.rule == ScopeRule::ContextDelegation && t.address != attack)
        d += " (delegated to " + alias_of(t.address) + ")";
      if (seen_cb.insert(d).second) callbacks.push_back(d);
    } else {
      std::string d = alias_of(t.address) + " (" + std::string(scope_rule_name(t.rule)) + ")";
      if (seen_helper.insert(d).second) helpers.push_back(d);
    }
  }
  for (const auto& [a, rule] : in.scope.contracts) {
    if (a == attack) continue;
    std::string d = alias_of(a) + " (" + std::string(scope_rule_name(rule)) + ")";
    if (seen_helper.insert(d).second) helpers.push_back(d);
  }

  sk.constants = aliases.entries();

  // Render.
  std::ostringstream o;
  o << "// SPDX-License-Identifier: UNLICENSED\n";
  o << "pragma solidity ^0.8.10;\n\n";
  o << "import \"forge-std/Test.sol\";\n\n";
  for (const auto& [name, a] : sk.constants) o << "address constant " << name << " = " << checksum_address(a) << ";\n";
  o << "\n";
  o << "contract ContractTest is Test {\n";
  o << "  function setUp() public {\n";
  o << "    vm.createSelectFork(\"" << sk.chain << "\", " << meta.block << " - 1);\n";
  for (const auto& f : sk.funding) o << "    deal(" << f.account << ", " << detail::uint_literal(f.amount) << ");\n";
  for (const auto& [name, a] : sk.constants) o << "    vm.label(" << name << ", \"" << name << "\");\n";
  o << "  }\n\n";
  o << "  function testPoC() public {\n";
  if (!attc_beneficiary)
    for (const auto& l : sk.pre_logs) o << "    " << l << "\n";
  o << "    vm.startPrank(attacker, attacker);\n";
  if (direct) {
    if (!ts.frames.empty()) o << "    " << detail::call_text(top) << ";\n";
    o << "    " << kAttackLogicMarker << "\n";
    o << "    vm.stopPrank();\n";
    for (const auto& l : sk.post_logs) o << "    " << l << "\n";
    o << "  }\n";
    o << "  " << kOtherFunctionsMarker << "\n";
    o << "}\n\n";
  } else {
    if (create_tx) {
      o << "    AttackerC attC = new AttackerC" << (top.value != 0 ? "{value: " + detail::uint_literal(top.value) + "}" : "")
        << "();\n";
      if (attc_beneficiary)
        for (const auto& l : sk.pre_logs) o << "    " << l << "\n";
    } else {
      o << "    AttackerC attC = new AttackerC();\n";
      if (attc_beneficiary)
        for (const auto& l : sk.pre_logs) o << "    " << l << "\n";
      for (const auto& c : sk.invocation_sequence) o << "    " << detail::call_text(c) << ";\n";
    }
    o << "    vm.stopPrank();\n";
    for (const auto& l : sk.post_logs) o << "    " << l << "\n";
    o << "  }\n";
    o << "}\n\n";
    o << "contract AttackerC {\n";
    if (create_tx) {
      o << "  constructor() payable {\n";
    } else {
      o << "  function " << (sk.invocation_sequence.empty() ? "attack" : sk.invocation_sequence.front().function)
        << "() public payable {\n";
    }
    o << "    " << kAttackLogicMarker << "\n";
    o << "  }\n\n";
    for (const auto& c : callbacks) o << "  // observed callback: " << c << "\n";
    o << "  " << kOtherFunctionsMarker << "\n\n";
    o << "  receive() external payable {}\n";
    o << "}\n\n";
  }
  for (const auto& h : helpers) o << "// helper contract: " << h << "\n";
  o << kOtherContractsMarker << "\n\n";
  o << kIerc20Interface;
  for (const auto& d : sk.abis) o << "\n" << render_interface(d);
  sk.source_text = o.str();
  return sk;
}

/// Number of non-overlapping occurrences of `needle` in `hay`.
inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string_view::npos; p = hay.find(needle, p + needle.size())) ++n;
  return n;
}

namespace detail {

struct SolToken {
  enum Kind { Ident, Number, Punct, String } kind;
  std::string text;
};

/// Tokens outside comments; string literals collapse to one token.
inline std::vector<SolToken> sol_tokens(std::string_view s) {
  std::vector<SolToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (s.substr(i, 2) == "//") {
      while (i < s.size() && s[i] != '\n') ++i;
    } else if (s.substr(i, 2) == "/*") {
      auto e = s.find("*/", i + 2);
      i = e == std::string_view::npos ? s.size() : e + 2;
    } else if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      while (j < s.size() && s[j] != c) j += (s[j] == '\\') ? 2 : 1;
      out.push_back({SolToken::String, std::string(s.substr(i, j + 1 - i))});
      i = j + 1;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' || s[j] == '$')) ++j;
      out.push_back({SolToken::Ident, std::string(s.substr(i, j - i))});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      out.push_back({SolToken::Number, std::string(s.substr(i, j - i))});
      i = j;
    } else {
      out.push_back({SolToken::Punct, std::string(1, c)});
      ++i;
    }
  }
  return out;
}

inline const std::set<std::string>& sol_builtins() {
  static const std::set<std::string> b{
      "pragma", "solidity", "import", "contract", "interface", "library", "is", "function", "constructor", "receive",
      "fallback", "public", "external", "internal", "private", "view", "pure", "payable", "returns", "return", "memory",
      "calldata", "storage", "constant", "immutable", "new", "emit", "event", "if", "else", "for", "while", "do",
      "break", "continue", "require", "revert", "assert", "true", "false", "this", "msg", "tx", "block", "abi",
      "address", "bool", "string", "bytes", "bytes4", "bytes32", "uint", "uint8", "uint16", "uint32", "uint64",
      "uint112", "uint128", "uint256", "int", "int256", "ether", "gwei", "wei", "override", "virtual", "unchecked",
      "type", "delete", "struct", "enum", "mapping", "using", "modifier", "keccak256", "selfdestruct", "try", "catch",
      "Test", "vm", "deal", "console", "console2", "log_named_uint", "log_named_decimal_uint", "log_string",
      "assertGt", "assertEq", "assertTrue", "hex", "UNLICENSED", "SPDX"};
  return b;
}

}  // namespace detail

/// Identifiers referenced but never declared. Member names after '.' and named call options are not checked.
inline std::vector<std::string> undeclared_identifiers(std::string_view source) {
  auto toks = detail::sol_tokens(source);
  std::set<std::string> declared = detail::sol_builtins();
  auto is_ident = [&](std::size_t k) { return k < toks.size() && toks[k].kind == detail::SolToken::Ident; };
  auto punct = [&](std::size_t k, char c) { return k < toks.size() && toks[k].kind == detail::SolToken::Punct && toks[k].text[0] == c; };
  static const std::set<std::string> not_types{"return", "emit", "new", "else", "delete", "is", "import", "pragma"};
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (!is_ident(k)) continue;
    const auto& t = toks[k].text;
    if ((t == "contract" || t == "interface" || t == "library" || t == "function" || t == "event" || t == "struct" ||
         t == "modifier") && is_ident(k + 1))
      declared.insert(toks[k + 1].text);
    // `Type [location] name` followed by a declaration terminator
    if (k > 0 && (is_ident(k - 1) || punct(k - 1, ']')) && (punct(k + 1, '=') || punct(k + 1, ';') || punct(k + 1, ',') ||
                                                            punct(k + 1, ')')))
      if (!is_ident(k - 1) || !not_types.count(toks[k - 1].text)) declared.insert(t);
  }
  std::vector<std::string> missing;
  std::set<std::string> reported;
  for (std::size_t k = 0; k < toks.size(); ++k) {
    if (!is_ident(k)) continue;
    if (k > 0 && punct(k - 1, '.')) continue;
    if (punct(k + 1, ':') && !punct(k + 2, ':')) continue;
    const auto& t = toks[k].text;
    if (k > 0 && is_ident(k - 1) && toks[k - 1].text == "pragma") continue;
    if (!declared.count(t) && reported.insert(t).second) missing.push_back(t);
  }
  return missing;
}

inline json sketch_to_json(const PocSketch& s) {
  json constants = json::array();
  for (const auto& [n, a] : s.constants) constants.push_back({{"name", n}, {"address", a.hex()}});
  json funding = json::array();
  for (const auto& f : s.funding)
    funding.push_back({{"account", f.account}, {"asset", f.asset.name()}, {"amount", word_to_dec(f.amount)}});
  json seq = json::array();
  for (const auto& c : s.invocation_sequence) seq.push_back(detail::call_text(c));
  json abis = json::array();
  for (const auto& d : s.abis) abis.push_back({{"name", d.name}, {"address", d.address.hex()}, {"functions", d.functions}});
  json holes = json::array();
  for (auto p : s.placeholders) holes.push_back(std::string(placeholder_marker(p)));
  return json{{"chain", s.chain},         {"fork_block", s.fork_block}, {"constants", constants},
              {"funding", funding},       {"oracle", oracle_to_json(s.oracle)}, {"invocation_sequence", seq},
              {"placeholders", holes},    {"abis", abis}};
}

}  // namespace txpoc
