#pragma once

// Selector and token databases, ABI shape inference and literal formatting.

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txpoc/error.hpp"
#include "txpoc/trace.hpp"
#include "txpoc/word.hpp"

namespace txpoc {

struct AbiParam {
  std::string type;
  std::string name;
  bool operator==(const AbiParam&) const = default;
};

struct FunctionSig {
  std::string name;
  std::vector<AbiParam> params;
  std::vector<std::string> returns;

  std::string canonical() const {
    std::string s = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) s += (i ? "," : "") + params[i].type;
    return s + ")";
  }
  /// Types with parameter names, e.g. "flashLoan(uint256 baseAmount, address assetTo)".
  std::string pretty() const {
    std::string s = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i) s += ", ";
      s += params[i].type;
      if (!params[i].name.empty()) s += " " + params[i].name;
    }
    return s + ")";
  }
  bool operator==(const FunctionSig&) const = default;
};

namespace detail {
inline std::string trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}
}  // namespace detail

/// Parses "name(type [name], ...) [returns (type, ...)]".
inline FunctionSig parse_signature(const std::string& text) {
  FunctionSig sig;
  auto open = text.find('(');
  if (open == std::string::npos) throw Error(ErrorCode::ConfigError, "bad signature '" + text + "'");
  sig.name = detail::trim(text.substr(0, open));
  int depth = 0;
  std::size_t close = std::string::npos;
  for (std::size_t i = open; i < text.size(); ++i) {
    if (text[i] == '(') ++depth;
    if (text[i] == ')' && --depth == 0) {
      close = i;
      break;
    }
  }
  if (close == std::string::npos) throw Error(ErrorCode::ConfigError, "unbalanced signature '" + text + "'");
  for (const auto& p : detail::split_top_level(text.substr(open + 1, close - open - 1))) {
    auto sp = p.find(' ');
    if (sp == std::string::npos)
      sig.params.push_back({p, ""});
    else
      sig.params.push_back({detail::trim(p.substr(0, sp)), detail::trim(p.substr(sp + 1))});
  }
  auto rest = text.substr(close + 1);
  if (auto r = rest.find("returns"); r != std::string::npos) {
    auto ro = rest.find('(', r);
    auto rc = rest.rfind(')');
    if (ro != std::string::npos && rc != std::string::npos && rc > ro)
      for (const auto& t : detail::split_top_level(rest.substr(ro + 1, rc - ro - 1))) {
        auto sp = t.find(' ');
        sig.returns.push_back(sp == std::string::npos ? t : t.substr(0, sp));
      }
  }
  return sig;
}

class SelectorDb {
 public:
  static SelectorDb builtin() {
    SelectorDb db;
    for (const char* s : {"transfer(address to,uint256 amount) returns (bool)",
                          "transferFrom(address from,address to,uint256 amount) returns (bool)",
                          "approve(address spender,uint256 amount) returns (bool)",
                          "balanceOf(address account) returns (uint256)",
                          "allowance(address owner,address spender) returns (uint256)",
                          "totalSupply() returns (uint256)", "decimals() returns (uint8)",
                          "deposit()", "withdraw(uint256 amount)",
                          "getReserves() returns (uint112,uint112,uint32)",
                          "swap(uint256 amount0Out,uint256 amount1Out,address to,bytes data)", "sync()", "skim(address to)",
                          "flashLoan(uint256 baseAmount,uint256 quoteAmount,address assetTo,bytes data)",
                          "_BASE_TOKEN_() returns (address)", "_QUOTE_TOKEN_() returns (address)",
                          "DVMFlashLoanCall(address sender,uint256 baseAmount,uint256 quoteAmount,bytes data)"})
      db.add(parse_signature(s));
    return db;
  }

  void add(FunctionSig sig) {
    auto sel = selector_of(sig.canonical());
    entries_[sel] = std::move(sig);
  }

  /// Entries keyed by "0x12345678" or plain signatures in a JSON array.
  void load_json(const json& j) {
    if (j.is_array()) {
      for (const auto& s : j) add(parse_signature(s.get<std::string>()));
      return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      auto sig = parse_signature(it.value().get<std::string>());
      auto sel = static_cast<std::uint32_t>(word_from_hex(it.key()));
      entries_[sel] = std::move(sig);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open selector database " + path);
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ConfigError, "selector database " + path + ": " + e.what());
    }
    load_json(j);
  }

  std::optional<FunctionSig> lookup(std::uint32_t sel) const {
    auto it = entries_.find(sel);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::string name_of(std::uint32_t sel) const {
    if (auto s = lookup(sel)) return s->name;
    return "func_" + selector_hex(sel).substr(2);
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::uint32_t, FunctionSig> entries_;
};

enum class AssetClass { Native = 0, WrappedNative = 1, Stable = 2, Other = 3 };

struct TokenInfo {
  std::string symbol;
  AssetClass cls = AssetClass::Other;
};

class TokenDb {
 public:
  static TokenDb builtin() {
    TokenDb db;
    // BSC
    db.add("0x55d398326f99059ff775485246999027b3197955", "USDT", AssetClass::Stable);
    db.add("0xbb4cdb9cbd36b01bd1cbaebf2de08d9173bc095c", "WBNB", AssetClass::WrappedNative);
    db.add("0xe9e7cea3dedca5984780bafc599bd69add087d56", "BUSD", AssetClass::Stable);
    db.add("0x8ac76a51cc950d9822d68b83fe1ad97b32cd580d", "USDC", AssetClass::Stable);
    // Ethereum
    db.add("0xc02aaa39b223fe8d0a0e5c4f27ead9083c756cc2", "WETH", AssetClass::WrappedNative);
    db.add("0xdac17f958d2ee523a2206206994597c13d831ec7", "USDT", AssetClass::Stable);
    db.add("0xa0b86991c6218b36c1d19d4a2e9eb0ce3606eb48", "USDC", AssetClass::Stable);
    db.add("0x6b175474e89094c44da98b954eedeac495271d0f", "DAI", AssetClass::Stable);
    return db;
  }

  void add(const std::string& address, std::string symbol, AssetClass cls) {
    tokens_[Address::from_hex(address)] = TokenInfo{std::move(symbol), cls};
  }

  /// {"0xaddr": {"symbol": "X", "class": "stable|wrapped|other"}}
  void load_json(const json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& v = it.value();
      auto cls_name = v.value("class", std::string("other"));
      AssetClass cls = cls_name == "stable" ? AssetClass::Stable
                       : cls_name == "wrapped" ? AssetClass::WrappedNative
                                               : AssetClass::Other;
      add(it.key(), v.value("symbol", std::string("TOKEN")), cls);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open token database " + path);
    json j;
    in >> j;
    load_json(j);
  }

  const TokenInfo* find(const Address& a) const {
    auto it = tokens_.find(a);
    return it == tokens_.end() ? nullptr : &it->second;
  }

 private:
  std::map<Address, TokenInfo> tokens_;
};

inline bool looks_like_address(const Word& v) { return v >= (Word(1) << 120) && v < (Word(1) << 160); }

/// Infers head types of ABI-encoded arguments (selector already stripped) from the concrete bytes.
inline std::vector<std::string> infer_param_types(const Bytes& args) {
  std::vector<std::string> types;
  std::size_t n = args.size() / 32;
  auto word = [&](std::size_t j) { return word_from_bytes(args.data() + 32 * j, 32); };
  std::size_t head_end = n;
  for (std::size_t j = 0; j < head_end; ++j) {
    Word v = word(j);
    bool dynamic = false;
    if (v % 32 == 0 && v >= Word(32 * (j + 1)) && v < Word(args.size())) {
      auto off = static_cast<std::size_t>(v);
      if (off + 32 <= args.size()) {
        Word len = word(off / 32);
        if (len <= Word(args.size())) {
          auto l = static_cast<std::size_t>(len);
          if (off + 32 + ((l + 31) / 32) * 32 <= args.size()) {
            dynamic = true;
            head_end = std::min(head_end, off / 32);
          }
        }
      }
    }
    types.push_back(dynamic ? "bytes" : looks_like_address(v) ? "address" : "uint256");
  }
  return types;
}

inline std::vector<std::string> infer_return_types(const Bytes& ret) {
  if (ret.empty()) return {};
  if (ret.size() % 32 != 0) return {"bytes"};
  return infer_param_types(ret);
}

inline std::string format_address_word(const Word& v) { return Address::from_word(v).hex(); }

/// Renders a concrete constant: addresses as 40-hex, whole ether-scale amounts as m * 10^18.
inline std::string format_literal(const Word& v) {
  static const Word e18 = Word("1000000000000000000");
  if (looks_like_address(v)) return format_address_word(v);
  if (v >= e18 && v % e18 == 0) return word_to_dec(v / e18) + " * 10^18";
  if (v > Word(std::numeric_limits<std::uint64_t>::max())) return word_to_hex(v);
  return word_to_dec(v);
}

}  // namespace txpoc
