#pragma once

// Native contract models used by the fixture scenarios.

#include "support/evm.hpp"

namespace txpoc::testkit {

inline Word topic(std::string_view sig) { return hash_to_word(keccak256(sig)); }

inline Word mapping_slot(const Word& key, const Word& slot) { return hash_to_word(keccak256(abi_words({key, slot}))); }

inline bool is_sel(const NativeCtx& c, std::string_view sig) { return c.input.size() >= 4 && c.selector() == selector_of(sig); }

/// Error(string) revert payload.
inline Bytes error_string(std::string_view msg) {
  Bytes out = calldata("Error(string)", {Word(32)});
  Bytes tail = abi_bytes_tail(Bytes(msg.begin(), msg.end()));
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

inline Word balance_slot(const Address& who) { return mapping_slot(who.to_word(), 0); }
inline Word allowance_slot(const Address& owner, const Address& spender) {
  return mapping_slot(spender.to_word(), mapping_slot(owner.to_word(), 1));
}
inline constexpr unsigned kSupplySlot = 2;

inline Word max_word() { return ~Word(0); }

/// ERC20 with optional minter and WETH-style deposit/withdraw.
inline NativeFn erc20(Address minter = {}) {
  return [minter](NativeCtx& c) {
    const Word transfer_topic = topic("Transfer(address,address,uint256)");
    auto move = [&](const Address& from, const Address& to, const Word& amt) {
      Word fb = c.sload(balance_slot(from));
      if (fb < amt) {
        c.revert(error_string("ERC20: transfer amount exceeds balance"));
        return false;
      }
      c.sstore(balance_slot(from), fb - amt);
      Word tb = c.sload(balance_slot(to));
      c.sstore(balance_slot(to), tb + amt);
      c.log({transfer_topic, from.to_word(), to.to_word()}, word_to_bytes(amt));
      return true;
    };
    auto mint = [&](const Address& to, const Word& amt) {
      c.sstore(kSupplySlot, c.sload(kSupplySlot) + amt);
      c.sstore(balance_slot(to), c.sload(balance_slot(to)) + amt);
      c.log({transfer_topic, Word(0), to.to_word()}, word_to_bytes(amt));
    };
    auto burn = [&](const Address& from, const Word& amt) {
      Word fb = c.sload(balance_slot(from));
      if (fb < amt) {
        c.revert();
        return false;
      }
      c.sstore(balance_slot(from), fb - amt);
      c.sstore(kSupplySlot, c.sload(kSupplySlot) - amt);
      return true;
    };

    if (is_sel(c, "transfer(address,uint256)")) {
      if (c.is_static) return c.revert();
      if (move(c.caller, c.arg_addr(0), c.arg(1))) c.ret_word(1);
    } else if (is_sel(c, "transferFrom(address,address,uint256)")) {
      if (c.is_static) return c.revert();
      Address from = c.arg_addr(0);
      Word amt = c.arg(2);
      if (from != c.caller) {
        Word allowed = c.sload(allowance_slot(from, c.caller));
        if (allowed < amt) return c.revert(error_string("ERC20: insufficient allowance"));
        if (allowed != max_word()) c.sstore(allowance_slot(from, c.caller), allowed - amt);
      }
      if (move(from, c.arg_addr(1), amt)) c.ret_word(1);
    } else if (is_sel(c, "approve(address,uint256)")) {
      if (c.is_static) return c.revert();
      c.sstore(allowance_slot(c.caller, c.arg_addr(0)), c.arg(1));
      c.log({topic("Approval(address,address,uint256)"), c.caller.to_word(), c.arg(0)}, word_to_bytes(c.arg(1)));
      c.ret_word(1);
    } else if (is_sel(c, "balanceOf(address)")) {
      c.ret_word(c.sload(balance_slot(c.arg_addr(0))));
    } else if (is_sel(c, "allowance(address,address)")) {
      c.ret_word(c.sload(allowance_slot(c.arg_addr(0), c.arg_addr(1))));
    } else if (is_sel(c, "totalSupply()")) {
      c.ret_word(c.sload(kSupplySlot));
    } else if (is_sel(c, "decimals()")) {
      c.ret_word(18);
    } else if (is_sel(c, "mint(address,uint256)")) {
      if (c.caller != minter || minter.is_zero()) return c.revert(error_string("not minter"));
      mint(c.arg_addr(0), c.arg(1));
      c.stop();
    } else if (is_sel(c, "withdraw(uint256)")) {
      Word wad = c.arg(0);
      if (!burn(c.caller, wad)) return;
      auto r = c.call(c.caller, {}, wad);
      if (!r.success) return c.revert();
      c.log({topic("Withdrawal(address,uint256)"), c.caller.to_word()}, word_to_bytes(wad));
      c.stop();
    } else if (is_sel(c, "deposit()") || (c.input.empty() && c.value != 0)) {
      c.sstore(balance_slot(c.caller), c.sload(balance_slot(c.caller)) + c.value);
      c.sstore(kSupplySlot, c.sload(kSupplySlot) + c.value);
      c.log({topic("Deposit(address,uint256)"), c.caller.to_word()}, word_to_bytes(c.value));
      c.stop();
    } else {
      c.revert();
    }
  };
}

/// Seeds a token balance without emitting any trace.
inline void seed_balance(Vm& vm, const Address& token, const Address& who, const Word& amt) {
  auto& st = vm.account(token).storage;
  st[balance_slot(who)] += amt;
  st[Word(kSupplySlot)] += amt;
}

inline Word token_balance(Vm& vm, const Address& token, const Address& who) {
  auto& st = vm.account(token).storage;
  auto it = st.find(balance_slot(who));
  return it == st.end() ? Word(0) : it->second;
}

/// Forwards everything to `impl` by DELEGATECALL.
inline NativeFn proxy(Address impl) {
  return [impl](NativeCtx& c) {
    auto r = c.delegatecall(impl, c.input);
    if (r.success)
      c.ret(r.output);
    else
      c.revert(r.output);
  };
}

/// Flash-lending pool: slots 0/1 hold base/quote token, 2/3 the reserves.
inline NativeFn dvm_pool() {
  return [](NativeCtx& c) {
    if (is_sel(c, "_BASE_TOKEN_()")) return c.ret_word(c.sload(0));
    if (is_sel(c, "_QUOTE_TOKEN_()")) return c.ret_word(c.sload(1));
    if (!is_sel(c, "flashLoan(uint256,uint256,address,bytes)")) return c.revert();
    Word base = c.arg(0), quote = c.arg(1);
    Address to = c.arg_addr(2);
    Bytes data = c.arg_bytes(3);
    Address base_tok = Address::from_word(c.sload(0)), quote_tok = Address::from_word(c.sload(1));
    if (base != 0) {
      auto r = c.call(base_tok, calldata("transfer(address,uint256)", {to.to_word(), base}));
      if (!r.success) return c.revert(r.output);
    }
    if (quote != 0) {
      auto r = c.call(quote_tok, calldata("transfer(address,uint256)", {to.to_word(), quote}));
      if (!r.success) return c.revert(r.output);
    }
    if (!data.empty()) {
      auto r = c.call(to, calldata("DVMFlashLoanCall(address,uint256,uint256,bytes)",
                                   {c.caller.to_word(), base, quote, Word(0x80)}, abi_bytes_tail(data)));
      if (!r.success) return c.revert(r.output);
    }
    Word base_now = c.staticcall(base_tok, calldata("balanceOf(address)", {c.self.to_word()})).word();
    Word quote_now = c.staticcall(quote_tok, calldata("balanceOf(address)", {c.self.to_word()})).word();
    if (base_now < c.sload(2) || quote_now < c.sload(3)) return c.revert(error_string("FLASH_LOAN_FAILED"));
    c.sstore(2, base_now);
    c.sstore(3, quote_now);
    c.log({topic("DODOFlashLoan(address,address,uint256,uint256)")},
          abi_words({c.caller.to_word(), to.to_word(), base, quote}));
    c.stop();
  };
}

/// Sells `token` for `price` of `pay` per call; every buy mints price/1000 less than the one before.
inline NativeFn share_sale(Address pay, Address token, Word price) {
  return [=](NativeCtx& c) {
    if (!is_sel(c, "buy()")) return c.revert();
    Word i = c.sload(0);
    auto r = c.call(pay, calldata("transferFrom(address,address,uint256)", {c.caller.to_word(), c.self.to_word(), price}));
    if (!r.success) return c.revert(r.output);
    Word minted = price - i * (price / 1000);
    r = c.call(token, calldata("mint(address,uint256)", {c.caller.to_word(), minted}));
    if (!r.success) return c.revert(r.output);
    c.sstore(0, i + 1);
    c.stop();
  };
}

/// Buys any amount of `token` for a fixed `payout` of `pay`.
inline NativeFn fixed_router(Address pay, Address token, Word payout) {
  return [=](NativeCtx& c) {
    if (!is_sel(c, "sell(uint256)")) return c.revert();
    auto r = c.call(token, calldata("transferFrom(address,address,uint256)", {c.caller.to_word(), c.self.to_word(), c.arg(0)}));
    if (!r.success) return c.revert(r.output);
    r = c.call(pay, calldata("transfer(address,uint256)", {c.caller.to_word(), payout}));
    if (!r.success) return c.revert(r.output);
    c.stop();
  };
}

/// Flash-swap pair over one token. The repayment check only asks for half of the loan back.
inline NativeFn flash_pair(Address token) {
  return [token](NativeCtx& c) {
    if (is_sel(c, "getReserves()")) return c.ret(abi_words({c.sload(0), c.sload(1), Word(0)}));
    if (!is_sel(c, "swap(uint256,uint256,address,bytes)")) return c.revert();
    Word out = c.arg(0);
    Address to = c.arg_addr(2);
    Word before = c.staticcall(token, calldata("balanceOf(address)", {c.self.to_word()})).word();
    auto r = c.call(token, calldata("transfer(address,uint256)", {to.to_word(), out}));
    if (!r.success) return c.revert(r.output);
    r = c.call(to, calldata("pancakeCall(address,uint256,uint256,bytes)", {c.caller.to_word(), out, Word(0), Word(0x80)},
                            abi_bytes_tail(c.arg_bytes(3))));
    if (!r.success) return c.revert(r.output);
    Word after = c.staticcall(token, calldata("balanceOf(address)", {c.self.to_word()})).word();
    if (after * 2 < before) return c.revert(error_string("Pancake: INSUFFICIENT_INPUT_AMOUNT"));
    c.sstore(0, after);
    c.log({topic("Sync(uint112,uint112)")}, abi_words({after, c.sload(1)}));
    c.stop();
  };
}

/// Calls back its caller with `cb()` `n` times, n taken from calldata.
inline NativeFn bouncer() {
  return [](NativeCtx& c) {
    if (!is_sel(c, "bounce(uint256)")) return c.revert();
    Word n = c.arg(0);
    for (Word i = 0; i < n; ++i) {
      auto r = c.call(c.caller, calldata("cb()", {}));
      if (!r.success) return c.revert(r.output);
    }
    c.stop();
  };
}

// --- bytecode helpers ---------------------------------------------------------

/// Stores the selector at `base` and each argument (pushed by the callbacks) at base+4+32k.
template <typename... Pushers>
inline void stage_call(Asm& a, std::string_view sig, std::size_t base, Pushers&&... args) {
  a.store_selector(sig, base);
  std::size_t k = 0;
  ((args(a), a.push(Word(base + 4 + 32 * k++)).op(op::MSTORE)), ...);
}

/// CALL/STATICCALL of `len` bytes at `in_off`, one return word to `out_off`, jump to `fail` on failure.
inline void do_call(Asm& a, std::uint8_t code, const std::function<void(Asm&)>& target, std::size_t in_off, std::size_t len,
                    std::size_t out_off, std::size_t out_len, const std::string& fail) {
  a.push(Word(out_len)).push(Word(out_off)).push(Word(len)).push(Word(in_off));
  if (code == op::CALL) a.op(op::PUSH0);
  target(a);
  a.op(op::GAS).op(code).op(op::ISZERO).jumpi(fail);
}

inline std::function<void(Asm&)> const_addr(Address x) {
  return [x](Asm& a) { a.push_addr(x); };
}
inline std::function<void(Asm&)> const_word(Word w) {
  return [w](Asm& a) { a.push(w); };
}
inline std::function<void(Asm&)> cd_word(std::size_t off) {
  return [off](Asm& a) { a.push(Word(off)).op(op::CALLDATALOAD); };
}
inline std::function<void(Asm&)> opcode_value(std::uint8_t code) {
  return [code](Asm& a) { a.op(code); };
}

/// Selector dispatch: jumps to label "fn:<sig>" for each signature, reverts otherwise.
inline void dispatcher(Asm& a, const std::vector<std::string>& sigs) {
  a.op(op::PUSH0).op(op::CALLDATALOAD).push(224).op(op::SHR);
  for (const auto& s : sigs) a.op(op::DUP1).push_selector(s).op(op::EQ).jumpi("fn:" + s);
  a.revert_empty();
}

}  // namespace txpoc::testkit
