#pragma once

// Trace-driven lifting of in-scope functions into pseudocode.
//
// The lifter replays the function's instructions on a symbolic stack. Every
// value is an expression paired with the concrete value the trace observed,
// memory and storage are addressed by concrete ranges, and each JUMPI follows
// the one successor that actually executed.

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txpoc/abi.hpp"
#include "txpoc/expr.hpp"
#include "txpoc/memory.hpp"
#include "txpoc/scope.hpp"

namespace txpoc {

enum class StmtKind {
  Assign,
  MemWrite,
  ExternalCall,
  StaticCall,
  DelegateCall,
  Create,
  IfTaken,
  Loop,
  Log,
  Return,
  Revert,
  SelfDestruct,
};

inline std::string_view stmt_kind_name(StmtKind k) {
  switch (k) {
    case StmtKind::Assign: return "assign";
    case StmtKind::MemWrite: return "mem_write";
    case StmtKind::ExternalCall: return "external_call";
    case StmtKind::StaticCall: return "static_call";
    case StmtKind::DelegateCall: return "delegate_call";
    case StmtKind::Create: return "create";
    case StmtKind::IfTaken: return "if_taken";
    case StmtKind::Loop: return "loop";
    case StmtKind::Log: return "log";
    case StmtKind::Return: return "return";
    case StmtKind::Revert: return "revert";
    case StmtKind::SelfDestruct: return "selfdestruct";
  }
  return "assign";
}

struct CallDetail {
  std::uint8_t opcode = op::CALL;
  Address target;
  std::optional<std::uint32_t> selector;
  Bytes return_data;
  bool success = true;
  std::uint32_t index = 0;  ///< 1-based ordinal of the call within the invocation
};

/// Operand layout by kind:
///   Assign       local: [value]; storage: [slot, value]
///   MemWrite     [offset, value]
///   calls        [target, value, input]
///   Create       [value, initcode]
///   IfTaken      [condition that held]
///   Log          [data, topic0, ...]
///   Return/Revert [data]
///   SelfDestruct [beneficiary]
struct PseudoStmt {
  StmtKind kind = StmtKind::Assign;
  std::size_t step = 0;
  std::uint64_t pc = 0;
  std::vector<PairedValue> operands;
  std::vector<PseudoStmt> children;
  std::string var;                     ///< local name, STORAGE/TSTORAGE, or new_contract_<n>
  std::optional<CallDetail> call;
  std::optional<std::uint64_t> reconverge;  ///< IfTaken: pc where the body ends, none = end of enclosing block
  std::uint32_t latest_call = 0;       ///< ordinal of the most recent call before this statement
};

inline std::size_t count_statements(const std::vector<PseudoStmt>& body, StmtKind kind) {
  std::size_t n = 0;
  for (const auto& s : body) n += (s.kind == kind) + count_statements(s.children, kind);
  return n;
}

/// The successor a JUMPI executed: the recorded target when the condition is non-zero, else pc + 1.
inline std::uint64_t follow_branch(const RecordedStep& jumpi) {
  const auto* target = jumpi.find("target");
  const auto* cond = jumpi.find("cond");
  if (!target || !cond)
    throw Error(ErrorCode::UnboundValue, "JUMPI at pc " + std::to_string(jumpi.step.pc) + " has no recorded operands");
  return cond->word() != 0 ? static_cast<std::uint64_t>(target->word()) : jumpi.step.pc + 1;
}

struct LiftOptions {
  std::chrono::milliseconds budget{120000};
  /// Called after every memory write; tests use it to assert segment invariants.
  std::function<void(const ConcreteMemoryMap&)> on_mem_write;
};

namespace detail {

inline std::size_t small(const Word& w, std::size_t limit = std::size_t(1) << 32) {
  return w > Word(limit) ? limit : static_cast<std::size_t>(w);
}

class Lifter {
 public:
  Lifter(const TraceStream& ts, const Frame& frame, const LiftOptions& opt,
         std::chrono::steady_clock::time_point deadline, std::uint32_t& creates)
      : ts_(ts), frame_(frame), opt_(opt), deadline_(deadline), creates_(creates), calldata_(ts.calldata(frame.input)) {
    open_.push_back({&root_, std::nullopt, 0});
  }

  void run(const std::vector<std::size_t>& steps) {
    std::size_t n = 0;
    for (auto i : steps) {
      if ((++n & 1023) == 0 && std::chrono::steady_clock::now() > deadline_)
        throw Error(ErrorCode::LiftTimeout, "lifting exceeded its budget after " + std::to_string(n) + " steps");
      step(i);
    }
  }

  std::vector<PseudoStmt> take() { return std::move(root_); }

 private:
  struct Open {
    std::vector<PseudoStmt>* body;
    std::optional<std::uint64_t> reconverge;
    std::uint64_t site;
  };

  PairedValue pop(const RecordedStep& rs, std::size_t j) {
    PairedValue v;
    if (!stack_.empty()) {
      v = std::move(stack_.back());
      stack_.pop_back();
    } else {
      v = paired_word(make_leaf("STACK_" + std::to_string(underflow_++)), 0, current_);
    }
    if (j < rs.step.stack_top.size()) reconcile(v, rs.step.stack_top[j]);
    return v;
  }

  static void reconcile(PairedValue& v, const Word& observed) {
    if (v.width() != 32) return;
    if (v.concrete != observed && is_fully_concrete(v.expr)) v.expr = make_const(observed);
    v.concrete = observed;
    v.raw.clear();
  }

  void push(ExprPtr e, const Word& c) { stack_.push_back(paired_word(std::move(e), c, current_)); }

  Word result_or(const RecordedStep& rs, const std::optional<Word>& fallback) const {
    if (rs.step.result) return *rs.step.result;
    return fallback.value_or(0);
  }

  void emit(PseudoStmt s) {
    s.step = current_;
    s.pc = pc_;
    if (s.latest_call == 0) s.latest_call = calls_;
    open_.back().body->push_back(std::move(s));
  }

  void write_memory(std::size_t off, std::size_t len, PairedValue v) {
    if (len == 0) return;
    mem_.write(off, len, v);
    PseudoStmt s;
    s.kind = StmtKind::MemWrite;
    s.operands = {paired_word(make_const(off), off, current_), std::move(v)};
    emit(std::move(s));
    if (opt_.on_mem_write) opt_.on_mem_write(mem_);
  }

  PairedValue read_memory(std::size_t off, std::size_t len, const std::optional<Bytes>& observed) {
    PairedValue v = mem_.read(off, len, current_);
    if (observed && observed->size() == len && *observed != v.bytes()) {
      if (is_fully_concrete(v.expr)) v.expr = make_leaf("MEM0", len);
      v = paired_bytes(v.expr, *observed, current_);
    }
    return v;
  }

  void assign_local(const PairedValue& v) {
    PseudoStmt s;
    s.kind = StmtKind::Assign;
    s.var = "v" + std::to_string(locals_++);
    vars_.assign(s.var, v);
    s.operands = {v};
    emit(std::move(s));
  }

  void close_reconverged() {
    for (std::size_t k = open_.size(); k-- > 1;) {
      if (open_[k].reconverge && *open_[k].reconverge == pc_) {
        open_.resize(k);
        return;
      }
    }
  }

  void branch(const PairedValue& target, const PairedValue& cond) {
    if (cond.expr->kind == ExprKind::Const) return;
    bool taken = cond.concrete != 0;
    std::optional<std::uint64_t> reconverge;
    if (!taken) reconverge = static_cast<std::uint64_t>(small(target.concrete, std::size_t(1) << 40));
    // A loop header re-executing the same JUMPI opens a sibling instead of nesting.
    for (std::size_t k = open_.size(); k-- > 1;) {
      if (open_[k].site == pc_ && open_[k].reconverge == reconverge) {
        open_.resize(k);
        break;
      }
    }
    PseudoStmt s;
    s.kind = StmtKind::IfTaken;
    ExprPtr held = taken ? cond.expr : make_op(op::ISZERO, {cond.expr});
    s.operands = {paired_word(held, 1, current_)};
    s.reconverge = reconverge;
    emit(std::move(s));
    auto& body = open_.back().body->back().children;
    open_.push_back({&body, reconverge, pc_});
  }

  static StmtKind call_kind(std::uint8_t code) {
    switch (code) {
      case op::STATICCALL: return StmtKind::StaticCall;
      case op::DELEGATECALL:
      case op::CALLCODE: return StmtKind::DelegateCall;
      default: return StmtKind::ExternalCall;
    }
  }

  void call(const RecordedStep& rs) {
    std::uint8_t code = rs.step.opcode;
    bool has_value = code == op::CALL || code == op::CALLCODE;
    PairedValue gas = pop(rs, 0), target = pop(rs, 1);
    std::size_t j = 2;
    PairedValue value = has_value ? pop(rs, j++) : paired_word(make_const(0), 0, current_);
    PairedValue ao = pop(rs, j++), al = pop(rs, j++), ro = pop(rs, j++), rl = pop(rs, j++);
    (void)gas;
    const auto* cd = rs.find("calldata");
    std::optional<Bytes> observed;
    if (cd) observed = std::get<Bytes>(cd->value);
    PairedValue input = read_memory(small(ao.concrete), small(al.concrete), observed);

    CallDetail d;
    d.opcode = code;
    d.target = Address::from_word(target.concrete & address_mask());
    d.selector = selector_from_calldata(input.bytes());
    if (const auto* ok = rs.find("success")) d.success = ok->word() != 0;
    if (const auto* rd = rs.find("returndata")) d.return_data = std::get<Bytes>(rd->value);
    d.index = calls_ + 1;

    PseudoStmt s;
    s.kind = call_kind(code);
    s.operands = {target, value, input};
    s.call = d;
    s.latest_call = calls_;
    emit(std::move(s));

    ++calls_;
    last_return_ = d.return_data;
    push(make_leaf("ext_call.success", 32, {}, 0, calls_), d.success ? 1 : 0);
    std::size_t n = std::min(small(rl.concrete), last_return_.size());
    if (n > 0)
      write_memory(small(ro.concrete), n,
                   paired_bytes(make_leaf("return_data", n, {}, 0, calls_),
                                Bytes(last_return_.begin(), last_return_.begin() + static_cast<long>(n)), current_));
  }

  void create(const RecordedStep& rs) {
    bool two = rs.step.opcode == op::CREATE2;
    PairedValue value = pop(rs, 0), off = pop(rs, 1), len = pop(rs, 2);
    if (two) pop(rs, 3);
    PairedValue init = read_memory(small(off.concrete), small(len.concrete), rs.step.memory_slice);
    Word addr = result_or(rs, std::nullopt);
    PseudoStmt s;
    s.kind = StmtKind::Create;
    s.var = "new_contract_" + std::to_string(++creates_);
    s.operands = {value, init};
    emit(std::move(s));
    last_return_.clear();
    push(addr == 0 ? make_const(0) : make_leaf(open_.back().body->back().var), addr);
  }

  void step(std::size_t i) {
    const RecordedStep& rs = ts_.steps[i];
    const TraceStep& st = rs.step;
    current_ = i;
    pc_ = st.pc;
    close_reconverged();
    if (!st.known) return;
    std::uint8_t code = st.opcode;
    const auto& info = opcode_table()[code];

    if (is_push(code)) {
      Word v = 0;
      if (const auto* imm = rs.find("imm")) v = imm->word();
      push(make_const(v), v);
      return;
    }
    if (is_dup(code)) {
      std::size_t n = code - op::DUP1 + 1;
      while (stack_.size() < n) stack_.insert(stack_.begin(), paired_word(make_leaf("STACK_" + std::to_string(underflow_++)), 0, i));
      PairedValue v = stack_[stack_.size() - n];
      if (n - 1 < st.stack_top.size()) reconcile(v, st.stack_top[n - 1]);
      stack_.push_back(std::move(v));
      return;
    }
    if (is_swap(code)) {
      std::size_t n = code - op::SWAP1 + 1;
      while (stack_.size() < n + 1) stack_.insert(stack_.begin(), paired_word(make_leaf("STACK_" + std::to_string(underflow_++)), 0, i));
      std::swap(stack_.back(), stack_[stack_.size() - 1 - n]);
      return;
    }
    if (is_call_family(code)) return call(rs);
    if (is_create(code)) return create(rs);
    if (is_log(code)) {
      std::size_t topics = code - op::LOG0;
      PairedValue off = pop(rs, 0), len = pop(rs, 1);
      PseudoStmt s;
      s.kind = StmtKind::Log;
      s.operands.push_back(read_memory(small(off.concrete), small(len.concrete), st.memory_slice));
      for (std::size_t t = 0; t < topics; ++t) s.operands.push_back(pop(rs, 2 + t));
      emit(std::move(s));
      return;
    }

    // Pure arithmetic.
    if (auto v = [&]() -> std::optional<std::vector<PairedValue>> {
          if (code == 0 || code > op::SAR || (code > op::SIGNEXTEND && code < op::LT)) return std::nullopt;
          std::vector<PairedValue> in;
          for (std::size_t j = 0; j < info.inputs; ++j) in.push_back(pop(rs, j));
          return in;
        }()) {
      std::vector<ExprPtr> args;
      std::vector<Word> vals;
      for (auto& p : *v) {
        args.push_back(p.expr);
        vals.push_back(p.concrete);
      }
      Word r = result_or(rs, eval_op(code, vals));
      ExprPtr e = make_op(code, std::move(args));
      if (e->kind == ExprKind::Const && e->value != r) e = make_const(r);
      push(std::move(e), r);
      return;
    }

    auto env = [&](const char* name) { push(make_leaf(name), result_or(rs, std::nullopt)); };
    switch (code) {
      case op::STOP: return;
      case op::SHA3: {
        PairedValue off = pop(rs, 0), len = pop(rs, 1);
        PairedValue data = read_memory(small(off.concrete), small(len.concrete), st.memory_slice);
        auto e = std::make_shared<Expr>();
        e->kind = ExprKind::Op;
        e->opcode = op::KECCAK256;
        for (std::size_t p = 0; p < data.width(); p += 32)
          e->args.push_back(make_slice(data.expr, p, std::min<std::size_t>(32, data.width() - p)));
        Word r = result_or(rs, hash_to_word(keccak256(data.bytes())));
        push(std::move(e), r);
        return;
      }
      case op::ADDRESS: return env("address(this)");
      case op::ORIGIN: return env("tx.origin");
      case op::CALLER: return env("msg.sender");
      case op::CALLVALUE: return env("msg.value");
      case op::CALLDATASIZE: return env("msg.data.length");
      case op::CODESIZE: return env("codesize()");
      case op::GASPRICE: return env("tx.gasprice");
      case op::RETURNDATASIZE: return env("returndatasize()");
      case op::COINBASE: return env("block.coinbase");
      case op::TIMESTAMP: return env("block.timestamp");
      case op::NUMBER: return env("block.number");
      case op::PREVRANDAO: return env("block.prevrandao");
      case op::GASLIMIT: return env("block.gaslimit");
      case op::CHAINID: return env("block.chainid");
      case op::SELFBALANCE: return env("address(this).balance");
      case op::BASEFEE: return env("block.basefee");
      case op::BLOBBASEFEE: return env("block.blobbasefee");
      case op::MSIZE: return env("msize()");
      case op::GAS: return env("gasleft()");
      case op::PC: return push(make_const(st.pc), st.pc);
      case op::BALANCE:
      case op::EXTCODESIZE:
      case op::EXTCODEHASH:
      case op::BLOCKHASH:
      case op::BLOBHASH: {
        PairedValue a = pop(rs, 0);
        std::string name = code == op::BALANCE       ? "balance"
                           : code == op::EXTCODESIZE ? "extcodesize"
                           : code == op::EXTCODEHASH ? "extcodehash"
                           : code == op::BLOCKHASH   ? "blockhash"
                                                     : "blobhash";
        push(make_leaf(name, 32, {a.expr}), result_or(rs, std::nullopt));
        return;
      }
      case op::CALLDATALOAD: {
        PairedValue off = pop(rs, 0);
        Word v = 0;
        if (const auto* r = rs.find("value")) v = r->word();
        ExprPtr e = off.expr->kind == ExprKind::Const ? make_leaf("calldata", 32, {}, small(off.concrete))
                                                      : make_leaf("calldata", 32, {off.expr}, 0);
        push(std::move(e), v);
        return;
      }
      case op::CALLDATACOPY:
      case op::CODECOPY:
      case op::RETURNDATACOPY:
      case op::EXTCODECOPY: {
        if (code == op::EXTCODECOPY) pop(rs, 0);
        std::size_t base = code == op::EXTCODECOPY ? 1 : 0;
        PairedValue dest = pop(rs, base), off = pop(rs, base + 1), len = pop(rs, base + 2);
        std::size_t n = small(len.concrete, std::size_t(1) << 24), o = small(off.concrete);
        Bytes bytes(n, 0);
        ExprPtr e;
        if (code == op::CALLDATACOPY) {
          for (std::size_t k = 0; k < n; ++k)
            if (o + k < calldata_.size()) bytes[k] = calldata_[o + k];
          e = off.expr->kind == ExprKind::Const ? make_leaf("calldata", n, {}, o) : make_leaf("calldata", n, {off.expr}, 0);
        } else if (code == op::RETURNDATACOPY) {
          for (std::size_t k = 0; k < n; ++k)
            if (o + k < last_return_.size()) bytes[k] = last_return_[o + k];
          e = make_leaf("return_data", n, {}, o, calls_);
        } else {
          e = make_leaf("code", n, {}, o);
        }
        write_memory(small(dest.concrete), n, paired_bytes(std::move(e), std::move(bytes), i));
        return;
      }
      case op::POP: pop(rs, 0); return;
      case op::MLOAD: {
        PairedValue off = pop(rs, 0);
        PairedValue v = mem_.read(small(off.concrete), 32, i);
        PairedValue w = paired_word(as_word(v.expr), word_from_be(v.bytes()), i);
        if (st.result) reconcile(w, *st.result);
        assign_local(w);
        stack_.push_back(w);
        return;
      }
      case op::MSTORE:
      case op::MSTORE8: {
        PairedValue off = pop(rs, 0), v = pop(rs, 1);
        std::size_t len = code == op::MSTORE ? 32 : 1;
        write_memory(small(off.concrete), len, v);
        return;
      }
      case op::MCOPY: {
        PairedValue dest = pop(rs, 0), src = pop(rs, 1), len = pop(rs, 2);
        std::size_t n = small(len.concrete, std::size_t(1) << 24);
        write_memory(small(dest.concrete), n, mem_.read(small(src.concrete), n, i));
        return;
      }
      case op::SLOAD:
      case op::TLOAD: {
        PairedValue slot = pop(rs, 0);
        std::string space = code == op::SLOAD ? "STORAGE" : "TSTORAGE";
        Word v = 0;
        if (const auto* r = rs.find("value")) v = r->word();
        ExprPtr e;
        if (const auto* b = vars_.lookup(space + ":" + word_to_hex(slot.concrete)))
          e = b->value.expr;
        else
          e = make_leaf(space, 32, {slot.expr});
        PairedValue w = paired_word(e, v, i);
        assign_local(w);
        stack_.push_back(w);
        return;
      }
      case op::SSTORE:
      case op::TSTORE: {
        PairedValue slot = pop(rs, 0), v = pop(rs, 1);
        std::string space = code == op::SSTORE ? "STORAGE" : "TSTORAGE";
        vars_.assign(space + ":" + word_to_hex(slot.concrete), v);
        PseudoStmt s;
        s.kind = StmtKind::Assign;
        s.var = space;
        s.operands = {slot, v};
        emit(std::move(s));
        return;
      }
      case op::JUMP: pop(rs, 0); return;
      case op::JUMPI: {
        PairedValue target = pop(rs, 0), cond = pop(rs, 1);
        branch(target, cond);
        return;
      }
      case op::JUMPDEST: return;
      case op::RETURN:
      case op::REVERT: {
        PairedValue off = pop(rs, 0), len = pop(rs, 1);
        PseudoStmt s;
        s.kind = code == op::RETURN ? StmtKind::Return : StmtKind::Revert;
        s.operands = {read_memory(small(off.concrete), small(len.concrete), st.memory_slice)};
        emit(std::move(s));
        return;
      }
      case op::INVALID: {
        PseudoStmt s;
        s.kind = StmtKind::Revert;
        s.operands = {paired_bytes(make_concat({}), {}, i)};
        emit(std::move(s));
        return;
      }
      case op::SELFDESTRUCT: {
        PseudoStmt s;
        s.kind = StmtKind::SelfDestruct;
        s.operands = {pop(rs, 0)};
        emit(std::move(s));
        return;
      }
      default: {
        for (std::size_t j = 0; j < info.inputs; ++j) pop(rs, j);
        for (std::size_t j = 0; j < info.outputs; ++j)
          push(make_leaf(detail::lower(std::string(info.name)) + "()"), result_or(rs, std::nullopt));
        return;
      }
    }
  }

  const TraceStream& ts_;
  const Frame& frame_;
  const LiftOptions& opt_;
  std::chrono::steady_clock::time_point deadline_;
  std::uint32_t& creates_;
  const Bytes& calldata_;
  std::vector<PairedValue> stack_;
  ConcreteMemoryMap mem_;
  VarMap vars_;
  std::vector<PseudoStmt> root_;
  std::vector<Open> open_;
  Bytes last_return_;
  std::uint32_t calls_ = 0;
  std::uint32_t locals_ = 0;
  std::uint32_t underflow_ = 0;
  std::size_t current_ = 0;
  std::uint64_t pc_ = 0;
};

}  // namespace detail

/// Lifts every invocation aggregated into `ft`, in execution order.
inline std::vector<PseudoStmt> lift_function(const FunctionTrace& ft, const TraceStream& ts, const LiftOptions& opt = {}) {
  auto deadline = std::chrono::steady_clock::now() + opt.budget;
  std::vector<std::uint32_t> frames;
  std::map<std::uint32_t, std::vector<std::size_t>> steps;
  for (const auto& b : ft.blocks) {
    if (!steps.count(b.frame)) frames.push_back(b.frame);
    auto& v = steps[b.frame];
    for (std::size_t i = b.begin; i < b.end; ++i) v.push_back(i);
  }
  std::vector<PseudoStmt> out;
  std::uint32_t creates = 0;
  for (auto f : frames) {
    detail::Lifter lifter(ts, ts.frames[f], opt, deadline, creates);
    lifter.run(steps[f]);
    auto body = lifter.take();
    out.insert(out.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
  }
  return out;
}

struct LiftedFunction {
  FunctionTrace trace;
  std::string name;
  Bytes calldata;  ///< input of the first invocation
  std::vector<PseudoStmt> body;
};

inline std::vector<LiftedFunction> lift_scope(const std::vector<FunctionTrace>& fts, const TraceStream& ts,
                                              const SelectorDb& db, const LiftOptions& opt = {}) {
  std::vector<LiftedFunction> out;
  for (const auto& ft : fts) {
    LiftedFunction lf;
    lf.trace = ft;
    lf.name = ft.selector ? db.name_of(*ft.selector) : "fallback";
    if (!ft.blocks.empty()) lf.calldata = ts.calldata(ts.frames[ft.blocks.front().frame].input);
    lf.body = lift_function(ft, ts, opt);
    out.push_back(std::move(lf));
  }
  return out;
}

}  // namespace txpoc
