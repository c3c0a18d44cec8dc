#pragma once

// Trace ingestion: parses geth structLogs or the native line-JSON format into a
// TraceStream, derives call frames, and applies selective argument recording.

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "txpoc/error.hpp"
#include "txpoc/opcodes.hpp"
#include "txpoc/word.hpp"

namespace txpoc {

using json = nlohmann::json;

enum class Category { Constants, ControlFlow, ExternalContext, InternalState, InputData, None };

inline std::string_view category_name(Category c) {
  switch (c) {
    case Category::Constants: return "Constants";
    case Category::ControlFlow: return "ControlFlow";
    case Category::ExternalContext: return "ExternalContext";
    case Category::InternalState: return "InternalState";
    case Category::InputData: return "InputData";
    case Category::None: return "None";
  }
  return "None";
}

inline Category classify_opcode(std::uint8_t code) {
  if (!opcode_table()[code].defined) throw Error(ErrorCode::UnknownOpcode, "byte " + opcode_name(code));
  if (is_push(code)) return Category::Constants;
  switch (code) {
    case op::JUMPI: return Category::ControlFlow;
    case op::EXTCODECOPY:
    case op::CODECOPY:
    case op::CODESIZE:
    case op::EXTCODESIZE:
    case op::CALL:
    case op::CALLCODE:
    case op::DELEGATECALL:
    case op::STATICCALL:
    case op::RETURNDATASIZE:
    case op::RETURNDATACOPY: return Category::ExternalContext;
    case op::SLOAD:
    case op::TLOAD: return Category::InternalState;
    case op::CALLDATACOPY:
    case op::CALLDATASIZE:
    case op::CALLDATALOAD: return Category::InputData;
    default: return Category::None;
  }
}

inline Category classify_opcode(std::string_view mnemonic) {
  auto code = opcode_from_name(mnemonic);
  if (!code) throw Error(ErrorCode::UnknownOpcode, std::string(mnemonic));
  return classify_opcode(*code);
}

struct TraceStep {
  std::uint64_t pc = 0;
  std::uint8_t opcode = 0;
  bool known = true;  ///< false: raw byte preserved in `opcode`, mnemonic is UNKNOWN
  std::uint32_t depth = 1;
  std::uint64_t gas = 0;
  std::vector<Word> stack_top;  ///< top of stack first, at most K entries
  std::optional<Bytes> memory_slice;
  Address context_address;
  /// Top of stack after this instruction, taken from the next step of the same frame.
  std::optional<Word> result;
  /// Explicit push immediate (native format), otherwise derived from `result`.
  std::optional<Word> immediate;
  /// Balance moved by SELFDESTRUCT when the tracer captured it.
  std::optional<Word> moved_balance;
  /// Return data observed for call-family steps without a child frame (native format only).
  std::optional<Bytes> returndata_hint;
  /// The frame ended during this step without a halting opcode (out of gas, stack error).
  bool partial = false;

  std::string mnemonic() const { return known ? opcode_name(opcode) : "UNKNOWN"; }
  bool operator==(const TraceStep&) const = default;
};

struct RecordedValue {
  std::string tag;
  std::variant<Word, Bytes> value;

  const Word& word() const { return std::get<Word>(value); }
  bool operator==(const RecordedValue&) const = default;
};

struct RecordedStep {
  TraceStep step;
  Category category = Category::None;
  std::vector<RecordedValue> recorded;
  std::uint32_t frame = 0;

  const RecordedValue* find(std::string_view tag) const {
    for (const auto& r : recorded)
      if (r.tag == tag) return &r;
    return nullptr;
  }
  bool operator==(const RecordedStep&) const = default;
};

/// Calldata reference. Inputs larger than the inline limit live only in the stream's side table.
struct CalldataRef {
  Hash digest{};
  std::size_t length = 0;
  Bytes inline_bytes;
  bool spilled = false;

  auto key() const { return std::tie(digest, length); }
  bool operator==(const CalldataRef&) const = default;
};

inline constexpr std::size_t kInlineCalldataLimit = 4096;

enum class FrameStatus { Running, Returned, Stopped, Reverted, Invalid, SelfDestructed, Exceptional };

inline std::string_view frame_status_name(FrameStatus s) {
  switch (s) {
    case FrameStatus::Running: return "running";
    case FrameStatus::Returned: return "returned";
    case FrameStatus::Stopped: return "stopped";
    case FrameStatus::Reverted: return "reverted";
    case FrameStatus::Invalid: return "invalid";
    case FrameStatus::SelfDestructed: return "selfdestructed";
    case FrameStatus::Exceptional: return "exceptional";
  }
  return "running";
}

inline bool frame_failed(FrameStatus s) {
  return s == FrameStatus::Reverted || s == FrameStatus::Invalid || s == FrameStatus::Exceptional;
}

/// One execution context (call or create) observed in the trace.
struct Frame {
  std::uint32_t id = 0;
  std::optional<std::uint32_t> parent;
  std::uint32_t depth = 1;
  std::uint8_t call_type = op::CALL;
  Address context_address;  ///< storage context (msg.sender sees this)
  Address code_address;     ///< contract whose code runs
  Address caller;
  Word value = 0;
  CalldataRef input;
  std::optional<std::size_t> entry_step;  ///< call step in the parent frame
  std::size_t first_step = 0;
  std::size_t last_step = 0;
  FrameStatus status = FrameStatus::Running;
  Bytes return_data;
  /// This frame or an ancestor failed: state changes were rolled back.
  bool rolled_back = false;

  bool operator==(const Frame&) const = default;
};

struct LogEntry {
  std::size_t step_index = 0;
  std::uint32_t frame = 0;
  Address emitter;
  std::vector<Word> topics;
  Bytes data;
  bool operator==(const LogEntry&) const = default;
};

struct ValueTransfer {
  std::size_t step_index = 0;
  std::uint32_t frame = 0;
  Address from;
  Address to;
  Word amount = 0;
  std::string opcode;  ///< CALL, CREATE, CREATE2, SELFDESTRUCT or TX for the transaction value
  bool operator==(const ValueTransfer&) const = default;
};

struct TraceStream {
  Hash tx_hash{};
  std::uint64_t chain_id = 0;
  std::string chain;
  std::uint64_t block_number = 0;
  Address sender;
  Address initial_recipient;
  Word tx_value = 0;
  Bytes tx_input;
  bool is_create = false;
  std::vector<RecordedStep> steps;
  std::vector<LogEntry> logs;
  std::vector<ValueTransfer> value_transfers;
  std::vector<Frame> frames;
  std::map<Hash, Bytes> calldata_side_table;

  const Bytes& calldata(const CalldataRef& ref) const {
    if (!ref.spilled) return ref.inline_bytes;
    return calldata_side_table.at(ref.digest);
  }

  bool operator==(const TraceStream&) const = default;
};

enum class TraceFormat { Geth, Native };

struct ParseOptions {
  std::size_t stack_depth = 8;
};

inline std::uint32_t call_arity(std::uint8_t code) {
  return (code == op::CALL || code == op::CALLCODE) ? 7 : 6;
}

/// Reads the concrete values the recording policy keeps for `category`.
inline RecordedStep record_step(const TraceStep& step, Category category) {
  RecordedStep out;
  out.step = step;
  out.category = category;
  const auto& s = step.stack_top;
  auto need = [&](std::size_t n) {
    if (s.size() < n)
      throw Error(ErrorCode::InsufficientStack, step.mnemonic() + " at pc " + std::to_string(step.pc) + " needs " +
                                                    std::to_string(n) + " stack words, trace captured " +
                                                    std::to_string(s.size()));
  };
  auto put = [&](std::string tag, Word w) { out.recorded.push_back({std::move(tag), std::move(w)}); };
  auto put_result = [&](std::string tag) {
    if (!step.result)
      throw Error(ErrorCode::UnboundValue, step.mnemonic() + " at pc " + std::to_string(step.pc) + " has no result");
    put(std::move(tag), *step.result);
  };
  auto put_args = [&](std::initializer_list<const char*> tags) {
    need(tags.size());
    std::size_t i = 0;
    for (const char* t : tags) put(t, s[i++]);
  };

  switch (category) {
    case Category::None: break;
    case Category::Constants:
      if (step.opcode == op::PUSH0)
        put("imm", 0);
      else if (step.immediate)
        put("imm", *step.immediate);
      else
        put_result("imm");
      break;
    case Category::ControlFlow: put_args({"target", "cond"}); break;
    case Category::InternalState:
      put_args({"slot"});
      put_result("value");
      break;
    case Category::InputData:
      if (step.opcode == op::CALLDATALOAD) {
        put_args({"offset"});
        put_result("value");
      } else if (step.opcode == op::CALLDATASIZE) {
        put_result("size");
      } else {
        put_args({"dest", "offset", "length"});
      }
      break;
    case Category::ExternalContext:
      switch (step.opcode) {
        case op::CALL:
        case op::CALLCODE:
          put_args({"gas", "target", "value", "args_offset", "args_length", "ret_offset", "ret_length"});
          break;
        case op::DELEGATECALL:
        case op::STATICCALL:
          put_args({"gas", "target", "args_offset", "args_length", "ret_offset", "ret_length"});
          break;
        case op::CODECOPY:
        case op::RETURNDATACOPY: put_args({"dest", "offset", "length"}); break;
        case op::EXTCODECOPY: put_args({"addr", "dest", "offset", "length"}); break;
        case op::EXTCODESIZE:
          put_args({"addr"});
          put_result("size");
          break;
        case op::CODESIZE:
        case op::RETURNDATASIZE: put_result("size"); break;
        default: break;
      }
      if (is_call_family(step.opcode) && step.memory_slice)
        out.recorded.push_back({"calldata", *step.memory_slice});
      break;
  }
  return out;
}

namespace detail {

inline Word parse_word_field(const json& j) {
  if (j.is_string()) return word_from_string(j.get<std::string>());
  if (j.is_number_unsigned()) return Word(j.get<std::uint64_t>());
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return Word(j.get<std::int64_t>());
  throw Error(ErrorCode::MalformedTrace, "expected a numeric word, got " + j.dump());
}

inline std::uint64_t parse_u64_field(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  if (j.is_string()) return static_cast<std::uint64_t>(word_from_string(j.get<std::string>()));
  throw Error(ErrorCode::MalformedTrace, "expected an unsigned integer, got " + j.dump());
}

inline const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::MalformedTrace, std::string("missing field '") + key + "'");
  return *it;
}

inline CalldataRef make_calldata_ref(const Bytes& data, std::map<Hash, Bytes>& side_table) {
  CalldataRef ref;
  ref.digest = keccak256(data);
  ref.length = data.size();
  if (data.size() > kInlineCalldataLimit) {
    ref.spilled = true;
    side_table.emplace(ref.digest, data);
  } else {
    ref.inline_bytes = data;
  }
  return ref;
}

/// Memory bytes [offset, offset+len) from a geth word-array memory dump (zero-extended).
inline std::optional<Bytes> slice_geth_memory(const std::optional<Bytes>& memory, const Word& offset, const Word& len) {
  if (!memory) return std::nullopt;
  if (len == 0) return Bytes{};
  if (len > Word(1u << 24) || offset > Word(1ull << 32)) return std::nullopt;
  auto off = static_cast<std::size_t>(offset);
  auto n = static_cast<std::size_t>(len);
  Bytes out(n, 0);
  for (std::size_t i = 0; i < n && off + i < memory->size(); ++i) out[i] = (*memory)[off + i];
  return out;
}

/// Which stack operands (offset, length) select the memory range an instruction reads.
inline std::optional<std::pair<std::size_t, std::size_t>> memory_operands(std::uint8_t code) {
  switch (code) {
    case op::CALL:
    case op::CALLCODE: return std::pair<std::size_t, std::size_t>{3, 4};
    case op::DELEGATECALL:
    case op::STATICCALL: return std::pair<std::size_t, std::size_t>{2, 3};
    case op::CREATE: return std::pair<std::size_t, std::size_t>{1, 2};
    case op::CREATE2: return std::pair<std::size_t, std::size_t>{1, 2};
    case op::RETURN:
    case op::REVERT:
    case op::SHA3: return std::pair<std::size_t, std::size_t>{0, 1};
    default:
      if (is_log(code)) return std::pair<std::size_t, std::size_t>{0, 1};
      return std::nullopt;
  }
}

struct RawHeader {
  Hash tx_hash{};
  std::uint64_t chain_id = 0;
  std::string chain;
  std::uint64_t block_number = 0;
  Address sender;
  Address recipient;
  Word value = 0;
  Bytes input;
  bool is_create = false;
};

inline RawHeader parse_header(const json& tx) {
  RawHeader h;
  if (auto it = tx.find("hash"); it != tx.end()) {
    auto b = bytes_from_hex(it->get<std::string>());
    if (b.size() != 32) throw Error(ErrorCode::MalformedTrace, "tx hash must be 32 bytes");
    std::copy(b.begin(), b.end(), h.tx_hash.begin());
  }
  if (auto it = tx.find("chain_id"); it != tx.end()) h.chain_id = parse_u64_field(*it);
  if (auto it = tx.find("chainId"); it != tx.end()) h.chain_id = parse_u64_field(*it);
  if (auto it = tx.find("chain"); it != tx.end()) h.chain = it->get<std::string>();
  if (auto it = tx.find("block"); it != tx.end()) h.block_number = parse_u64_field(*it);
  if (auto it = tx.find("blockNumber"); it != tx.end()) h.block_number = parse_u64_field(*it);
  if (auto it = tx.find("from"); it != tx.end()) h.sender = Address::from_hex(it->get<std::string>());
  if (auto it = tx.find("to"); it != tx.end() && !it->is_null()) h.recipient = Address::from_hex(it->get<std::string>());
  if (auto it = tx.find("contractAddress"); it != tx.end() && !it->is_null()) {
    h.recipient = Address::from_hex(it->get<std::string>());
    h.is_create = true;
  }
  if (auto it = tx.find("create"); it != tx.end()) h.is_create = it->get<bool>();
  if (auto it = tx.find("value"); it != tx.end()) h.value = parse_word_field(*it);
  if (auto it = tx.find("input"); it != tx.end()) h.input = bytes_from_hex(it->get<std::string>());
  return h;
}

/// Builds frames, results, logs and transfers over already-decoded steps.
inline TraceStream assemble(RawHeader header, std::vector<TraceStep> steps, std::vector<std::optional<Address>> addr_hints) {
  TraceStream ts;
  ts.tx_hash = header.tx_hash;
  ts.chain_id = header.chain_id;
  ts.chain = header.chain;
  ts.block_number = header.block_number;
  ts.sender = header.sender;
  ts.initial_recipient = header.recipient;
  ts.tx_value = header.value;
  ts.tx_input = header.input;
  ts.is_create = header.is_create;
  if (steps.empty()) return ts;

  if (steps.front().depth != 1)
    throw Error(ErrorCode::DepthDiscontinuity, "trace starts at depth " + std::to_string(steps.front().depth));

  Frame root;
  root.id = 0;
  root.depth = 1;
  root.call_type = header.is_create ? op::CREATE : op::CALL;
  root.context_address = header.recipient;
  root.code_address = header.recipient;
  root.caller = header.sender;
  root.value = header.value;
  root.input = make_calldata_ref(header.input, ts.calldata_side_table);
  root.first_step = 0;
  ts.frames.push_back(root);

  std::vector<std::uint32_t> frame_of(steps.size(), 0);
  std::vector<std::uint32_t> active{0};
  // step index awaiting its result, per frame
  std::vector<std::optional<std::size_t>> pending_result{std::nullopt};

  auto close_frame = [&](std::uint32_t fid, std::size_t last, const TraceStep& last_step, bool halted) {
    Frame& f = ts.frames[fid];
    f.last_step = last;
    if (!halted) {
      f.status = FrameStatus::Exceptional;
      return;
    }
    switch (last_step.opcode) {
      case op::RETURN: f.status = FrameStatus::Returned; break;
      case op::STOP: f.status = FrameStatus::Stopped; break;
      case op::REVERT: f.status = FrameStatus::Reverted; break;
      case op::SELFDESTRUCT: f.status = FrameStatus::SelfDestructed; break;
      default: f.status = FrameStatus::Invalid; break;
    }
    if ((last_step.opcode == op::RETURN || last_step.opcode == op::REVERT) && last_step.memory_slice)
      f.return_data = *last_step.memory_slice;
  };

  for (std::size_t i = 0; i < steps.size(); ++i) {
    TraceStep& cur = steps[i];
    if (i > 0) {
      const TraceStep& prev = steps[i - 1];
      long d = static_cast<long>(cur.depth) - static_cast<long>(prev.depth);
      if (d > 1 || d < -1)
        throw Error(ErrorCode::DepthDiscontinuity, "depth jumps from " + std::to_string(prev.depth) + " to " +
                                                       std::to_string(cur.depth) + " at step " + std::to_string(i));
      if (d == 1) {
        if (!prev.known || !opens_context(prev.opcode))
          throw Error(ErrorCode::DepthDiscontinuity,
                      "depth increases after " + prev.mnemonic() + " at step " + std::to_string(i));
        const Frame& parent = ts.frames[active.back()];
        Frame child;
        child.id = static_cast<std::uint32_t>(ts.frames.size());
        child.parent = parent.id;
        child.depth = cur.depth;
        child.call_type = prev.opcode;
        child.caller = parent.context_address;
        child.entry_step = i - 1;
        child.first_step = i;
        const auto& s = prev.stack_top;
        auto need = [&](std::size_t n) {
          if (s.size() < n)
            throw Error(ErrorCode::InsufficientStack, prev.mnemonic() + " at step " + std::to_string(i - 1));
        };
        if (is_call_family(prev.opcode)) {
          need(call_arity(prev.opcode));
          Address target = Address::from_word(s[1] & address_mask());
          child.code_address = target;
          child.context_address =
              (prev.opcode == op::DELEGATECALL || prev.opcode == op::CALLCODE) ? parent.context_address : target;
          if (prev.opcode == op::DELEGATECALL) {
            child.caller = parent.caller;
            child.value = parent.value;
          } else if (prev.opcode != op::STATICCALL) {
            child.value = s[2];
          }
        } else {
          need(prev.opcode == op::CREATE ? 3 : 4);
          child.value = s[0];
          if (i < addr_hints.size() && addr_hints[i]) {
            child.context_address = *addr_hints[i];
            child.code_address = *addr_hints[i];
          }
        }
        child.input = make_calldata_ref(prev.memory_slice.value_or(Bytes{}), ts.calldata_side_table);
        ts.frames.push_back(child);
        active.push_back(child.id);
        pending_result.push_back(std::nullopt);
      } else if (d == -1) {
        bool halted = prev.known && is_halt(prev.opcode);
        if (!halted) steps[i - 1].partial = true;
        close_frame(active.back(), i - 1, prev, halted);
        active.pop_back();
        pending_result.pop_back();
      } else if (prev.known && is_halt(prev.opcode)) {
        throw Error(ErrorCode::DepthDiscontinuity,
                    "execution continues at depth " + std::to_string(cur.depth) + " after " + prev.mnemonic());
      }
    }
    std::uint32_t fid = active.back();
    frame_of[i] = fid;
    cur.context_address = ts.frames[fid].context_address;
    if (i < addr_hints.size() && addr_hints[i] && !is_create(ts.frames[fid].call_type) &&
        *addr_hints[i] != cur.context_address && fid == 0 && header.recipient.is_zero()) {
      ts.frames[0].context_address = *addr_hints[i];
      ts.frames[0].code_address = *addr_hints[i];
      ts.initial_recipient = *addr_hints[i];
      cur.context_address = *addr_hints[i];
    }
    auto& pend = pending_result.back();
    if (pend) {
      if (!cur.stack_top.empty() && !steps[*pend].result) steps[*pend].result = cur.stack_top.front();
      pend.reset();
    }
    if (cur.known && opcode_table()[cur.opcode].outputs > 0) pend = i;
  }
  // Frames still open at the end of the trace.
  const TraceStep& last = steps.back();
  while (!active.empty()) {
    std::uint32_t fid = active.back();
    bool halted = last.known && is_halt(last.opcode) && ts.frames[fid].depth == last.depth;
    if (!halted && ts.frames[fid].depth == last.depth) steps.back().partial = true;
    close_frame(fid, steps.size() - 1, last, halted);
    active.pop_back();
  }

  // Created contract addresses: the creating step's result in geth traces.
  for (auto& f : ts.frames) {
    if (!f.parent || !is_create(f.call_type) || !f.code_address.is_zero()) continue;
    const TraceStep& creator = steps[*f.entry_step];
    if (creator.result && *creator.result != 0) {
      f.code_address = Address::from_word(*creator.result);
      f.context_address = f.code_address;
      for (std::size_t i = f.first_step; i <= f.last_step; ++i)
        if (frame_of[i] == f.id) steps[i].context_address = f.code_address;
    }
  }
  // Nested frames inherit rolled-back state.
  for (auto& f : ts.frames) {
    f.rolled_back = frame_failed(f.status) || (f.parent && ts.frames[*f.parent].rolled_back);
  }

  ts.steps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const TraceStep& st = steps[i];
    Category cat = st.known ? classify_opcode(st.opcode) : Category::None;
    RecordedStep rs = record_step(st, cat);
    rs.frame = frame_of[i];
    ts.steps.push_back(std::move(rs));
  }

  // Call results: success flag and return data belong to the call step.
  std::vector<std::optional<std::uint32_t>> child_of_step(steps.size());
  for (const auto& f : ts.frames)
    if (f.entry_step) child_of_step[*f.entry_step] = f.id;
  for (std::size_t i = 0; i < ts.steps.size(); ++i) {
    auto& rs = ts.steps[i];
    const auto& st = rs.step;
    if (!st.known || !opens_context(st.opcode)) continue;
    std::optional<Word> success;
    if (st.result) {
      success = is_create(st.opcode) ? Word(*st.result != 0 ? 1 : 0) : *st.result;
    } else if (child_of_step[i]) {
      success = frame_failed(ts.frames[*child_of_step[i]].status) ? 0 : 1;
    }
    Bytes ret;
    if (child_of_step[i] && !is_create(st.opcode))
      ret = ts.frames[*child_of_step[i]].return_data;
    else if (st.returndata_hint)
      ret = *st.returndata_hint;
    if (is_call_family(st.opcode)) {
      if (success) rs.recorded.push_back({"success", *success});
      rs.recorded.push_back({"returndata", ret});
    }
  }

  // Value transfers.
  if (header.value != 0)
    ts.value_transfers.push_back({0, 0, header.sender, header.recipient, header.value, "TX"});
  for (std::size_t i = 0; i < ts.steps.size(); ++i) {
    const auto& rs = ts.steps[i];
    const auto& st = rs.step;
    if (!st.known) continue;
    const auto& s = st.stack_top;
    const Frame& f = ts.frames[rs.frame];
    if (st.opcode == op::CALL && s.size() >= 3 && s[2] != 0) {
      const auto* ok = rs.find("success");
      if (ok && ok->word() == 0) continue;
      ts.value_transfers.push_back({i, rs.frame, f.context_address, Address::from_word(s[1] & address_mask()), s[2], "CALL"});
    } else if (is_create(st.opcode) && !s.empty() && s[0] != 0) {
      if (!child_of_step[i]) continue;
      const Frame& child = ts.frames[*child_of_step[i]];
      if (frame_failed(child.status)) continue;
      ts.value_transfers.push_back({i, rs.frame, f.context_address, child.code_address, s[0], opcode_name(st.opcode)});
    } else if (st.opcode == op::SELFDESTRUCT && !s.empty() && st.moved_balance && *st.moved_balance != 0) {
      ts.value_transfers.push_back(
          {i, rs.frame, f.context_address, Address::from_word(s[0] & address_mask()), *st.moved_balance, "SELFDESTRUCT"});
    }
  }

  // Logs.
  for (std::size_t i = 0; i < ts.steps.size(); ++i) {
    const auto& st = ts.steps[i].step;
    if (!st.known || !is_log(st.opcode)) continue;
    std::size_t n = st.opcode - op::LOG0;
    if (st.stack_top.size() < 2 + n)
      throw Error(ErrorCode::InsufficientStack, st.mnemonic() + " at step " + std::to_string(i));
    LogEntry e;
    e.step_index = i;
    e.frame = ts.steps[i].frame;
    e.emitter = st.context_address;
    for (std::size_t t = 0; t < n; ++t) e.topics.push_back(st.stack_top[2 + t]);
    e.data = st.memory_slice.value_or(Bytes{});
    ts.logs.push_back(std::move(e));
  }
  return ts;
}

inline TraceStep decode_step_common(const json& j, const ParseOptions& opt, bool geth) {
  TraceStep st;
  st.pc = parse_u64_field(require(j, "pc"));
  const json& opj = require(j, "op");
  if (opj.is_number()) {
    st.opcode = static_cast<std::uint8_t>(opj.get<unsigned>());
    st.known = opcode_table()[st.opcode].defined;
  } else {
    auto name = opj.get<std::string>();
    if (auto code = opcode_from_name(name)) {
      st.opcode = *code;
    } else {
      st.known = false;
      // geth prints undefined opcodes as "opcode 0xNN not defined"
      auto pos = name.find("0x");
      st.opcode = pos != std::string::npos ? static_cast<std::uint8_t>(word_from_hex(name.substr(pos, 4))) : 0xfe;
      if (auto raw = j.find("raw"); raw != j.end()) st.opcode = static_cast<std::uint8_t>(parse_u64_field(*raw));
    }
  }
  auto depth = parse_u64_field(require(j, "depth"));
  if (depth < 1) throw Error(ErrorCode::MalformedTrace, "depth must be >= 1");
  st.depth = static_cast<std::uint32_t>(depth);
  if (auto it = j.find("gas"); it != j.end()) st.gas = parse_u64_field(*it);
  if (auto it = j.find("stack"); it != j.end() && it->is_array()) {
    std::vector<Word> words;
    for (const auto& w : *it) words.push_back(parse_word_field(w));
    if (geth) std::reverse(words.begin(), words.end());
    if (words.size() > opt.stack_depth) words.resize(opt.stack_depth);
    st.stack_top = std::move(words);
  }
  return st;
}

}  // namespace detail

inline TraceStream parse_geth(const json& doc, const ParseOptions& opt) {
  const json* root = &doc;
  if (auto it = doc.find("result"); it != doc.end() && it->is_object()) root = &*it;
  if (!root->is_object()) throw Error(ErrorCode::MalformedTrace, "geth trace must be a JSON object");
  const json& logs = detail::require(*root, "structLogs");
  if (!logs.is_array()) throw Error(ErrorCode::MalformedTrace, "structLogs must be an array");
  detail::RawHeader header;
  if (auto it = doc.find("tx"); it != doc.end()) header = detail::parse_header(*it);
  std::vector<TraceStep> steps;
  steps.reserve(logs.size());
  for (const auto& j : logs) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedTrace, "structLog entry must be an object");
    // geth's full stack is needed to slice memory before truncating to K
    TraceStep st = detail::decode_step_common(j, ParseOptions{std::size_t(1024)}, true);
    std::optional<Bytes> memory;
    if (auto it = j.find("memory"); it != j.end() && it->is_array()) {
      Bytes m;
      for (const auto& w : *it) {
        auto b = bytes_from_hex(w.get<std::string>());
        m.insert(m.end(), b.begin(), b.end());
      }
      memory = std::move(m);
    }
    if (st.known) {
      if (auto ops = detail::memory_operands(st.opcode); ops && st.stack_top.size() > ops->second)
        st.memory_slice = detail::slice_geth_memory(memory, st.stack_top[ops->first], st.stack_top[ops->second]);
    }
    if (st.stack_top.size() > opt.stack_depth) st.stack_top.resize(opt.stack_depth);
    steps.push_back(std::move(st));
  }
  return detail::assemble(std::move(header), std::move(steps), {});
}

/// Native format: one JSON object per line; {"kind":"tx",...} header then {"kind":"step",...} lines.
inline TraceStream parse_native(std::string_view raw, const ParseOptions& opt) {
  detail::RawHeader header;
  std::vector<TraceStep> steps;
  std::vector<std::optional<Address>> hints;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto end = raw.find('\n', pos);
    if (end == std::string_view::npos) end = raw.size();
    std::string_view line = raw.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') {
      if (end == raw.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedTrace, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::MalformedTrace, "line " + std::to_string(line_no) + " is not an object");
    auto kind = j.value("kind", std::string("step"));
    try {
      if (kind == "tx") {
        header = detail::parse_header(j);
      } else if (kind == "step") {
        TraceStep st = detail::decode_step_common(j, opt, false);
        if (auto it = j.find("mem"); it != j.end()) st.memory_slice = bytes_from_hex(it->get<std::string>());
        if (auto it = j.find("result"); it != j.end()) st.result = detail::parse_word_field(*it);
        if (auto it = j.find("imm"); it != j.end()) st.immediate = detail::parse_word_field(*it);
        if (auto it = j.find("balance"); it != j.end()) st.moved_balance = detail::parse_word_field(*it);
        if (auto it = j.find("returndata"); it != j.end()) st.returndata_hint = bytes_from_hex(it->get<std::string>());
        std::optional<Address> hint;
        if (auto it = j.find("addr"); it != j.end()) hint = Address::from_hex(it->get<std::string>());
        hints.push_back(hint);
        steps.push_back(std::move(st));
      }
      // unknown kinds are ignored
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::MalformedTrace, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == raw.size()) break;
  }
  return detail::assemble(std::move(header), std::move(steps), std::move(hints));
}

inline TraceStream parse_trace(std::string_view raw, TraceFormat format, const ParseOptions& opt = {}) {
  if (format == TraceFormat::Native) return parse_native(raw, opt);
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedTrace, e.what());
  }
  try {
    return parse_geth(doc, opt);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedTrace, e.what());
  }
}

inline TraceFormat parse_format_name(std::string_view name) {
  if (name == "geth" || name == "geth-structlogs") return TraceFormat::Geth;
  if (name == "native") return TraceFormat::Native;
  throw Error(ErrorCode::ConfigError, "unknown trace format '" + std::string(name) + "'");
}

/// Serializes a stream to the native line-JSON format.
inline std::string write_native(const TraceStream& ts) {
  std::ostringstream out;
  json h;
  h["kind"] = "tx";
  h["hash"] = to_hex(ts.tx_hash);
  h["chain"] = ts.chain;
  h["chain_id"] = ts.chain_id;
  h["block"] = ts.block_number;
  h["from"] = ts.sender.hex();
  h["to"] = ts.initial_recipient.hex();
  h["value"] = word_to_hex(ts.tx_value);
  h["input"] = to_hex(ts.tx_input);
  h["create"] = ts.is_create;
  out << h.dump() << '\n';
  for (std::size_t i = 0; i < ts.steps.size(); ++i) {
    const auto& st = ts.steps[i].step;
    json j;
    j["kind"] = "step";
    j["pc"] = st.pc;
    if (st.known)
      j["op"] = st.mnemonic();
    else {
      j["op"] = "UNKNOWN";
      j["raw"] = st.opcode;
    }
    j["depth"] = st.depth;
    j["gas"] = st.gas;
    json stack = json::array();
    for (const auto& w : st.stack_top) stack.push_back(word_to_hex(w));
    j["stack"] = stack;
    if (st.memory_slice) j["mem"] = to_hex(*st.memory_slice);
    if (st.result) j["result"] = word_to_hex(*st.result);
    if (st.immediate) j["imm"] = word_to_hex(*st.immediate);
    if (st.moved_balance) j["balance"] = word_to_hex(*st.moved_balance);
    if (st.returndata_hint) j["returndata"] = to_hex(*st.returndata_hint);
    const Frame& f = ts.frames[ts.steps[i].frame];
    if (f.first_step == i) j["addr"] = st.context_address.hex();
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace txpoc
