#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

namespace txpoc {

struct OpcodeInfo {
  std::string_view name;
  std::uint8_t inputs = 0;
  std::uint8_t outputs = 0;
  bool defined = false;
};

namespace detail {

inline std::array<OpcodeInfo, 256> build_opcode_table() {
  std::array<OpcodeInfo, 256> t{};
  auto def = [&](std::uint8_t code, std::string_view name, std::uint8_t in, std::uint8_t out) {
    t[code] = OpcodeInfo{name, in, out, true};
  };
  def(0x00, "STOP", 0, 0);
  def(0x01, "ADD", 2, 1);
  def(0x02, "MUL", 2, 1);
  def(0x03, "SUB", 2, 1);
  def(0x04, "DIV", 2, 1);
  def(0x05, "SDIV", 2, 1);
  def(0x06, "MOD", 2, 1);
  def(0x07, "SMOD", 2, 1);
  def(0x08, "ADDMOD", 3, 1);
  def(0x09, "MULMOD", 3, 1);
  def(0x0a, "EXP", 2, 1);
  def(0x0b, "SIGNEXTEND", 2, 1);
  def(0x10, "LT", 2, 1);
  def(0x11, "GT", 2, 1);
  def(0x12, "SLT", 2, 1);
  def(0x13, "SGT", 2, 1);
  def(0x14, "EQ", 2, 1);
  def(0x15, "ISZERO", 1, 1);
  def(0x16, "AND", 2, 1);
  def(0x17, "OR", 2, 1);
  def(0x18, "XOR", 2, 1);
  def(0x19, "NOT", 1, 1);
  def(0x1a, "BYTE", 2, 1);
  def(0x1b, "SHL", 2, 1);
  def(0x1c, "SHR", 2, 1);
  def(0x1d, "SAR", 2, 1);
  def(0x20, "SHA3", 2, 1);
  def(0x30, "ADDRESS", 0, 1);
  def(0x31, "BALANCE", 1, 1);
  def(0x32, "ORIGIN", 0, 1);
  def(0x33, "CALLER", 0, 1);
  def(0x34, "CALLVALUE", 0, 1);
  def(0x35, "CALLDATALOAD", 1, 1);
  def(0x36, "CALLDATASIZE", 0, 1);
  def(0x37, "CALLDATACOPY", 3, 0);
  def(0x38, "CODESIZE", 0, 1);
  def(0x39, "CODECOPY", 3, 0);
  def(0x3a, "GASPRICE", 0, 1);
  def(0x3b, "EXTCODESIZE", 1, 1);
  def(0x3c, "EXTCODECOPY", 4, 0);
  def(0x3d, "RETURNDATASIZE", 0, 1);
  def(0x3e, "RETURNDATACOPY", 3, 0);
  def(0x3f, "EXTCODEHASH", 1, 1);
  def(0x40, "BLOCKHASH", 1, 1);
  def(0x41, "COINBASE", 0, 1);
  def(0x42, "TIMESTAMP", 0, 1);
  def(0x43, "NUMBER", 0, 1);
  def(0x44, "PREVRANDAO", 0, 1);
  def(0x45, "GASLIMIT", 0, 1);
  def(0x46, "CHAINID", 0, 1);
  def(0x47, "SELFBALANCE", 0, 1);
  def(0x48, "BASEFEE", 0, 1);
  def(0x49, "BLOBHASH", 1, 1);
  def(0x4a, "BLOBBASEFEE", 0, 1);
  def(0x50, "POP", 1, 0);
  def(0x51, "MLOAD", 1, 1);
  def(0x52, "MSTORE", 2, 0);
  def(0x53, "MSTORE8", 2, 0);
  def(0x54, "SLOAD", 1, 1);
  def(0x55, "SSTORE", 2, 0);
  def(0x56, "JUMP", 1, 0);
  def(0x57, "JUMPI", 2, 0);
  def(0x58, "PC", 0, 1);
  def(0x59, "MSIZE", 0, 1);
  def(0x5a, "GAS", 0, 1);
  def(0x5b, "JUMPDEST", 0, 0);
  def(0x5c, "TLOAD", 1, 1);
  def(0x5d, "TSTORE", 2, 0);
  def(0x5e, "MCOPY", 3, 0);
  def(0x5f, "PUSH0", 0, 1);
  static constexpr std::string_view push_names[32] = {
      "PUSH1",  "PUSH2",  "PUSH3",  "PUSH4",  "PUSH5",  "PUSH6",  "PUSH7",  "PUSH8",
      "PUSH9",  "PUSH10", "PUSH11", "PUSH12", "PUSH13", "PUSH14", "PUSH15", "PUSH16",
      "PUSH17", "PUSH18", "PUSH19", "PUSH20", "PUSH21", "PUSH22", "PUSH23", "PUSH24",
      "PUSH25", "PUSH26", "PUSH27", "PUSH28", "PUSH29", "PUSH30", "PUSH31", "PUSH32"};
  static constexpr std::string_view dup_names[16] = {
      "DUP1", "DUP2",  "DUP3",  "DUP4",  "DUP5",  "DUP6",  "DUP7",  "DUP8",
      "DUP9", "DUP10", "DUP11", "DUP12", "DUP13", "DUP14", "DUP15", "DUP16"};
  static constexpr std::string_view swap_names[16] = {
      "SWAP1", "SWAP2",  "SWAP3",  "SWAP4",  "SWAP5",  "SWAP6",  "SWAP7",  "SWAP8",
      "SWAP9", "SWAP10", "SWAP11", "SWAP12", "SWAP13", "SWAP14", "SWAP15", "SWAP16"};
  for (int i = 0; i < 32; ++i) def(static_cast<std::uint8_t>(0x60 + i), push_names[i], 0, 1);
  for (int i = 0; i < 16; ++i)
    def(static_cast<std::uint8_t>(0x80 + i), dup_names[i], static_cast<std::uint8_t>(i + 1),
        static_cast<std::uint8_t>(i + 2));
  for (int i = 0; i < 16; ++i)
    def(static_cast<std::uint8_t>(0x90 + i), swap_names[i], static_cast<std::uint8_t>(i + 2),
        static_cast<std::uint8_t>(i + 2));
  def(0xa0, "LOG0", 2, 0);
  def(0xa1, "LOG1", 3, 0);
  def(0xa2, "LOG2", 4, 0);
  def(0xa3, "LOG3", 5, 0);
  def(0xa4, "LOG4", 6, 0);
  def(0xf0, "CREATE", 3, 1);
  def(0xf1, "CALL", 7, 1);
  def(0xf2, "CALLCODE", 7, 1);
  def(0xf3, "RETURN", 2, 0);
  def(0xf4, "DELEGATECALL", 6, 1);
  def(0xf5, "CREATE2", 4, 1);
  def(0xfa, "STATICCALL", 6, 1);
  def(0xfd, "REVERT", 2, 0);
  def(0xfe, "INVALID", 0, 0);
  def(0xff, "SELFDESTRUCT", 1, 0);
  return t;
}

}  // namespace detail

inline const std::array<OpcodeInfo, 256>& opcode_table() {
  static const auto table = detail::build_opcode_table();
  return table;
}

inline std::optional<std::uint8_t> opcode_from_name(std::string_view name) {
  static const auto index = [] {
    std::unordered_map<std::string, std::uint8_t> m;
    const auto& t = opcode_table();
    for (int i = 0; i < 256; ++i)
      if (t[static_cast<std::size_t>(i)].defined) m.emplace(std::string(t[static_cast<std::size_t>(i)].name), i);
    // Aliases used by some clients.
    m.emplace("KECCAK256", 0x20);
    m.emplace("DIFFICULTY", 0x44);
    m.emplace("SUICIDE", 0xff);
    return m;
  }();
  auto it = index.find(std::string(name));
  if (it == index.end()) return std::nullopt;
  return it->second;
}

inline bool is_push(std::uint8_t op) { return op >= 0x5f && op <= 0x7f; }
inline bool is_dup(std::uint8_t op) { return op >= 0x80 && op <= 0x8f; }
inline bool is_swap(std::uint8_t op) { return op >= 0x90 && op <= 0x9f; }
inline bool is_log(std::uint8_t op) { return op >= 0xa0 && op <= 0xa4; }
inline bool is_call_family(std::uint8_t op) { return op == 0xf1 || op == 0xf2 || op == 0xf4 || op == 0xfa; }
inline bool is_create(std::uint8_t op) { return op == 0xf0 || op == 0xf5; }
inline bool opens_context(std::uint8_t op) { return is_call_family(op) || is_create(op); }
inline bool is_halt(std::uint8_t op) {
  return op == 0x00 || op == 0xf3 || op == 0xfd || op == 0xfe || op == 0xff;
}

namespace op {
inline constexpr std::uint8_t STOP = 0x00, SHA3 = 0x20, ADDRESS = 0x30, CALLDATALOAD = 0x35,
                              CALLDATASIZE = 0x36, CALLDATACOPY = 0x37, CODESIZE = 0x38, CODECOPY = 0x39,
                              EXTCODESIZE = 0x3b, EXTCODECOPY = 0x3c, RETURNDATASIZE = 0x3d,
                              RETURNDATACOPY = 0x3e, POP = 0x50, MLOAD = 0x51, MSTORE = 0x52, MSTORE8 = 0x53,
                              SLOAD = 0x54, SSTORE = 0x55, JUMP = 0x56, JUMPI = 0x57, JUMPDEST = 0x5b,
                              TLOAD = 0x5c, TSTORE = 0x5d, MCOPY = 0x5e, PUSH0 = 0x5f, PUSH1 = 0x60,
                              PUSH32 = 0x7f, LOG0 = 0xa0, CREATE = 0xf0, CALL = 0xf1, CALLCODE = 0xf2,
                              RETURN = 0xf3, DELEGATECALL = 0xf4, CREATE2 = 0xf5, STATICCALL = 0xfa,
                              REVERT = 0xfd, INVALID = 0xfe, SELFDESTRUCT = 0xff;
inline constexpr std::uint8_t ADD = 0x01, MUL = 0x02, SUB = 0x03, DIV = 0x04, SDIV = 0x05, MOD = 0x06, SMOD = 0x07,
                              ADDMOD = 0x08, MULMOD = 0x09, EXP = 0x0a, SIGNEXTEND = 0x0b, LT = 0x10, GT = 0x11,
                              SLT = 0x12, SGT = 0x13, EQ = 0x14, ISZERO = 0x15, AND = 0x16, OR = 0x17, XOR = 0x18,
                              NOT = 0x19, BYTE = 0x1a, SHL = 0x1b, SHR = 0x1c, SAR = 0x1d, KECCAK256 = 0x20,
                              BALANCE = 0x31, ORIGIN = 0x32, CALLER = 0x33, CALLVALUE = 0x34, GASPRICE = 0x3a,
                              EXTCODEHASH = 0x3f, BLOCKHASH = 0x40, COINBASE = 0x41, TIMESTAMP = 0x42,
                              NUMBER = 0x43, PREVRANDAO = 0x44, GASLIMIT = 0x45, CHAINID = 0x46,
                              SELFBALANCE = 0x47, BASEFEE = 0x48, BLOBHASH = 0x49, BLOBBASEFEE = 0x4a,
                              PC = 0x58, MSIZE = 0x59, GAS = 0x5a, DUP1 = 0x80, DUP16 = 0x8f, SWAP1 = 0x90,
                              SWAP16 = 0x9f, LOG4 = 0xa4;
}

inline std::string opcode_name(std::uint8_t code) {
  const auto& info = opcode_table()[code];
  if (info.defined) return std::string(info.name);
  static constexpr char digits[] = "0123456789abcdef";
  return std::string("UNKNOWN_0x") + digits[code >> 4] + digits[code & 0xf];
}

}  // namespace txpoc
