#pragma once

// Validation harness: shells out to a forge-compatible binary and parses its diagnostics,
// balance logs and -vvvv call traces into call summaries.

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>

#include <sys/wait.h>
#include <unistd.h>

#include "txpoc/sketch.hpp"

namespace txpoc {

/// One call in a ground or observed trace, with addresses already replaced by aliases.
struct CallSummary {
  std::string target;
  std::string function;
  std::vector<std::string> args;
  std::string value;
  bool reverted = false;
  std::string revert_reason;
  int depth = 1;
  bool create = false;
  /// Creation matched by role (the attacker contract) rather than by creation order.
  bool role_bound = false;

  bool same_call(const CallSummary& o) const { return target == o.target && function == o.function && args == o.args; }
  std::string text() const {
    std::string s = target + "." + function + "(";
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? ", " : "") + args[i];
    return s + ")";
  }
  bool operator==(const CallSummary&) const = default;
};

inline json call_summary_to_json(const CallSummary& c) {
  json j{{"target", c.target}, {"function", c.function}, {"args", c.args}, {"depth", c.depth}};
  if (!c.value.empty()) j["value"] = c.value;
  if (c.reverted) j["reverted"] = true;
  if (!c.revert_reason.empty()) j["revert_reason"] = c.revert_reason;
  if (c.create) j["create"] = true;
  return j;
}

inline constexpr std::string_view kAttackerContractName = "AttackerC";

namespace detail {

/// bytes as 0x-hex and string quoted, the way forge prints them; "0x.." when the tail is out of range.
inline std::string dynamic_arg(const Bytes& in, const Word& offset, bool text) {
  const std::size_t base = 4;
  if (offset > Word(in.size())) return "0x..";
  std::size_t off = base + static_cast<std::size_t>(offset);
  if (off + 32 > in.size()) return "0x..";
  Word len = word_from_bytes(in.data() + off, 32);
  if (len > Word(in.size() - off - 32)) return "0x..";
  auto b = in.begin() + static_cast<std::ptrdiff_t>(off + 32);
  Bytes data(b, b + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(len)));
  if (text) return "\"" + std::string(data.begin(), data.end()) + "\"";
  return to_hex(data);
}

}  // namespace detail

/// Ground-truth call summaries from a recorded trace; `alias` names addresses the PoC knows.
inline std::vector<CallSummary> ground_calls(const TraceStream& ts, const SelectorDb& db,
                                             const std::function<std::string(const Address&)>& alias) {
  std::vector<CallSummary> out;
  for (const auto& f : ts.frames) {
    CallSummary c;
    c.depth = static_cast<int>(f.depth);
    c.create = is_create(f.call_type);
    c.reverted = frame_failed(f.status);
    if (c.reverted && f.return_data.size() >= 68 && selector_from_calldata(f.return_data) == 0x08c379a0u) {
      Word len = word_from_bytes(f.return_data.data() + 36, 32);
      auto n = static_cast<std::size_t>(std::min(len, Word(f.return_data.size() - 68)));
      c.revert_reason.assign(f.return_data.begin() + 68, f.return_data.begin() + 68 + static_cast<std::ptrdiff_t>(n));
    }
    if (f.value != 0) c.value = word_to_dec(f.value);
    c.target = alias(f.code_address);
    if (c.create) {
      c.function = "new";
      c.role_bound = f.depth == 1;
    } else {
      const Bytes& in = ts.calldata(f.input);
      auto sel = selector_from_calldata(in);
      c.function = sel ? db.name_of(*sel) : "fallback";
      std::vector<std::string> types;
      if (sel)
        if (auto sig = db.lookup(*sel))
          for (const auto& p : sig->params) types.push_back(p.type);
      if (sel && types.empty() && !db.lookup(*sel)) types = infer_param_types(Bytes(in.begin() + 4, in.end()));
      for (std::size_t j = 0; j < types.size() && 4 + 32 * (j + 1) <= in.size(); ++j) {
        Word v = word_from_bytes(in.data() + 4 + 32 * j, 32);
        if (types[j] == "address")
          c.args.push_back(alias(Address::from_word(v)));
        else if (types[j] == "bytes" || types[j] == "string")
          c.args.push_back(detail::dynamic_arg(in, v, types[j] == "string"));
        else if (detail::is_dynamic_type(types[j]))
          c.args.push_back("0x..");
        else
          c.args.push_back(word_to_dec(v));
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

/// Alias function for ground traces: sender "attacker", attack contract "AttackerC", sketch constants, then hex.
inline std::function<std::string(const Address&)> ground_alias(const TraceStream& ts,
                                                              const std::vector<std::pair<std::string, Address>>& constants) {
  std::map<Address, std::string> m;
  for (const auto& [n, a] : constants) m.emplace(a, n);
  m[ts.sender] = "attacker";
  if (!ts.frames.empty()) m[ts.frames.front().code_address] = std::string(kAttackerContractName);
  return [m](const Address& a) {
    auto it = m.find(a);
    if (it != m.end()) return it->second;
    if (a.is_zero()) return std::string("address(0)");
    return "Contract_" + a.hex().substr(2, 8);
  };
}

struct BuildResult {
  bool ok = false;
  std::vector<std::string> diagnostics;
  std::string output;
};

struct RunResult {
  bool executed = false;
  bool test_passed = false;
  bool infra_failure = false;
  std::string infra_error;
  std::map<std::string, Word> pre;
  std::map<std::string, Word> post;
  std::vector<CallSummary> calls;
  std::string output;
};

/// Compiler diagnostics: each "Error..." line with the location line that follows it.
inline std::vector<std::string> parse_forge_diagnostics(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (t.rfind("Error", 0) == 0 || t.rfind("error", 0) == 0) {
      out.push_back(t);
    } else if (!out.empty() && t.rfind("-->", 0) == 0) {
      out.back() += " " + t;
    }
  }
  return out;
}

/// "before attack: <label>: <value>" and "after attack: ..." lines from the Logs section.
inline void parse_balance_logs(const std::string& text, std::map<std::string, Word>& pre, std::map<std::string, Word>& post) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    std::map<std::string, Word>* dst = nullptr;
    std::string rest;
    if (t.rfind("before attack: ", 0) == 0) {
      dst = &pre;
      rest = t.substr(15);
    } else if (t.rfind("after attack: ", 0) == 0) {
      dst = &post;
      rest = t.substr(14);
    } else {
      continue;
    }
    auto colon = rest.rfind(": ");
    if (colon == std::string::npos) continue;
    try {
      (*dst)[rest.substr(0, colon)] = word_from_string(detail::trim(rest.substr(colon + 2)));
    } catch (const std::exception&) {
    }
  }
}

namespace detail {

/// "label: [0x..]" -> label, known hex -> alias, "123 [1.23e2]" -> "123".
inline std::string normalize_forge_value(std::string v, const std::map<std::string, std::string>& addr_alias) {
  v = trim(v);
  static const std::regex labeled(R"(^([A-Za-z_$][\w$\-]*): \[0x[0-9a-fA-F]{40}\]$)");
  static const std::regex annotated(R"(^(\d+) \[[^\]]*\]$)");
  std::smatch m;
  if (std::regex_match(v, m, labeled)) return m[1];
  if (std::regex_match(v, m, annotated)) return m[1];
  if (v.size() == 42 && v.rfind("0x", 0) == 0) {
    auto it = addr_alias.find(lower(v));
    return it != addr_alias.end() ? it->second : "Contract_" + lower(v.substr(2, 8));
  }
  return v;
}

}  // namespace detail

/// Call tree from forge's -vvvv trace output. Cheatcode and console frames and the test contract itself are dropped.
inline std::vector<CallSummary> parse_forge_trace(const std::string& text, const std::map<std::string, std::string>& addr_alias) {
  std::vector<CallSummary> out;
  std::istringstream in(text);
  std::string line;
  bool in_traces = false;
  // (depth, index in out or -1 for dropped frames)
  std::vector<std::pair<int, long>> stack;
  static const std::regex call_re(R"(^\[\d+\] (.*)$)");
  static const std::regex new_re(R"(^→ new ([\w$]+)@(0x[0-9a-fA-F]{40}).*$)");
  static const std::regex fn_re(R"(^([^:\s]+)::([\w$]+)(\{value: ([^}]*)\})?\((.*)\)( \[[a-z]+\])?$)");
  static const std::regex ret_re(R"(^← \[(\w+)\] ?(.*)$)");
  while (std::getline(in, line)) {
    if (line.rfind("Traces:", 0) == 0) {
      in_traces = true;
      stack.clear();
      continue;
    }
    if (!in_traces) continue;
    if (line.empty() || (line[0] != ' ' && line[0] != '\t')) {
      in_traces = line.empty() ? in_traces : false;
      continue;
    }
    // Column of the first character that is not tree art gives the depth.
    std::size_t col = 0, i = 0;
    while (i < line.size()) {
      unsigned char c = static_cast<unsigned char>(line[i]);
      if (c == ' ') {
        ++col;
        ++i;
      } else if (c == 0xE2 && i + 2 < line.size() && (static_cast<unsigned char>(line[i + 1]) & 0xFE) == 0x94) {
        // box drawing (U+2500..U+257F), not the arrows
        ++col;
        i += 3;
      } else {
        break;
      }
    }
    std::string body = line.substr(i);
    int depth = static_cast<int>(col / 4);
    while (!stack.empty() && stack.back().first >= depth) stack.pop_back();
    std::smatch m;
    if (std::regex_match(body, m, ret_re)) {
      if (stack.empty()) continue;
      long idx = stack.back().second;
      std::string kind = m[1];
      if (idx >= 0 && kind != "Return" && kind != "Stop") {
        out[static_cast<std::size_t>(idx)].reverted = true;
        out[static_cast<std::size_t>(idx)].revert_reason = detail::trim(m[2]);
      }
      continue;
    }
    if (!std::regex_match(body, m, call_re)) continue;
    std::string call = m[1];
    CallSummary c;
    c.depth = depth;
    std::smatch cm;
    if (std::regex_match(call, cm, new_re)) {
      c.create = true;
      c.function = "new";
      c.target = cm[1];
      c.role_bound = c.target == kAttackerContractName;
    } else if (std::regex_match(call, cm, fn_re)) {
      std::string target = cm[1];
      if (target == "VM" || target == "console" || target == "ContractTest" || target.rfind("console", 0) == 0) {
        stack.emplace_back(depth, -1);
        continue;
      }
      c.target = detail::normalize_forge_value(target, addr_alias);
      c.function = cm[2];
      if (cm[4].matched) c.value = detail::normalize_forge_value(cm[4], addr_alias);
      for (const auto& a : detail::split_top_level(cm[5])) c.args.push_back(detail::normalize_forge_value(a, addr_alias));
    } else {
      stack.emplace_back(depth, -1);
      continue;
    }
    stack.emplace_back(depth, static_cast<long>(out.size()));
    out.push_back(std::move(c));
  }
  // Observed depths are relative to the test contract; shift so the first call sits at depth 1.
  if (!out.empty()) {
    int base = out.front().depth;
    for (const auto& c : out) base = std::min(base, c.depth);
    for (auto& c : out) c.depth = c.depth - base + 1;
  }
  return out;
}

class Harness {
 public:
  virtual ~Harness() = default;
  virtual BuildResult build(const std::string& source) = 0;
  virtual RunResult run(const std::string& source) = 0;
};

struct ForgeConfig {
  std::string forge = "forge";
  std::filesystem::path work_root = std::filesystem::temp_directory_path() / "txpoc-harness";
  int timeout_s = 300;
  /// chain name -> RPC URL, written to foundry.toml.
  std::map<std::string, std::string> rpc_endpoints;
  /// Checkout of forge-std linked into lib/ when set.
  std::string forge_std;
  /// Label -> lowercase hex for mapping raw addresses in traces back to aliases.
  std::map<std::string, std::string> address_aliases;
};

struct ProcessResult {
  int exit_code = -1;
  std::string output;
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

/// Runs a shell command with stderr folded into stdout.
inline ProcessResult run_command(const std::string& cmd) {
  ProcessResult r;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  int st = pclose(p);
  r.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

/// Writes the PoC into a scratch Foundry project and calls `forge build` / `forge test -vvvv`.
class ForgeHarness : public Harness {
 public:
  explicit ForgeHarness(ForgeConfig cfg) : cfg_(std::move(cfg)) {}

  BuildResult build(const std::string& source) override {
    auto dir = prepare(source);
    auto r = exec(dir, "build");
    BuildResult b;
    b.output = r.output;
    b.ok = r.exit_code == 0;
    if (!b.ok) {
      b.diagnostics = parse_forge_diagnostics(r.output);
      if (b.diagnostics.empty()) b.diagnostics.push_back(detail::trim(r.output.substr(0, 2000)));
    }
    return b;
  }

  RunResult run(const std::string& source) override {
    auto dir = prepare(source);
    auto r = exec(dir, "test -vvvv --match-test testPoC");
    RunResult out;
    out.output = r.output;
    if (r.exit_code == 124 || r.exit_code == 126 || r.exit_code == 127 || r.exit_code < 0) {
      out.infra_failure = true;
      out.infra_error = r.exit_code == 124 ? "forge timed out" : "forge could not be started";
      return out;
    }
    for (const char* marker : {"Could not instantiate forked environment", "failed to get fork", "error sending request",
                               "Failed to get EIP-1559 fees"}) {
      if (r.output.find(marker) != std::string::npos) {
        out.infra_failure = true;
        out.infra_error = marker;
        return out;
      }
    }
    out.executed = r.output.find("testPoC") != std::string::npos;
    out.test_passed = r.exit_code == 0 && out.executed;
    parse_balance_logs(r.output, out.pre, out.post);
    std::map<std::string, std::string> by_hex;
    for (const auto& [label, hex] : cfg_.address_aliases) by_hex[detail::lower(hex)] = label;
    out.calls = parse_forge_trace(r.output, by_hex);
    return out;
  }

 private:
  std::filesystem::path prepare(const std::string& source) {
    static std::atomic<unsigned> counter{0};
    auto dir = cfg_.work_root / ("p" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir / "test");
    std::ofstream(dir / "test" / "PoC.t.sol") << source;
    std::ofstream toml(dir / "foundry.toml");
    toml << "[profile.default]\nsrc = \"src\"\ntest = \"test\"\nlibs = [\"lib\"]\n";
    if (!cfg_.rpc_endpoints.empty()) {
      toml << "\n[rpc_endpoints]\n";
      for (const auto& [k, v] : cfg_.rpc_endpoints) toml << k << " = \"" << v << "\"\n";
    }
    if (!cfg_.forge_std.empty()) {
      std::filesystem::create_directories(dir / "lib");
      std::error_code ec;
      std::filesystem::create_directory_symlink(cfg_.forge_std, dir / "lib" / "forge-std", ec);
    }
    last_dir_ = dir;
    return dir;
  }

  ProcessResult exec(const std::filesystem::path& dir, const std::string& args) {
    std::string cmd = "cd " + shell_quote(dir.string()) + " && timeout " + std::to_string(cfg_.timeout_s) + " " +
                      shell_quote(cfg_.forge) + " " + args;
    return run_command(cmd);
  }

  ForgeConfig cfg_;
  std::filesystem::path last_dir_;
};

}  // namespace txpoc
