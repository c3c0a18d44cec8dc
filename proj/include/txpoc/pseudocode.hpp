#pragma once

// Text form of lifted statements: one statement per line, nested bodies indented by two spaces.

#include <sstream>
#include <string>
#include <vector>

#include "txpoc/decompiler.hpp"

namespace txpoc {

struct RenderOptions {
  /// Print calldata-derived values as constants and drop guard-like branches.
  bool minimal = false;
  /// Also print memory writes and local assignments.
  bool verbose = false;
  const SelectorDb* selectors = nullptr;
};

struct RenderedLine {
  std::uint64_t pc = 0;
  std::size_t step = 0;
  int indent = 0;
  std::string text;
  bool operator==(const RenderedLine&) const = default;
};

/// A condition is guard-like when it depends only on values fixed by the caller or on call bookkeeping.
inline bool is_guard_like(const ExprPtr& cond) {
  return all_leaves(cond, [](const Expr& l) {
    return l.name == "calldata" || l.name == "msg.data.length" || l.name == "msg.value" ||
           l.name == "returndatasize()" || l.name == "ext_call.success" || l.name == "extcodesize";
  });
}

/// Values the reader cannot reconstruct from the code alone get their observed value appended.
inline bool is_runtime_dependent(const ExprPtr& e) {
  if (e->kind == ExprKind::Const) return false;
  return any_leaf(e, [](const Expr& l) {
    return l.name == "return_data" || l.name == "STORAGE" || l.name == "TSTORAGE" || l.name == "balance" ||
           l.name == "address(this).balance" || l.name == "MEM0";
  });
}

namespace detail {

class PseudoRenderer {
 public:
  PseudoRenderer(const RenderOptions& opt, const Bytes& calldata) : opt_(opt), calldata_(calldata) {}

  void body(const std::vector<PseudoStmt>& stmts, int indent) {
    for (const auto& s : stmts) stmt(s, indent);
  }

  std::vector<RenderedLine> take() { return std::move(lines_); }

 private:
  ExprRenderOptions eopt(const PseudoStmt& s) const {
    ExprRenderOptions o;
    o.minimal = opt_.minimal;
    o.latest_call = s.latest_call;
    o.calldata = &calldata_;
    return o;
  }

  std::string value(const PseudoStmt& s, const ExprPtr& e, const Word& concrete) const {
    std::string text = render_expr(e, eopt(s));
    if (is_runtime_dependent(e)) text += " /* = " + format_literal(concrete) + " */";
    return text;
  }

  std::string word_at(const PseudoStmt& s, const PairedValue& data, std::size_t off) const {
    Bytes b = data.bytes();
    Bytes w(32, 0);
    for (std::size_t i = 0; i < 32 && off + i < b.size(); ++i) w[i] = b[off + i];
    ExprPtr e = off + 32 <= data.width() ? make_slice(data.expr, off, 32) : make_const(word_from_be(w));
    return value(s, e, word_from_be(w));
  }

  std::string words(const PseudoStmt& s, const PairedValue& data, std::size_t from, std::size_t len) const {
    std::string out;
    for (std::size_t p = 0; p < len; p += 32) out += (p ? ", " : "") + word_at(s, data, from + p);
    return out;
  }

  /// `head` is the position of the offset word; offsets count from `base`, the start of the arguments.
  std::string dynamic_bytes(const PseudoStmt& s, const PairedValue& data, std::size_t head, std::size_t base) const {
    Bytes b = data.bytes();
    auto word = [&](std::size_t off) {
      Bytes w(32, 0);
      for (std::size_t i = 0; i < 32 && off + i < b.size(); ++i) w[i] = b[off + i];
      return word_from_be(w);
    };
    std::size_t off = base + small(word(head), b.size());
    std::size_t len = small(word(off), b.size());
    if (len == 0) return "\"\"";
    if (len % 32 == 0 && off + 32 + len <= b.size()) return "abi.encode(" + words(s, data, off + 32, len) + ")";
    if (off + 32 + len <= b.size()) return "hex\"" + to_hex(Bytes(b.begin() + static_cast<long>(off + 32), b.begin() + static_cast<long>(off + 32 + len))).substr(2) + "\"";
    return "bytes(" + std::to_string(len) + ")";
  }

  static std::string call_verb(std::uint8_t code) {
    switch (code) {
      case op::STATICCALL: return "static call";
      case op::DELEGATECALL: return "delegate call";
      case op::CALLCODE: return "callcode";
      default: return "call";
    }
  }

  void emit(const PseudoStmt& s, int indent, std::string text) { lines_.push_back({s.pc, s.step, indent, std::move(text)}); }

  void call(const PseudoStmt& s, int indent) {
    const CallDetail& d = *s.call;
    const PairedValue& input = s.operands[2];
    Bytes in = input.bytes();
    std::string head = call_verb(d.opcode) + " [" + d.target.hex() + "].";
    std::vector<std::string> types;
    std::string sig;
    std::optional<FunctionSig> known;
    if (d.selector && opt_.selectors) known = opt_.selectors->lookup(*d.selector);
    Bytes args = in.size() > 4 ? Bytes(in.begin() + 4, in.end()) : Bytes{};
    if (!d.selector) {
      sig = "fallback()";
    } else if (known && known->params.size() * 32 <= args.size()) {
      for (const auto& p : known->params) types.push_back(p.type);
      sig = known->pretty();
    } else {
      types = infer_param_types(args);
      std::string name = opt_.selectors ? opt_.selectors->name_of(*d.selector) : "func_" + selector_hex(*d.selector).substr(2);
      sig = name + "(";
      for (std::size_t i = 0; i < types.size(); ++i) sig += (i ? ", " : "") + types[i];
      sig += ")";
    }
    head += sig;
    const PairedValue& v = s.operands[1];
    if (v.concrete != 0 || v.expr->kind != ExprKind::Const) head += " value " + value(s, v.expr, v.concrete);
    if (!d.success) head += " /* reverted */";
    if (types.empty()) {
      emit(s, indent, head);
      return;
    }
    emit(s, indent, head + " with:");
    std::string line = "args ";
    for (std::size_t j = 0; j < types.size(); ++j) {
      if (j) line += ", ";
      const auto& t = types[j];
      bool dynamic = t == "bytes" || t == "string" || t.find("[]") != std::string::npos;
      line += dynamic ? dynamic_bytes(s, input, 4 + 32 * j, 4) : word_at(s, input, 4 + 32 * j);
    }
    emit(s, indent + 1, line);
  }

  static std::optional<std::string> revert_reason(const Bytes& b) {
    if (b.size() < 68 || b[0] != 0x08 || b[1] != 0xc3 || b[2] != 0x79 || b[3] != 0xa0) return std::nullopt;
    std::size_t len = small(word_from_bytes(b.data() + 36, 32), b.size());
    if (68 + len > b.size()) return std::nullopt;
    return std::string(b.begin() + 68, b.begin() + 68 + static_cast<long>(len));
  }

  void stmt(const PseudoStmt& s, int indent) {
    auto eo = eopt(s);
    switch (s.kind) {
      case StmtKind::Assign:
        if (s.var == "STORAGE" || s.var == "TSTORAGE") {
          emit(s, indent, s.var + "[" + render_expr(s.operands[0].expr, eo) + "] = " +
                              value(s, s.operands[1].expr, s.operands[1].concrete));
        } else if (opt_.verbose) {
          emit(s, indent, s.var + " = " + value(s, s.operands[0].expr, s.operands[0].concrete));
        }
        return;
      case StmtKind::MemWrite:
        if (opt_.verbose) {
          auto off = small(s.operands[0].concrete);
          emit(s, indent, "MEM[" + std::to_string(off) + ":" + std::to_string(off + s.operands[1].width()) +
                              "] = " + render_expr(s.operands[1].expr, eo));
        }
        return;
      case StmtKind::ExternalCall:
      case StmtKind::StaticCall:
      case StmtKind::DelegateCall: call(s, indent); return;
      case StmtKind::Create: {
        std::string text = s.var + " = create(" + std::to_string(s.operands[1].width()) + "-byte initcode";
        if (s.operands[0].concrete != 0) text += ", value " + value(s, s.operands[0].expr, s.operands[0].concrete);
        emit(s, indent, text + ")");
        return;
      }
      case StmtKind::IfTaken: {
        const auto& cond = s.operands[0].expr;
        if (opt_.minimal && is_guard_like(cond)) {
          body(s.children, indent);
          return;
        }
        std::size_t mark = lines_.size();
        emit(s, indent, "if " + render_expr(cond, eo) + ":");
        body(s.children, indent + 1);
        if (opt_.minimal && lines_.size() == mark + 1) lines_.pop_back();
        return;
      }
      case StmtKind::Loop: body(s.children, indent); return;
      case StmtKind::Log: {
        const auto& data = s.operands[0];
        static const Word transfer = hash_to_word(keccak256(std::string_view("Transfer(address,address,uint256)")));
        if (s.operands.size() == 4 && s.operands[1].concrete == transfer && data.width() == 32) {
          emit(s, indent, "emit Transfer(" + render_expr(s.operands[2].expr, eo) + ", " +
                              render_expr(s.operands[3].expr, eo) + ", " + word_at(s, data, 0) + ")");
          return;
        }
        std::string text = "emit log" + std::to_string(s.operands.size() - 1) + "(";
        for (std::size_t t = 1; t < s.operands.size(); ++t) text += render_expr(s.operands[t].expr, eo) + ", ";
        text += data.width() % 32 == 0 ? "[" + words(s, data, 0, data.width()) + "]" : to_hex(data.bytes());
        emit(s, indent, text + ")");
        return;
      }
      case StmtKind::Return: {
        const auto& data = s.operands[0];
        if (data.width() == 0) return;
        emit(s, indent, "return " + (data.width() % 32 == 0 ? words(s, data, 0, data.width()) : to_hex(data.bytes())));
        return;
      }
      case StmtKind::Revert: {
        const auto& data = s.operands[0];
        if (auto reason = revert_reason(data.bytes())) {
          emit(s, indent, "revert(\"" + *reason + "\")");
        } else if (data.width() == 0) {
          emit(s, indent, "revert()");
        } else {
          emit(s, indent, "revert(" + (data.width() % 32 == 0 ? words(s, data, 0, data.width()) : to_hex(data.bytes())) + ")");
        }
        return;
      }
      case StmtKind::SelfDestruct:
        emit(s, indent, "selfdestruct(" + value(s, s.operands[0].expr, s.operands[0].concrete) + ")");
        return;
    }
  }

  const RenderOptions& opt_;
  const Bytes& calldata_;
  std::vector<RenderedLine> lines_;
};

}  // namespace detail

inline std::vector<RenderedLine> render_lines(const std::vector<PseudoStmt>& body, const Bytes& calldata,
                                              const RenderOptions& opt) {
  detail::PseudoRenderer r(opt, calldata);
  r.body(body, 0);
  return r.take();
}

inline std::string function_header(const LiftedFunction& f) {
  std::string h = "// [" + f.trace.address.hex() + "]." + f.name;
  if (f.trace.selector) h += " " + selector_hex(*f.trace.selector);
  return h + " (" + std::string(scope_rule_name(f.trace.rule)) + ")";
}

inline std::string join_lines(const std::vector<RenderedLine>& lines) {
  std::string out;
  for (const auto& l : lines) out += std::string(2 * static_cast<std::size_t>(l.indent), ' ') + l.text + "\n";
  return out;
}

inline std::string render_function(const LiftedFunction& f, const RenderOptions& opt) {
  return function_header(f) + "\n" + join_lines(render_lines(f.body, f.calldata, opt));
}

inline std::string render_pseudocode(const std::vector<LiftedFunction>& fs, const RenderOptions& opt) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) out += (i ? "\n" : "") + render_function(fs[i], opt);
  return out;
}

}  // namespace txpoc
