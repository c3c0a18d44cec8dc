#pragma once

// Symbolic expressions paired with the concrete values observed in the trace.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "txpoc/abi.hpp"
#include "txpoc/opcodes.hpp"
#include "txpoc/word.hpp"

namespace txpoc {

/// Wrapping 256-bit EVM arithmetic. Returns nullopt for opcodes that are not pure functions of their inputs.
inline std::optional<Word> eval_op(std::uint8_t code, const std::vector<Word>& a) {
  using boost::multiprecision::cpp_int;
  auto sdiv = [](const Word& x, const Word& y) -> Word {
    if (y == 0) return 0;
    bool nx = is_negative(x), ny = is_negative(y);
    Word q = (nx ? negate(x) : x) / (ny ? negate(y) : y);
    return nx != ny ? negate(q) : q;
  };
  auto smod = [](const Word& x, const Word& y) -> Word {
    if (y == 0) return 0;
    bool nx = is_negative(x);
    Word r = (nx ? negate(x) : x) % (is_negative(y) ? negate(y) : y);
    return nx ? negate(r) : r;
  };
  auto slt = [](const Word& x, const Word& y) {
    bool nx = is_negative(x), ny = is_negative(y);
    if (nx != ny) return nx;
    return x < y;
  };
  auto need = [&](std::size_t n) { return a.size() >= n; };
  switch (code) {
    case op::ADD: if (need(2)) return Word(a[0] + a[1]); break;
    case op::MUL: if (need(2)) return Word(a[0] * a[1]); break;
    case op::SUB: if (need(2)) return Word(a[0] - a[1]); break;
    case op::DIV: if (need(2)) return a[1] == 0 ? Word(0) : Word(a[0] / a[1]); break;
    case op::SDIV: if (need(2)) return sdiv(a[0], a[1]); break;
    case op::MOD: if (need(2)) return a[1] == 0 ? Word(0) : Word(a[0] % a[1]); break;
    case op::SMOD: if (need(2)) return smod(a[0], a[1]); break;
    case op::ADDMOD:
      if (need(3)) return a[2] == 0 ? Word(0) : Word((cpp_int(a[0]) + cpp_int(a[1])) % cpp_int(a[2]));
      break;
    case op::MULMOD:
      if (need(3)) return a[2] == 0 ? Word(0) : Word((cpp_int(a[0]) * cpp_int(a[1])) % cpp_int(a[2]));
      break;
    case op::EXP:
      if (need(2)) {
        Word base = a[0], e = a[1], r = 1;
        while (e != 0) {
          if (bit_test(e, 0)) r *= base;
          base *= base;
          e >>= 1;
        }
        return r;
      }
      break;
    case op::SIGNEXTEND:
      if (need(2)) {
        if (a[0] >= 31) return a[1];
        unsigned bit = static_cast<unsigned>(a[0]) * 8 + 7;
        Word mask = (Word(1) << bit) - 1;
        return bit_test(a[1], bit) ? Word(a[1] | ~mask) : Word(a[1] & mask);
      }
      break;
    case op::LT: if (need(2)) return Word(a[0] < a[1] ? 1 : 0); break;
    case op::GT: if (need(2)) return Word(a[0] > a[1] ? 1 : 0); break;
    case op::SLT: if (need(2)) return Word(slt(a[0], a[1]) ? 1 : 0); break;
    case op::SGT: if (need(2)) return Word(slt(a[1], a[0]) ? 1 : 0); break;
    case op::EQ: if (need(2)) return Word(a[0] == a[1] ? 1 : 0); break;
    case op::ISZERO: if (need(1)) return Word(a[0] == 0 ? 1 : 0); break;
    case op::AND: if (need(2)) return Word(a[0] & a[1]); break;
    case op::OR: if (need(2)) return Word(a[0] | a[1]); break;
    case op::XOR: if (need(2)) return Word(a[0] ^ a[1]); break;
    case op::NOT: if (need(1)) return Word(~a[0]); break;
    case op::BYTE:
      if (need(2)) return a[0] >= 32 ? Word(0) : Word((a[1] >> (8 * (31 - static_cast<unsigned>(a[0])))) & 0xff);
      break;
    case op::SHL: if (need(2)) return a[0] >= 256 ? Word(0) : Word(a[1] << static_cast<unsigned>(a[0])); break;
    case op::SHR: if (need(2)) return a[0] >= 256 ? Word(0) : Word(a[1] >> static_cast<unsigned>(a[0])); break;
    case op::SAR:
      if (need(2)) {
        bool neg = is_negative(a[1]);
        if (a[0] >= 256) return neg ? Word(~Word(0)) : Word(0);
        unsigned s = static_cast<unsigned>(a[0]);
        Word r = a[1] >> s;
        if (neg && s > 0) r |= ~(~Word(0) >> s);
        return r;
      }
      break;
    default: break;
  }
  return std::nullopt;
}

enum class ExprKind { Const, Leaf, Op, Slice, Concat };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Expression node. Every node has a byte width; word-valued nodes are 32 bytes wide.
struct Expr {
  ExprKind kind = ExprKind::Const;
  Word value = 0;             ///< Const: right-aligned value of `width` bytes
  std::string name;           ///< Leaf: reference name (calldata, STORAGE, return_data, msg.sender, ...)
  std::uint8_t opcode = 0;    ///< Op
  std::vector<ExprPtr> args;  ///< Op operands, Concat parts, Slice base, Leaf index
  std::size_t width = 32;
  std::size_t lo = 0;           ///< Slice: byte offset into args[0]; indexed leaves: byte offset
  std::uint32_t call_index = 0; ///< return_data / ext_call.success leaves: ordinal of the producing call
};

inline ExprPtr make_const(const Word& v, std::size_t width = 32) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Const;
  e->width = width;
  e->value = width >= 32 ? v : Word(v & ((Word(1) << (8 * width)) - 1));
  return e;
}

inline ExprPtr make_leaf(std::string name, std::size_t width = 32, std::vector<ExprPtr> index = {}, std::size_t lo = 0,
                         std::uint32_t call_index = 0) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Leaf;
  e->name = std::move(name);
  e->width = width;
  e->args = std::move(index);
  e->lo = lo;
  e->call_index = call_index;
  return e;
}

inline bool is_const(const ExprPtr& e, const Word& v) { return e->kind == ExprKind::Const && e->value == v; }

inline bool is_boolean(const ExprPtr& e) {
  if (e->kind == ExprKind::Op)
    switch (e->opcode) {
      case op::LT: case op::GT: case op::SLT: case op::SGT: case op::EQ: case op::ISZERO: return true;
      default: return false;
    }
  return e->kind == ExprKind::Leaf && e->name == "ext_call.success";
}

/// Leaves that always hold a 20-byte address.
inline bool is_address_leaf(const ExprPtr& e) {
  if (e->kind != ExprKind::Leaf) return false;
  return e->name == "address(this)" || e->name == "msg.sender" || e->name == "tx.origin" ||
         e->name == "block.coinbase" || e->name.rfind("new_contract_", 0) == 0;
}

inline bool same_expr(const ExprPtr& a, const ExprPtr& b);

inline ExprPtr make_op(std::uint8_t code, std::vector<ExprPtr> args) {
  bool all_const = true;
  std::vector<Word> vals;
  for (const auto& a : args) {
    all_const = all_const && a->kind == ExprKind::Const && a->width == 32;
    vals.push_back(a->value);
  }
  if (all_const)
    if (auto v = eval_op(code, vals)) return make_const(*v);
  auto zero = Word(0), ones = ~Word(0);
  switch (code) {
    case op::ADD:
      if (is_const(args[1], zero)) return args[0];
      if (is_const(args[0], zero)) return args[1];
      break;
    case op::SUB:
      if (is_const(args[1], zero)) return args[0];
      break;
    case op::MUL:
      if (is_const(args[0], zero) || is_const(args[1], zero)) return make_const(0);
      if (is_const(args[1], 1)) return args[0];
      if (is_const(args[0], 1)) return args[1];
      break;
    case op::DIV:
      if (is_const(args[1], 1)) return args[0];
      break;
    case op::OR:
    case op::XOR:
      if (is_const(args[1], zero)) return args[0];
      if (is_const(args[0], zero)) return args[1];
      break;
    case op::AND:
      if (is_const(args[0], zero) || is_const(args[1], zero)) return make_const(0);
      if (is_const(args[1], ones)) return args[0];
      if (is_const(args[0], ones)) return args[1];
      if (is_const(args[0], address_mask())) std::swap(args[0], args[1]);
      if (is_const(args[1], address_mask())) {
        const auto& x = args[0];
        if (is_address_leaf(x)) return x;
        if (x->kind == ExprKind::Op && x->opcode == op::AND && is_const(x->args[1], address_mask())) return x;
      }
      break;
    case op::SHL:
    case op::SHR:
      if (is_const(args[0], zero)) return args[1];
      break;
    case op::ISZERO:
      // ISZERO(ISZERO(b)) is b when b is already 0/1.
      if (args[0]->kind == ExprKind::Op && args[0]->opcode == op::ISZERO && is_boolean(args[0]->args[0]))
        return args[0]->args[0];
      break;
    case op::EQ:
      if (same_expr(args[0], args[1])) return make_const(1);
      break;
    default: break;
  }
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Op;
  e->opcode = code;
  e->args = std::move(args);
  return e;
}

inline bool same_expr(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind || a->width != b->width || a->value != b->value || a->name != b->name ||
      a->opcode != b->opcode || a->lo != b->lo || a->call_index != b->call_index || a->args.size() != b->args.size())
    return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!same_expr(a->args[i], b->args[i])) return false;
  return true;
}

/// Leaves whose byte ranges can be re-sliced directly instead of wrapping them in a Slice node.
inline bool is_sliceable_leaf(const ExprPtr& e) {
  return e->kind == ExprKind::Leaf &&
         (e->name == "calldata" || e->name == "return_data" || e->name == "MEM0" || e->name == "code");
}

inline ExprPtr make_slice(const ExprPtr& base, std::size_t lo, std::size_t len);

inline ExprPtr make_concat(std::vector<ExprPtr> parts) {
  std::vector<ExprPtr> flat;
  for (auto& p : parts) {
    if (p->width == 0) continue;
    if (p->kind == ExprKind::Concat)
      flat.insert(flat.end(), p->args.begin(), p->args.end());
    else
      flat.push_back(p);
  }
  std::vector<ExprPtr> merged;
  for (auto& p : flat) {
    if (!merged.empty()) {
      const auto& q = merged.back();
      if (q->kind == ExprKind::Const && p->kind == ExprKind::Const && q->width + p->width <= 32) {
        merged.back() = make_const((q->value << (8 * p->width)) | p->value, q->width + p->width);
        continue;
      }
      if (is_sliceable_leaf(q) && is_sliceable_leaf(p) && q->name == p->name && q->call_index == p->call_index &&
          q->args.size() == p->args.size() && q->lo + q->width == p->lo) {
        bool same_index = true;
        for (std::size_t i = 0; i < q->args.size(); ++i) same_index = same_index && same_expr(q->args[i], p->args[i]);
        if (same_index) {
          merged.back() = make_leaf(q->name, q->width + p->width, q->args, q->lo, q->call_index);
          continue;
        }
      }
      if (q->kind == ExprKind::Slice && p->kind == ExprKind::Slice && same_expr(q->args[0], p->args[0]) &&
          q->lo + q->width == p->lo) {
        merged.back() = make_slice(q->args[0], q->lo, q->width + p->width);
        continue;
      }
    }
    merged.push_back(p);
  }
  if (merged.size() == 1) return merged.front();
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Concat;
  e->width = 0;
  for (const auto& p : merged) e->width += p->width;
  e->args = std::move(merged);
  return e;
}

inline ExprPtr make_slice(const ExprPtr& base, std::size_t lo, std::size_t len) {
  if (lo == 0 && len == base->width) return base;
  if (base->kind == ExprKind::Const) {
    std::size_t shift = 8 * (base->width - lo - len);
    return make_const(base->value >> shift, len);
  }
  if (is_sliceable_leaf(base)) return make_leaf(base->name, len, base->args, base->lo + lo, base->call_index);
  if (base->kind == ExprKind::Slice) return make_slice(base->args[0], base->lo + lo, len);
  if (base->kind == ExprKind::Concat) {
    std::vector<ExprPtr> parts;
    std::size_t pos = 0;
    for (const auto& p : base->args) {
      std::size_t b = std::max(pos, lo), e = std::min(pos + p->width, lo + len);
      if (b < e) parts.push_back(make_slice(p, b - pos, e - b));
      pos += p->width;
    }
    return make_concat(std::move(parts));
  }
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Slice;
  e->args = {base};
  e->lo = lo;
  e->width = len;
  return e;
}

/// Widens a byte expression to a word the way MLOAD would see it (left-aligned, zero padded).
inline ExprPtr as_word(const ExprPtr& e) {
  if (e->width == 32) return e;
  if (e->width > 32) return make_slice(e, 0, 32);
  return make_concat({e, make_const(0, 32 - e->width)});
}

template <class Pred>
bool all_leaves(const ExprPtr& e, Pred pred) {
  if (e->kind == ExprKind::Leaf) return pred(*e);
  if (e->kind == ExprKind::Const) return true;
  for (const auto& a : e->args)
    if (!all_leaves(a, pred)) return false;
  return true;
}

template <class Pred>
bool any_leaf(const ExprPtr& e, Pred pred) {
  if (e->kind == ExprKind::Leaf) return pred(*e);
  for (const auto& a : e->args)
    if (any_leaf(a, pred)) return true;
  return false;
}

inline bool is_fully_concrete(const ExprPtr& e) {
  return all_leaves(e, [](const Expr&) { return false; });
}

/// Evaluates an expression to its bytes. Only calldata leaves are resolvable, and only when `calldata` is given.
inline std::optional<Bytes> evaluate(const ExprPtr& e, const Bytes* calldata = nullptr) {
  switch (e->kind) {
    case ExprKind::Const: {
      Bytes b = word_to_bytes(e->value);
      return Bytes(b.end() - static_cast<long>(e->width), b.end());
    }
    case ExprKind::Leaf: {
      if (!calldata) return std::nullopt;
      if (e->name == "msg.data.length") return word_to_bytes(Word(calldata->size()));
      if (e->name != "calldata") return std::nullopt;
      std::size_t base = 0;
      if (!e->args.empty()) {
        auto idx = evaluate(e->args[0], calldata);
        if (!idx) return std::nullopt;
        Word w = word_from_be(*idx);
        if (w > Word(calldata->size())) return Bytes(e->width, 0);
        base = static_cast<std::size_t>(w);
      }
      Bytes out(e->width, 0);
      for (std::size_t i = 0; i < e->width; ++i)
        if (base + e->lo + i < calldata->size()) out[i] = (*calldata)[base + e->lo + i];
      return out;
    }
    case ExprKind::Op: {
      std::vector<Word> vals;
      for (const auto& a : e->args) {
        auto b = evaluate(a, calldata);
        if (!b) return std::nullopt;
        vals.push_back(word_from_be(*b));
      }
      if (e->opcode == op::KECCAK256) {
        Bytes all;
        for (const auto& a : e->args) {
          auto b = evaluate(a, calldata);
          all.insert(all.end(), b->begin(), b->end());
        }
        return word_to_bytes(hash_to_word(keccak256(all)));
      }
      auto v = eval_op(e->opcode, vals);
      if (!v) return std::nullopt;
      return word_to_bytes(*v);
    }
    case ExprKind::Slice: {
      auto b = evaluate(e->args[0], calldata);
      if (!b) return std::nullopt;
      return Bytes(b->begin() + static_cast<long>(e->lo), b->begin() + static_cast<long>(e->lo + e->width));
    }
    case ExprKind::Concat: {
      Bytes out;
      for (const auto& a : e->args) {
        auto b = evaluate(a, calldata);
        if (!b) return std::nullopt;
        out.insert(out.end(), b->begin(), b->end());
      }
      return out;
    }
  }
  return std::nullopt;
}

/// An expression together with the value the trace observed for it.
struct PairedValue {
  ExprPtr expr;
  Word concrete = 0;  ///< right-aligned value for widths up to 32 bytes
  Bytes raw;          ///< exact bytes, always set for memory values
  std::size_t provenance = 0;

  std::size_t width() const { return expr ? expr->width : 32; }
  Bytes bytes() const {
    if (!raw.empty() || width() == 0) return raw;
    Bytes b = word_to_bytes(concrete);
    return Bytes(b.end() - static_cast<long>(std::min<std::size_t>(width(), 32)), b.end());
  }
  bool consistent() const {
    if (!expr || !is_fully_concrete(expr)) return true;
    auto v = evaluate(expr);
    return v && *v == bytes();
  }
};

inline PairedValue paired_word(ExprPtr e, const Word& c, std::size_t step) { return PairedValue{std::move(e), c, {}, step}; }

inline PairedValue paired_bytes(ExprPtr e, Bytes b, std::size_t step) {
  PairedValue p{std::move(e), 0, std::move(b), step};
  if (p.raw.size() <= 32) p.concrete = word_from_be(p.raw);
  return p;
}

// ---------------------------------------------------------------------------
// Rendering

struct ExprRenderOptions {
  bool minimal = false;
  std::uint32_t latest_call = 0;  ///< return_data leaves of other calls are qualified as ext_call_<n>
  /// Invocation input, used by minimal mode to print calldata-only subexpressions as values.
  const Bytes* calldata = nullptr;
};

inline std::string render_expr(const ExprPtr& e, const ExprRenderOptions& opt);

namespace detail {
inline const char* infix(std::uint8_t code) {
  switch (code) {
    case op::ADD: return "+";
    case op::SUB: return "-";
    case op::MUL: return "*";
    case op::DIV: return "/";
    case op::MOD: return "%";
    case op::EXP: return "**";
    case op::LT: return "<";
    case op::GT: return ">";
    case op::EQ: return "==";
    case op::AND: return "&";
    case op::OR: return "|";
    case op::XOR: return "^";
    default: return nullptr;
  }
}

inline std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string operand(const ExprPtr& e, const ExprRenderOptions& opt) {
  auto s = render_expr(e, opt);
  bool compound = e->kind == ExprKind::Op && (infix(e->opcode) || e->opcode == op::SHL || e->opcode == op::SHR);
  if (compound && !(e->opcode == op::AND && (is_const(e->args[0], address_mask()) || is_const(e->args[1], address_mask()))))
    return "(" + s + ")";
  return s;
}

inline std::string render_index(const Expr& e, const ExprRenderOptions& opt) {
  return e.args.empty() ? std::to_string(e.lo) : render_expr(e.args[0], opt);
}

inline std::string render_leaf(const Expr& e, const ExprRenderOptions& opt) {
  if (e.name == "calldata") {
    std::string base = e.args.empty() ? "" : render_expr(e.args[0], opt) + " + ";
    if (e.args.empty() || is_const(e.args[0], 0)) base.clear();
    if (e.width == 32) return "calldata[" + base + std::to_string(e.lo) + "]";
    return "calldata[" + base + std::to_string(e.lo) + ":" + base + std::to_string(e.lo + e.width) + "]";
  }
  if (e.name == "return_data") {
    std::string who = e.call_index == opt.latest_call ? "ext_call" : "ext_call_" + std::to_string(e.call_index);
    if (e.width == 32 && e.lo % 32 == 0) return who + ".return_data[" + std::to_string(e.lo / 32) + "]";
    return who + ".return_data[" + std::to_string(e.lo) + ":" + std::to_string(e.lo + e.width) + "]";
  }
  if (e.name == "ext_call.success") {
    return e.call_index == opt.latest_call ? "ext_call.success" : "ext_call_" + std::to_string(e.call_index) + ".success";
  }
  if (e.name == "STORAGE" || e.name == "TSTORAGE") return e.name + "[" + render_index(e, opt) + "]";
  if (e.name == "MEM0" || e.name == "code") {
    if (e.width == 32) return e.name;
    return e.name + "[" + std::to_string(e.lo) + ":" + std::to_string(e.lo + e.width) + "]";
  }
  if (!e.args.empty()) {
    std::string s = e.name + "(";
    for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + render_expr(e.args[i], opt);
    return s + ")";
  }
  return e.name;
}
}  // namespace detail

/// Leaves that hold the same value for the whole invocation and come from the caller.
inline bool is_input_leaf(const Expr& e) { return e.name == "calldata" || e.name == "msg.data.length"; }

inline std::string render_expr(const ExprPtr& e, const ExprRenderOptions& opt) {
  if (opt.minimal && opt.calldata && e->kind != ExprKind::Const && e->width <= 32 &&
      all_leaves(e, [](const Expr& l) { return is_input_leaf(l); })) {
    if (auto v = evaluate(e, opt.calldata)) return format_literal(word_from_be(*v));
  }
  switch (e->kind) {
    case ExprKind::Const: return format_literal(e->value);
    case ExprKind::Leaf: return detail::render_leaf(*e, opt);
    case ExprKind::Slice:
      return "slice(" + render_expr(e->args[0], opt) + ", " + std::to_string(e->lo) + ", " + std::to_string(e->width) + ")";
    case ExprKind::Concat: {
      std::string s = "concat(";
      for (std::size_t i = 0; i < e->args.size(); ++i) s += (i ? ", " : "") + render_expr(e->args[i], opt);
      return s + ")";
    }
    case ExprKind::Op: break;
  }
  const auto& a = e->args;
  switch (e->opcode) {
    case op::AND:
      if (is_const(a[1], address_mask())) return "address(" + render_expr(a[0], opt) + ")";
      if (is_const(a[0], address_mask())) return "address(" + render_expr(a[1], opt) + ")";
      break;
    case op::ISZERO:
      if (a[0]->kind == ExprKind::Op && a[0]->opcode == op::EQ)
        return detail::operand(a[0]->args[0], opt) + " != " + detail::operand(a[0]->args[1], opt);
      if (a[0]->kind == ExprKind::Op && a[0]->opcode == op::LT)
        return detail::operand(a[0]->args[0], opt) + " >= " + detail::operand(a[0]->args[1], opt);
      if (a[0]->kind == ExprKind::Op && a[0]->opcode == op::GT)
        return detail::operand(a[0]->args[0], opt) + " <= " + detail::operand(a[0]->args[1], opt);
      if (a[0]->kind == ExprKind::Op && a[0]->opcode == op::ISZERO) {
        const auto& inner = a[0]->args[0];
        return is_boolean(inner) ? render_expr(inner, opt) : detail::operand(inner, opt) + " != 0";
      }
      if (is_boolean(a[0])) return a[0]->kind == ExprKind::Op ? "!(" + render_expr(a[0], opt) + ")" : "!" + render_expr(a[0], opt);
      return detail::operand(a[0], opt) + " == 0";
    case op::NOT: return "~" + detail::operand(a[0], opt);
    case op::SHL: return detail::operand(a[1], opt) + " << " + detail::operand(a[0], opt);
    case op::SHR: return detail::operand(a[1], opt) + " >> " + detail::operand(a[0], opt);
    case op::KECCAK256: {
      std::string s = "sha3(";
      for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + render_expr(a[i], opt);
      return s + ")";
    }
    default: break;
  }
  if (const char* sym = detail::infix(e->opcode); sym && a.size() == 2)
    return detail::operand(a[0], opt) + " " + sym + " " + detail::operand(a[1], opt);
  std::string s = detail::lower(opcode_name(e->opcode)) + "(";
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + render_expr(a[i], opt);
  return s + ")";
}

}  // namespace txpoc
