#pragma once

// Loop summarization over rendered pseudocode: consecutive repetitions of the same
// statement shapes become `for i in 0..k:` blocks with per-value roles.

#include <algorithm>
#include <functional>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "txpoc/pseudocode.hpp"

namespace txpoc {

struct LoopOptions {
  std::size_t min_body = 2;
  std::size_t max_period = 512;
  /// Regions whose divergent tables would exceed this many entries stay inline.
  std::size_t max_table = 4096;
};

struct LoopRegion {
  std::size_t entry = 0;  ///< first index
  std::size_t exit = 0;   ///< one past the last index
  std::size_t body_length = 0;
  std::size_t k = 0;
  /// Nesting pass that found the region; 0 for innermost.
  std::size_t level = 0;

  std::vector<std::pair<std::size_t, std::size_t>> bodies() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < k; ++i) out.emplace_back(entry + i * body_length, entry + (i + 1) * body_length);
    return out;
  }
  bool contains(const LoopRegion& o) const { return entry <= o.entry && o.exit <= exit && !(*this == o); }
  bool operator==(const LoopRegion&) const = default;
};

namespace detail {

inline bool primitive_window(const std::vector<std::uint64_t>& s, std::size_t b, std::size_t p) {
  for (std::size_t d = 1; d < p; ++d) {
    if (p % d) continue;
    bool periodic = true;
    for (std::size_t i = 0; i + d < p && periodic; ++i) periodic = s[b + i] == s[b + i + d];
    if (periodic) return false;
  }
  return true;
}

/// True when [b, e) holds two consecutive copies of some primitive window of length >= min_body.
inline bool has_inner_repeat(const std::vector<std::uint64_t>& s, std::size_t b, std::size_t e, const LoopOptions& opt) {
  for (std::size_t q = opt.min_body; 2 * q <= e - b; ++q) {
    std::size_t run = 0;
    for (std::size_t i = b; i + q < e; ++i) {
      run = s[i] == s[i + q] ? run + 1 : 0;
      if (run >= q && primitive_window(s, i + 1 - q, q)) return true;
    }
  }
  return false;
}

struct LoopCandidate {
  std::size_t start = 0, period = 0, k = 0;
  std::size_t span() const { return period * k; }
};

inline std::vector<LoopCandidate> loop_candidates(const std::vector<std::uint64_t>& s, const LoopOptions& opt) {
  std::vector<LoopCandidate> out;
  const std::size_t n = s.size();
  std::vector<std::size_t> run(n + 1, 0);
  for (std::size_t p = opt.min_body; p <= opt.max_period && 2 * p <= n; ++p) {
    run[n - p] = 0;
    for (std::size_t t = n - p; t-- > 0;) run[t] = s[t] == s[t + p] ? run[t + 1] + 1 : 0;
    for (std::size_t t = 0; t + p < n;) {
      if (run[t] == 0) {
        ++t;
        continue;
      }
      if (run[t] >= p && primitive_window(s, t, p) && !has_inner_repeat(s, t, t + p, opt))
        out.push_back({t, p, 1 + run[t] / p});
      t += run[t];
    }
  }
  return out;
}

}  // namespace detail

/// Consecutive repetitions in `seq`, innermost first. Regions found in one pass are
/// disjoint; later passes run on the sequence with earlier regions folded into single symbols.
inline std::vector<LoopRegion> detect_loops(const std::vector<std::uint64_t>& seq, const LoopOptions& opt = {}) {
  std::vector<LoopRegion> out;
  std::vector<std::uint64_t> syms = seq;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < seq.size(); ++i) spans.emplace_back(i, i + 1);
  std::map<std::pair<std::vector<std::uint64_t>, std::size_t>, std::uint64_t> folded;
  std::uint64_t next_id = std::uint64_t(1) << 63;
  for (std::size_t level = 0;; ++level) {
    auto cands = detail::loop_candidates(syms, opt);
    if (cands.empty()) break;
    std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
      if (a.span() != b.span()) return a.span() > b.span();
      if (a.period != b.period) return a.period < b.period;
      return a.start < b.start;
    });
    std::vector<detail::LoopCandidate> picked;
    for (const auto& c : cands) {
      bool clash = std::any_of(picked.begin(), picked.end(), [&](const auto& p) {
        return c.start < p.start + p.span() && p.start < c.start + c.span();
      });
      if (!clash) picked.push_back(c);
    }
    std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    std::vector<std::uint64_t> next_syms;
    std::vector<std::pair<std::size_t, std::size_t>> next_spans;
    std::size_t pos = 0;
    for (const auto& c : picked) {
      for (; pos < c.start; ++pos) {
        next_syms.push_back(syms[pos]);
        next_spans.push_back(spans[pos]);
      }
      LoopRegion r;
      r.entry = spans[c.start].first;
      r.exit = spans[c.start + c.span() - 1].second;
      r.body_length = spans[c.start + c.period].first - r.entry;
      r.k = c.k;
      r.level = level;
      out.push_back(r);
      std::vector<std::uint64_t> body(syms.begin() + static_cast<long>(c.start),
                                      syms.begin() + static_cast<long>(c.start + c.period));
      auto [it, fresh] = folded.try_emplace({std::move(body), c.k}, next_id);
      if (fresh) ++next_id;
      next_syms.push_back(it->second);
      next_spans.emplace_back(r.entry, r.exit);
      pos = c.start + c.span();
    }
    for (; pos < syms.size(); ++pos) {
      next_syms.push_back(syms[pos]);
      next_spans.push_back(spans[pos]);
    }
    syms = std::move(next_syms);
    spans = std::move(next_spans);
  }
  return out;
}

// --- statements --------------------------------------------------------------

/// A rendered line split into a shape with `{}` holes and the values that fill them.
struct Statement {
  std::uint64_t pc = 0;
  std::size_t step = 0;
  int indent = 0;
  std::string shape;
  std::vector<std::string> values;
  bool operator==(const Statement&) const = default;
};

inline Statement tokenize(const RenderedLine& line) {
  static const std::regex value_re(R"(ext_call_(\d+)|\b(0x[0-9a-fA-F]+|\d+ \* 10\^18|\d+)\b)");
  Statement s{line.pc, line.step, line.indent, "", {}};
  auto escape = [&](std::string_view text) {
    for (char c : text) {
      s.shape += c;
      if (c == '{' || c == '}') s.shape += c;
    }
  };
  const std::string& t = line.text;
  std::size_t pos = 0;
  for (auto it = std::sregex_iterator(t.begin(), t.end(), value_re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    int g = m[1].matched ? 1 : 2;
    auto b = static_cast<std::size_t>(m.position(g));
    escape(std::string_view(t).substr(pos, b - pos));
    s.shape += "{}";
    s.values.push_back(m[g].str());
    pos = b + static_cast<std::size_t>(m.length(g));
  }
  escape(std::string_view(t).substr(pos));
  return s;
}

/// Fills the holes of `shape` with `values`.
inline std::string fill_shape(const std::string& shape, const std::vector<std::string>& values) {
  std::string out;
  std::size_t v = 0;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    char c = shape[i];
    if ((c == '{' || c == '}') && i + 1 < shape.size() && shape[i + 1] == c) {
      out += c;
      ++i;
    } else if (c == '{' && i + 1 < shape.size() && shape[i + 1] == '}') {
      out += v < values.size() ? values[v++] : "";
      ++i;
    } else {
      out += c;
    }
  }
  return out;
}

inline std::string materialize(const Statement& s) { return fill_shape(s.shape, s.values); }

inline RenderedLine to_line(const Statement& s) { return {s.pc, s.step, s.indent, materialize(s)}; }

// --- value roles ---------------------------------------------------------------

enum class SlotRole { Invariant, DeterministicVariation, ComplexDivergence };

inline std::string_view slot_role_name(SlotRole r) {
  switch (r) {
    case SlotRole::Invariant: return "Invariant";
    case SlotRole::DeterministicVariation: return "DeterministicVariation";
    case SlotRole::ComplexDivergence: return "ComplexDivergence";
  }
  return "?";
}

/// How a numeric value was printed, so that affine slots re-print byte-identically.
enum class NumberStyle { Literal, Decimal, Hex };

namespace detail {

inline std::optional<Word> parse_number(const std::string& s) {
  try {
    if (s.rfind("0x", 0) == 0) return s.size() <= 66 ? std::optional<Word>(word_from_hex(s)) : std::nullopt;
    if (auto star = s.find(" * 10^18"); star != std::string::npos)
      return Word(s.substr(0, star)) * Word("1000000000000000000");
    if (s.empty() || s.size() > 78 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    return Word(s);
  } catch (...) {
    return std::nullopt;
  }
}

inline std::string print_number(const Word& v, NumberStyle style) {
  switch (style) {
    case NumberStyle::Literal: return format_literal(v);
    case NumberStyle::Decimal: return word_to_dec(v);
    case NumberStyle::Hex: return word_to_hex(v);
  }
  return word_to_dec(v);
}

/// A single style that prints every parsed value back to its original text.
inline std::optional<NumberStyle> common_style(const std::vector<std::string>& texts, const std::vector<Word>& vals) {
  for (auto style : {NumberStyle::Literal, NumberStyle::Decimal, NumberStyle::Hex}) {
    bool ok = true;
    for (std::size_t i = 0; i < texts.size() && ok; ++i) ok = print_number(vals[i], style) == texts[i];
    if (ok) return style;
  }
  return std::nullopt;
}

}  // namespace detail

/// Role of one value position over a grid of loop indices (row-major, last index fastest).
struct ValueFit {
  SlotRole role = SlotRole::Invariant;
  std::string invariant;
  NumberStyle style = NumberStyle::Decimal;
  Word base = 0;
  std::vector<Word> strides;  ///< one per index, wrapping arithmetic
  std::vector<std::string> table;

  std::string at(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) const {
    switch (role) {
      case SlotRole::Invariant: return invariant;
      case SlotRole::DeterministicVariation: {
        Word v = base;
        for (std::size_t d = 0; d < idx.size(); ++d) v += strides[d] * Word(idx[d]);
        return detail::print_number(v, style);
      }
      case SlotRole::ComplexDivergence: {
        std::size_t flat = 0;
        for (std::size_t d = 0; d < idx.size(); ++d) flat = flat * dims[d] + idx[d];
        return table[flat];
      }
    }
    return {};
  }
};

inline ValueFit fit_values(const std::vector<std::string>& texts, const std::vector<std::size_t>& dims) {
  ValueFit f;
  if (std::all_of(texts.begin(), texts.end(), [&](const auto& t) { return t == texts.front(); })) {
    f.invariant = texts.empty() ? "" : texts.front();
    return f;
  }
  std::vector<Word> vals;
  for (const auto& t : texts) {
    auto v = detail::parse_number(t);
    if (!v) break;
    vals.push_back(*v);
  }
  if (vals.size() == texts.size()) {
    if (auto style = detail::common_style(texts, vals)) {
      f.style = *style;
      f.base = vals[0];
      std::size_t stride_flat = 1;
      f.strides.assign(dims.size(), 0);
      for (std::size_t d = dims.size(); d-- > 0;) {
        if (dims[d] > 1) f.strides[d] = vals[stride_flat] - f.base;
        stride_flat *= dims[d];
      }
      bool exact = true;
      std::vector<std::size_t> idx(dims.size(), 0);
      for (std::size_t flat = 0; flat < vals.size() && exact; ++flat) {
        std::size_t rem = flat;
        for (std::size_t d = dims.size(); d-- > 0;) {
          idx[d] = rem % dims[d];
          rem /= dims[d];
        }
        Word v = f.base;
        for (std::size_t d = 0; d < dims.size(); ++d) v += f.strides[d] * Word(idx[d]);
        exact = v == vals[flat];
      }
      if (exact) {
        f.role = SlotRole::DeterministicVariation;
        return f;
      }
    }
  }
  f.role = SlotRole::ComplexDivergence;
  f.table = texts;
  return f;
}

// --- templates -----------------------------------------------------------------

struct LoopTemplate {
  std::string index_var = "i";
  std::size_t k = 0;
  /// Iteration-0 statements with their values cleared.
  std::vector<Statement> body;
  /// slots[s][v]: role of value v of body statement s over i = 0..k-1.
  std::vector<std::vector<ValueFit>> slots;

  std::size_t table_entries() const {
    std::size_t n = 0;
    for (const auto& st : slots)
      for (const auto& f : st) n += f.table.size();
    return n;
  }
};

inline LoopTemplate summarize(const std::vector<Statement>& stmts, const LoopRegion& r) {
  if (r.k < 2 || r.body_length == 0 || r.exit != r.entry + r.k * r.body_length || r.exit > stmts.size())
    throw Error(ErrorCode::ShapeMismatch, "region does not tile its bodies");
  LoopTemplate t;
  t.k = r.k;
  for (std::size_t s = 0; s < r.body_length; ++s) {
    const Statement& first = stmts[r.entry + s];
    for (std::size_t i = 1; i < r.k; ++i) {
      const Statement& o = stmts[r.entry + i * r.body_length + s];
      if (o.pc != first.pc || o.indent != first.indent || o.shape != first.shape || o.values.size() != first.values.size())
        throw Error(ErrorCode::ShapeMismatch, "iteration " + std::to_string(i) + " differs at body statement " + std::to_string(s));
    }
    Statement shape = first;
    shape.values.clear();
    t.body.push_back(std::move(shape));
    std::vector<ValueFit> fits;
    for (std::size_t v = 0; v < first.values.size(); ++v) {
      std::vector<std::string> texts;
      for (std::size_t i = 0; i < r.k; ++i) texts.push_back(stmts[r.entry + i * r.body_length + s].values[v]);
      fits.push_back(fit_values(texts, {r.k}));
    }
    t.slots.push_back(std::move(fits));
  }
  return t;
}

inline std::vector<Statement> expand(const LoopTemplate& t) {
  std::vector<Statement> out;
  for (std::size_t i = 0; i < t.k; ++i) {
    for (std::size_t s = 0; s < t.body.size(); ++s) {
      Statement st = t.body[s];
      for (const auto& f : t.slots[s]) st.values.push_back(f.at({i}, {t.k}));
      out.push_back(std::move(st));
    }
  }
  return out;
}

// --- whole-function compression --------------------------------------------------

struct CompressedFunction {
  std::vector<Statement> statements;
  /// Kept regions, all nesting levels, absolute indices.
  std::vector<LoopRegion> regions;
};

namespace detail {

class CompressedWriter {
 public:
  CompressedWriter(const std::vector<Statement>& st, const std::vector<LoopRegion>& regions) : st_(st), regions_(regions) {}

  std::vector<RenderedLine> range(std::size_t b, std::size_t e) {
    std::vector<RenderedLine> out;
    struct Loop {
      std::size_t period, k;
    };
    std::vector<Loop> stack;
    write(b, e, 0, stack, out);
    return out;
  }

 private:
  template <typename Stack>
  void write(std::size_t b, std::size_t e, int shift, Stack& stack, std::vector<RenderedLine>& out) {
    for (std::size_t p = b; p < e;) {
      const LoopRegion* top = nullptr;
      for (const auto& r : regions_) {
        if (r.entry != p || r.exit > e) continue;
        if (!top || r.exit > top->exit) top = &r;
      }
      if (!top) {
        const Statement& s = st_[p];
        Statement shown = s;
        shown.values.clear();
        for (std::size_t v = 0; v < s.values.size(); ++v) shown.values.push_back(value(p, v, stack));
        out.push_back({s.pc, s.step, s.indent + shift, materialize(shown)});
        ++p;
        continue;
      }
      int indent = st_[p].indent;
      for (std::size_t q = top->entry; q < top->entry + top->body_length; ++q) indent = std::min(indent, st_[q].indent);
      std::size_t header = out.size();
      out.push_back({st_[p].pc, st_[p].step, indent + shift,
                     "for " + index_name(stack.size()) + " in 0.." + std::to_string(top->k) + ":"});
      stack.push_back({top->body_length, top->k});
      pending_tables_.emplace_back();
      write(top->entry, top->entry + top->body_length, shift + 1, stack, out);
      stack.pop_back();
      auto tables = std::move(pending_tables_.back());
      pending_tables_.pop_back();
      for (auto& t : tables) t.indent = indent + shift;
      out.insert(out.begin() + static_cast<long>(header), tables.begin(), tables.end());
      p = top->exit;
    }
  }

  static std::string index_name(std::size_t depth) {
    static const char* names[] = {"i", "j", "l", "m", "n"};
    return depth < 5 ? names[depth] : "i" + std::to_string(depth);
  }

  template <typename Stack>
  std::string value(std::size_t p, std::size_t v, const Stack& stack) {
    if (stack.empty()) return st_[p].values[v];
    std::vector<std::size_t> dims;
    for (const auto& l : stack) dims.push_back(l.k);
    std::vector<std::string> texts;
    std::vector<std::size_t> idx(dims.size(), 0);
    std::size_t total = 1;
    for (auto d : dims) total *= d;
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::size_t rem = flat, pos = p;
      for (std::size_t d = dims.size(); d-- > 0;) {
        idx[d] = rem % dims[d];
        rem /= dims[d];
        pos += idx[d] * stack[d].period;
      }
      texts.push_back(st_[pos].values[v]);
    }
    ValueFit f = fit_values(texts, dims);
    switch (f.role) {
      case SlotRole::Invariant: return f.invariant;
      case SlotRole::DeterministicVariation: {
        std::string out;
        bool any_base = f.base != 0;
        if (any_base) out = detail::print_number(f.base, NumberStyle::Literal);
        for (std::size_t d = 0; d < dims.size(); ++d) {
          Word s = f.strides[d];
          if (s == 0) continue;
          bool neg = is_negative(s);
          Word mag = neg ? negate(s) : s;
          std::string term = (mag == 1 ? "" : detail::print_number(mag, NumberStyle::Literal) + " * ") + index_name(d);
          if (out.empty())
            out = neg ? "-" + term : term;
          else
            out += (neg ? " - " : " + ") + term;
        }
        return out.empty() ? "0" : out;
      }
      case SlotRole::ComplexDivergence: {
        std::string name = "arr" + std::to_string(++arrays_);
        std::string line = name + " = " + nested_array(f.table, dims, 0, 0);
        // Tables are attached to the outermost loop that the value varies under.
        pending_tables_.front().push_back({st_[p].pc, st_[p].step, 0, line});
        std::string ref = name;
        for (std::size_t d = 0; d < dims.size(); ++d) ref += "[" + index_name(d) + "]";
        return ref;
      }
    }
    return {};
  }

  static std::string nested_array(const std::vector<std::string>& table, const std::vector<std::size_t>& dims, std::size_t d,
                                  std::size_t offset) {
    std::size_t stride = 1;
    for (std::size_t x = d + 1; x < dims.size(); ++x) stride *= dims[x];
    std::string out = "[";
    for (std::size_t i = 0; i < dims[d]; ++i) {
      if (i) out += ", ";
      out += d + 1 == dims.size() ? table[offset + i] : nested_array(table, dims, d + 1, offset + i * stride);
    }
    return out + "]";
  }

  const std::vector<Statement>& st_;
  const std::vector<LoopRegion>& regions_;
  std::vector<std::vector<RenderedLine>> pending_tables_;
  std::size_t arrays_ = 0;
};

inline std::size_t serialized_size(const std::vector<RenderedLine>& lines) { return join_lines(lines).size(); }

}  // namespace detail

inline std::vector<RenderedLine> render_compressed_lines(const CompressedFunction& cf) {
  detail::CompressedWriter w(cf.statements, cf.regions);
  return w.range(0, cf.statements.size());
}

inline std::string render_compressed(const CompressedFunction& cf) { return join_lines(render_compressed_lines(cf)); }

/// Detects loops over (pc, indent, shape) keys and keeps each region only if it shrinks the output.
inline CompressedFunction compress_lines(const std::vector<RenderedLine>& lines, const LoopOptions& opt = {}) {
  CompressedFunction cf;
  for (const auto& l : lines) cf.statements.push_back(tokenize(l));
  std::map<std::tuple<std::uint64_t, int, std::string>, std::uint64_t> ids;
  std::vector<std::uint64_t> seq;
  for (const auto& s : cf.statements) {
    auto [it, _] = ids.try_emplace({s.pc, s.indent, s.shape}, ids.size());
    seq.push_back(it->second);
  }
  auto found = detect_loops(seq, opt);
  // Outermost first so that dropping a region can still let its inner loops through.
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.level != b.level) return a.level > b.level;
    return a.entry < b.entry;
  });
  std::vector<LoopRegion> all = found;
  auto table_cost = [&](const LoopRegion& r) {
    std::size_t n = 0;
    for (const auto& f : summarize(cf.statements, r).slots)
      for (const auto& v : f) n += v.table.size();
    return n;
  };
  for (const auto& r : found) {
    if (std::find(all.begin(), all.end(), r) == all.end()) continue;
    bool enclosed = std::any_of(all.begin(), all.end(), [&](const auto& o) { return o.contains(r); });
    if (enclosed) continue;
    auto inside = [&](const LoopRegion& o) { return r.entry <= o.entry && o.exit <= r.exit; };
    std::vector<LoopRegion> local;
    for (const auto& o : all)
      if (inside(o)) local.push_back(o);
    std::vector<LoopRegion> without;
    for (const auto& o : local)
      if (!(o == r)) without.push_back(o);
    std::vector<Statement> slice(cf.statements.begin() + static_cast<long>(r.entry),
                                 cf.statements.begin() + static_cast<long>(r.exit));
    auto shift = [&](std::vector<LoopRegion> v) {
      for (auto& o : v) {
        o.entry -= r.entry;
        o.exit -= r.entry;
      }
      return v;
    };
    auto with_r = shift(local), without_r = shift(without);
    std::size_t kept = detail::serialized_size(detail::CompressedWriter(slice, with_r).range(0, slice.size()));
    std::size_t dropped = detail::serialized_size(detail::CompressedWriter(slice, without_r).range(0, slice.size()));
    if (kept >= dropped || table_cost(r) > opt.max_table) all.erase(std::find(all.begin(), all.end(), r));
  }
  // Inner regions outside iteration 0 of a kept region are never rendered; drop them for a tidy result.
  std::vector<LoopRegion> kept;
  for (const auto& r : all) {
    bool shadowed = std::any_of(all.begin(), all.end(), [&](const auto& o) {
      return o.contains(r) && r.entry >= o.entry + o.body_length;
    });
    if (!shadowed) kept.push_back(r);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.entry != b.entry) return a.entry < b.entry;
    return a.exit > b.exit;
  });
  cf.regions = std::move(kept);
  return cf;
}

}  // namespace txpoc
