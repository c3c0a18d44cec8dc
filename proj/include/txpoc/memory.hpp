#pragma once

// Concrete-range memory segmentation and versioned variable bindings.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "txpoc/expr.hpp"

namespace txpoc {

/// Memory as non-overlapping segments keyed by concrete start offset.
class ConcreteMemoryMap {
 public:
  struct Segment {
    std::size_t offset = 0;
    PairedValue value;  ///< width() == segment length
    std::size_t length() const { return value.width(); }
    std::size_t end() const { return offset + length(); }
  };

  void write(std::size_t offset, std::size_t length, const PairedValue& value) {
    if (length == 0) return;
    PairedValue v = value;
    if (v.width() != length) {
      // Stored values are re-cut to the written range (MSTORE8 writes the low byte of a word).
      Bytes b = v.bytes();
      if (b.size() >= length) {
        std::size_t lo = b.size() - length;
        v = paired_bytes(make_slice(v.expr, lo, length), Bytes(b.begin() + static_cast<long>(lo), b.end()), v.provenance);
      } else {
        b.resize(length, 0);
        v = paired_bytes(make_concat({v.expr, make_leaf("MEM0", length - v.width())}), b, v.provenance);
      }
    }
    if (v.raw.empty()) v.raw = v.bytes();
    std::size_t end = offset + length;
    // Split the segment straddling the start, then every segment up to `end`.
    auto it = segments_.lower_bound(offset);
    if (it != segments_.begin()) {
      auto prev = std::prev(it);
      if (prev->second.end() > offset) it = prev;
    }
    std::vector<Segment> keep;
    while (it != segments_.end() && it->second.offset < end) {
      const Segment& s = it->second;
      if (s.offset < offset) keep.push_back(cut(s, s.offset, offset));
      if (s.end() > end) keep.push_back(cut(s, end, s.end()));
      it = segments_.erase(it);
    }
    for (auto& k : keep) segments_.emplace(k.offset, std::move(k));
    segments_.emplace(offset, Segment{offset, std::move(v)});
  }

  /// Exact hit returns the stored pair; otherwise a concatenation, with MEM0 for never-written bytes.
  PairedValue read(std::size_t offset, std::size_t length, std::size_t step) const {
    if (length == 0) return paired_bytes(make_concat({}), {}, step);
    if (auto it = segments_.find(offset); it != segments_.end() && it->second.length() == length) return it->second.value;
    std::vector<ExprPtr> parts;
    Bytes bytes;
    std::size_t pos = offset, end = offset + length;
    auto it = segments_.lower_bound(offset);
    if (it != segments_.begin() && std::prev(it)->second.end() > offset) it = std::prev(it);
    auto gap = [&](std::size_t upto) {
      if (upto <= pos) return;
      parts.push_back(make_leaf("MEM0", upto - pos, {}, 0));
      bytes.resize(bytes.size() + (upto - pos), 0);
      pos = upto;
    };
    for (; it != segments_.end() && it->second.offset < end; ++it) {
      const Segment& s = it->second;
      gap(s.offset);
      std::size_t b = std::max(pos, s.offset), e = std::min(end, s.end());
      Segment piece = cut(s, b, e);
      parts.push_back(piece.value.expr);
      Bytes pb = piece.value.bytes();
      bytes.insert(bytes.end(), pb.begin(), pb.end());
      pos = e;
    }
    gap(end);
    return paired_bytes(make_concat(std::move(parts)), std::move(bytes), step);
  }

  bool non_overlapping() const {
    std::size_t last_end = 0;
    bool first = true;
    for (const auto& [off, s] : segments_) {
      if (off != s.offset || s.length() == 0) return false;
      if (!first && off < last_end) return false;
      if (s.value.bytes().size() != s.length()) return false;
      last_end = s.end();
      first = false;
    }
    return true;
  }

  const std::map<std::size_t, Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }

 private:
  static Segment cut(const Segment& s, std::size_t from, std::size_t to) {
    if (from == s.offset && to == s.end()) return s;
    Bytes b = s.value.bytes();
    std::size_t lo = from - s.offset, len = to - from;
    return Segment{from, paired_bytes(make_slice(s.value.expr, lo, len),
                                      Bytes(b.begin() + static_cast<long>(lo), b.begin() + static_cast<long>(lo + len)),
                                      s.value.provenance)};
  }

  std::map<std::size_t, Segment> segments_;
};

inline ConcreteMemoryMap mem_write(ConcreteMemoryMap map, std::size_t offset, std::size_t length, const PairedValue& value) {
  map.write(offset, length, value);
  return map;
}

inline PairedValue mem_read(const ConcreteMemoryMap& map, std::size_t offset, std::size_t length, std::size_t step = 0) {
  return map.read(offset, length, step);
}

/// Versioned bindings: each write creates a new version, reads see the latest.
class VarMap {
 public:
  struct Binding {
    std::string var;
    std::uint32_t version = 0;
    PairedValue value;
  };

  const Binding& assign(const std::string& var, PairedValue value) {
    auto& versions = history_[var];
    versions.push_back(Binding{var, static_cast<std::uint32_t>(versions.size()), std::move(value)});
    return versions.back();
  }

  const Binding* lookup(const std::string& var) const {
    auto it = history_.find(var);
    if (it == history_.end() || it->second.empty()) return nullptr;
    return &it->second.back();
  }

  std::size_t versions(const std::string& var) const {
    auto it = history_.find(var);
    return it == history_.end() ? 0 : it->second.size();
  }

 private:
  std::map<std::string, std::vector<Binding>> history_;
};

}  // namespace txpoc
