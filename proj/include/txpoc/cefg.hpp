#pragma once

// Contract-centric execution flow graph: one node per execution context,
// aggregated by <depth, address, call_type, input>.

#include <map>
#include <tuple>
#include <vector>

#include "txpoc/trace.hpp"

namespace txpoc {

/// A maximal run of consecutive steps executed in one frame; [begin, end) indexes TraceStream::steps.
struct InstructionBlock {
  std::uint32_t frame = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  bool rolled_back = false;

  std::size_t size() const { return end - begin; }
  bool operator==(const InstructionBlock&) const = default;
};

struct CefgNode {
  std::uint32_t id = 0;
  std::uint32_t depth = 1;
  Address address;          ///< contract whose code executes
  Address context_address;  ///< storage context of the first aggregated frame
  std::uint8_t call_type = op::CALL;
  CalldataRef input;
  std::vector<InstructionBlock> ins;
  std::vector<std::uint32_t> frames;  ///< frames aggregated into this node, in execution order
  bool reverted = false;              ///< every aggregated frame was rolled back

  auto key() const { return std::make_tuple(depth, address, call_type, input.digest, input.length); }
  bool operator==(const CefgNode&) const = default;
};

struct CefgEdge {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  std::uint8_t opcode = op::CALL;
  std::size_t step_index = 0;  ///< boundary step: the call step, or the halting step of the callee
  bool operator==(const CefgEdge&) const = default;
};

struct Cefg {
  std::vector<CefgNode> nodes;
  std::vector<CefgEdge> edges;
  std::uint32_t root = 0;
  std::vector<std::uint32_t> node_of_frame;

  bool empty() const { return nodes.empty(); }
  bool operator==(const Cefg&) const = default;
};

/// Merges nodes sharing <depth, address, call_type, input>. Returns the old-id -> new-id map in `remap`.
inline std::vector<CefgNode> aggregate(const std::vector<CefgNode>& nodes, std::vector<std::uint32_t>* remap = nullptr) {
  std::vector<CefgNode> out;
  std::map<decltype(nodes.front().key()), std::uint32_t> index;
  if (remap) remap->assign(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const CefgNode& n = nodes[i];
    auto [it, inserted] = index.emplace(n.key(), static_cast<std::uint32_t>(out.size()));
    if (inserted) {
      CefgNode copy = n;
      copy.id = it->second;
      out.push_back(std::move(copy));
    } else {
      CefgNode& target = out[it->second];
      target.ins.insert(target.ins.end(), n.ins.begin(), n.ins.end());
      target.frames.insert(target.frames.end(), n.frames.begin(), n.frames.end());
      target.reverted = target.reverted && n.reverted;
    }
    if (remap) (*remap)[i] = it->second;
  }
  for (auto& n : out) {
    std::stable_sort(n.ins.begin(), n.ins.end(),
                     [](const InstructionBlock& a, const InstructionBlock& b) { return a.begin < b.begin; });
    std::stable_sort(n.frames.begin(), n.frames.end());
  }
  return out;
}

inline std::uint8_t return_transition(const Frame& f, const TraceStream& ts) {
  const auto& last = ts.steps[f.last_step].step;
  if (f.status == FrameStatus::Returned) return op::RETURN;
  if (f.status == FrameStatus::Stopped) return op::STOP;
  if (f.status == FrameStatus::SelfDestructed) return op::SELFDESTRUCT;
  (void)last;
  return op::REVERT;
}

inline Cefg build_cefg(const TraceStream& ts) {
  Cefg g;
  if (ts.steps.empty()) {
    if (!ts.frames.empty()) throw Error(ErrorCode::MalformedTrace, "frames without steps");
    return g;
  }
  // One provisional node per frame.
  std::vector<CefgNode> per_frame;
  per_frame.reserve(ts.frames.size());
  for (const Frame& f : ts.frames) {
    CefgNode n;
    n.id = f.id;
    n.depth = f.depth;
    n.address = f.code_address;
    n.context_address = f.context_address;
    n.call_type = f.call_type;
    n.input = f.input;
    n.frames = {f.id};
    n.reverted = f.rolled_back;
    per_frame.push_back(std::move(n));
  }
  struct RawEdge {
    std::uint32_t from_frame, to_frame;
    std::uint8_t opcode;
    std::size_t step;
  };
  std::vector<RawEdge> raw_edges;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ts.steps.size(); ++i) {
    if (i < ts.steps.size() && ts.steps[i].frame == ts.steps[begin].frame) continue;
    std::uint32_t fid = ts.steps[begin].frame;
    if (fid >= ts.frames.size()) throw Error(ErrorCode::MalformedTrace, "step references unknown frame");
    const Frame& f = ts.frames[fid];
    if (f.call_type != op::STATICCALL) per_frame[fid].ins.push_back({fid, begin, i, f.rolled_back});
    if (i < ts.steps.size()) {
      std::uint32_t next = ts.steps[i].frame;
      const Frame& nf = ts.frames[next];
      if (nf.parent && *nf.parent == fid && nf.first_step == i) {
        raw_edges.push_back({fid, next, nf.call_type, i - 1});
      } else if (f.parent && *f.parent == next) {
        raw_edges.push_back({fid, next, return_transition(f, ts), i - 1});
      } else {
        throw Error(ErrorCode::DepthDiscontinuity, "context switch between unrelated frames at step " + std::to_string(i));
      }
    }
    begin = i;
  }
  std::vector<std::uint32_t> remap;
  g.nodes = aggregate(per_frame, &remap);
  g.node_of_frame = remap;
  g.root = remap[0];
  for (const auto& e : raw_edges) g.edges.push_back({remap[e.from_frame], remap[e.to_frame], e.opcode, e.step});
  return g;
}

inline json cefg_to_json(const Cefg& g, const TraceStream& ts) {
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json blocks = json::array();
    for (const auto& b : n.ins)
      blocks.push_back({{"frame", b.frame}, {"begin", b.begin}, {"end", b.end}, {"rolled_back", b.rolled_back}});
    const Bytes& in = ts.calldata(n.input);
    std::string selector = in.size() >= 4 ? to_hex(Bytes(in.begin(), in.begin() + 4)) : "";
    nodes.push_back({{"id", n.id},
                     {"depth", n.depth},
                     {"address", n.address.hex()},
                     {"context", n.context_address.hex()},
                     {"call_type", opcode_name(n.call_type)},
                     {"input_digest", to_hex(n.input.digest)},
                     {"input_length", n.input.length},
                     {"selector", selector},
                     {"reverted", n.reverted},
                     {"frames", n.frames},
                     {"ins", blocks}});
  }
  json edges = json::array();
  for (const auto& e : g.edges)
    edges.push_back({{"from", e.from}, {"to", e.to}, {"opcode", opcode_name(e.opcode)}, {"step", e.step_index}});
  return {{"root", g.root}, {"nodes", nodes}, {"edges", edges}};
}

}  // namespace txpoc
