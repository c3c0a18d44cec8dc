#pragma once

// Hierarchical call graph over the cEFG and attack-scope localization.

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "txpoc/cefg.hpp"

namespace txpoc {

struct CallGraphNode {
  std::uint32_t id = 0;
  Address address;
  Address context_address;
  std::uint32_t depth = 1;
  CalldataRef input;
  std::optional<std::uint32_t> selector;
  std::vector<std::pair<std::uint8_t, std::uint32_t>> children;  ///< (edge call type, child id)
  std::vector<std::uint32_t> cefg_nodes;
  std::vector<std::uint8_t> entered_via;  ///< call types this context was entered with

  auto key() const { return std::make_tuple(address, depth, input.digest, input.length); }
  bool operator==(const CallGraphNode&) const = default;
};

struct CallGraph {
  std::vector<CallGraphNode> nodes;
  std::uint32_t root = 0;
  bool operator==(const CallGraph&) const = default;
};

inline std::optional<std::uint32_t> selector_from_calldata(const Bytes& data) {
  if (data.size() < 4) return std::nullopt;
  return static_cast<std::uint32_t>(data[0]) << 24 | static_cast<std::uint32_t>(data[1]) << 16 |
         static_cast<std::uint32_t>(data[2]) << 8 | data[3];
}

inline CallGraph build_call_graph(const Cefg& cefg, const TraceStream& ts) {
  CallGraph cg;
  if (cefg.empty()) return cg;
  std::map<decltype(CallGraphNode{}.key()), std::uint32_t> index;
  std::vector<std::uint32_t> cg_of_cefg(cefg.nodes.size(), 0);
  // Visit cEFG nodes in order of first execution so ids follow the trace.
  std::vector<std::uint32_t> order(cefg.nodes.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return cefg.nodes[a].frames.front() < cefg.nodes[b].frames.front();
  });
  for (std::uint32_t cid : order) {
    const CefgNode& n = cefg.nodes[cid];
    CallGraphNode probe;
    probe.address = n.address;
    probe.depth = n.depth;
    probe.input = n.input;
    auto [it, inserted] = index.emplace(probe.key(), static_cast<std::uint32_t>(cg.nodes.size()));
    if (inserted) {
      probe.id = it->second;
      probe.context_address = n.context_address;
      probe.selector = selector_from_calldata(ts.calldata(n.input));
      cg.nodes.push_back(std::move(probe));
    }
    auto& node = cg.nodes[it->second];
    node.cefg_nodes.push_back(cid);
    if (std::find(node.entered_via.begin(), node.entered_via.end(), n.call_type) == node.entered_via.end())
      node.entered_via.push_back(n.call_type);
    cg_of_cefg[cid] = it->second;
  }
  for (const auto& e : cefg.edges) {
    if (!opens_context(e.opcode)) continue;
    auto& parent = cg.nodes[cg_of_cefg[e.from]];
    std::pair<std::uint8_t, std::uint32_t> child{e.opcode, cg_of_cefg[e.to]};
    if (std::find(parent.children.begin(), parent.children.end(), child) == parent.children.end())
      parent.children.push_back(child);
  }
  cg.root = cg_of_cefg[cefg.root];
  return cg;
}

enum class ScopeRule { DirectInvocation, DynamicInstantiation, ContextDelegation };

inline std::string_view scope_rule_name(ScopeRule r) {
  switch (r) {
    case ScopeRule::DirectInvocation: return "DirectInvocation";
    case ScopeRule::DynamicInstantiation: return "DynamicInstantiation";
    case ScopeRule::ContextDelegation: return "ContextDelegation";
  }
  return "DirectInvocation";
}

struct AttackScope {
  std::map<Address, ScopeRule> contracts;
  std::map<std::uint32_t, ScopeRule> functions;  ///< call-graph node id -> rule that admitted it

  bool contains_function(std::uint32_t id) const { return functions.count(id) != 0; }
  bool contains_contract(const Address& a) const { return contracts.count(a) != 0; }
  bool operator==(const AttackScope&) const = default;
};

inline bool is_delegating(std::uint8_t call_type) { return call_type == op::DELEGATECALL || call_type == op::CALLCODE; }

/// Least fixed point of the three expansion rules, computed with a worklist from a0's functions.
inline AttackScope localize_scope(const CallGraph& cg, const Address& a0) {
  AttackScope scope;
  std::map<Address, std::vector<std::uint32_t>> by_address;
  for (const auto& n : cg.nodes) by_address[n.address].push_back(n.id);

  std::deque<std::uint32_t> work;
  auto admit_function = [&](std::uint32_t id, ScopeRule rule) {
    if (scope.functions.emplace(id, rule).second) work.push_back(id);
  };
  auto admit_contract = [&](const Address& a, ScopeRule rule) {
    if (!scope.contracts.emplace(a, rule).second) return;
    if (auto it = by_address.find(a); it != by_address.end())
      for (auto id : it->second) admit_function(id, rule);
  };

  if (by_address.find(a0) == by_address.end())
    throw Error(ErrorCode::EmptyScope, "initial recipient " + a0.hex() + " never executes");
  admit_contract(a0, ScopeRule::DirectInvocation);
  while (!work.empty()) {
    auto id = work.front();
    work.pop_front();
    for (const auto& [call_type, child] : cg.nodes[id].children) {
      if (is_create(call_type))
        admit_contract(cg.nodes[child].address, ScopeRule::DynamicInstantiation);
      else if (is_delegating(call_type))
        admit_function(child, ScopeRule::ContextDelegation);
    }
  }
  return scope;
}

struct FunctionTrace {
  std::uint32_t owner = 0;  ///< call-graph node id
  Address address;
  Address context_address;
  std::uint32_t depth = 1;
  std::optional<std::uint32_t> selector;
  ScopeRule rule = ScopeRule::DirectInvocation;
  std::vector<InstructionBlock> blocks;
  std::vector<std::uint64_t> pc_sequence;
  std::vector<std::pair<std::size_t, std::vector<RecordedValue>>> bound_values;

  std::size_t instruction_count() const { return pc_sequence.size(); }
};

/// One FunctionTrace per in-scope function, ordered by first execution.
inline std::vector<FunctionTrace> extract_instructions(const AttackScope& scope, const CallGraph& cg, const Cefg& cefg,
                                                       const TraceStream& ts) {
  std::vector<FunctionTrace> out;
  for (const auto& [id, rule] : scope.functions) {
    const auto& node = cg.nodes[id];
    FunctionTrace ft;
    ft.owner = id;
    ft.address = node.address;
    ft.context_address = node.context_address;
    ft.depth = node.depth;
    ft.selector = node.selector;
    ft.rule = rule;
    for (auto cid : node.cefg_nodes) {
      const auto& cn = cefg.nodes[cid];
      ft.blocks.insert(ft.blocks.end(), cn.ins.begin(), cn.ins.end());
    }
    std::sort(ft.blocks.begin(), ft.blocks.end(),
              [](const InstructionBlock& a, const InstructionBlock& b) { return a.begin < b.begin; });
    for (const auto& b : ft.blocks) {
      for (std::size_t i = b.begin; i < b.end; ++i) {
        const auto& rs = ts.steps[i];
        ft.pc_sequence.push_back(rs.step.pc);
        if (rs.category != Category::None) ft.bound_values.emplace_back(i, rs.recorded);
      }
    }
    out.push_back(std::move(ft));
  }
  auto first = [](const FunctionTrace& f) {
    return f.blocks.empty() ? std::numeric_limits<std::size_t>::max() : f.blocks.front().begin;
  };
  std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) { return first(a) < first(b); });
  return out;
}

struct ScopeMetrics {
  std::size_t total_instructions = 0;
  std::size_t scope_instructions = 0;
  std::size_t total_contracts = 0;
  std::size_t scope_contracts = 0;
  std::size_t total_calls = 0;
  std::size_t scope_calls = 0;

  double instruction_reduction() const {
    return scope_instructions == 0 ? 0.0 : static_cast<double>(total_instructions) / static_cast<double>(scope_instructions);
  }
};

inline ScopeMetrics scope_metrics(const AttackScope& scope, const CallGraph& cg, const TraceStream& ts,
                                  const std::vector<FunctionTrace>& fts) {
  ScopeMetrics m;
  m.total_instructions = ts.steps.size();
  for (const auto& ft : fts) m.scope_instructions += ft.instruction_count();
  std::set<Address> all;
  for (const auto& f : ts.frames) all.insert(f.code_address);
  m.total_contracts = all.size();
  std::set<Address> in_scope;
  for (const auto& [id, _] : scope.functions) in_scope.insert(cg.nodes[id].address);
  m.scope_contracts = in_scope.size();
  for (const auto& rs : ts.steps) {
    if (!rs.step.known || !opens_context(rs.step.opcode)) continue;
    ++m.total_calls;
  }
  for (const auto& ft : fts)
    for (const auto& b : ft.blocks)
      for (std::size_t i = b.begin; i < b.end; ++i)
        if (ts.steps[i].step.known && opens_context(ts.steps[i].step.opcode)) ++m.scope_calls;
  return m;
}

}  // namespace txpoc
