// Acceptance runner: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include "support/fake_harness.hpp"
#include "support/fixtures.hpp"
#include "support/properties.hpp"
#include "support/scenarios.hpp"

using namespace txpoc;
using namespace txpoc::testkit;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t line_of(const std::string& text, const std::string& needle) {
  auto p = text.find(needle);
  if (p == std::string::npos) return std::string::npos;
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(p), '\n'));
}

struct Stages {
  Cefg g;
  CallGraph cg;
  AttackScope scope;
  std::vector<LiftedFunction> lifted;
};

Stages stages(const TraceStream& ts, const SelectorDb& db, const LiftOptions& lo = {}) {
  Stages s;
  s.g = build_cefg(ts);
  s.cg = build_call_graph(s.g, ts);
  s.scope = localize_scope(s.cg, ts.initial_recipient);
  s.lifted = lift_scope(extract_instructions(s.scope, s.cg, s.g, ts), ts, db, lo);
  return s;
}

std::string render_all(const std::vector<LiftedFunction>& fns, const SelectorDb& db, bool minimal, bool compress) {
  RenderOptions ro;
  ro.selectors = &db;
  ro.minimal = minimal;
  std::string text;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    auto lines = render_lines(fns[i].body, fns[i].calldata, ro);
    text += (i ? "\n" : "") + function_header(fns[i]) + "\n" + (compress ? render_compressed(compress_lines(lines)) : join_lines(lines));
  }
  return text;
}

Outcome cefg_criterion() {
  Outcome o;
  std::size_t traces = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto ts = parse_trace(random_scenario(seed).trace, TraceFormat::Native);
    auto v = cefg_violation(ts, build_cefg(ts));
    o.require(v.empty(), "seed " + std::to_string(seed) + ": " + v);
    ++traces;
  }
  double worst = 0;
  for (const auto* ts : {&webkey_trace(), &flash_trace()}) {
    auto t0 = std::chrono::steady_clock::now();
    auto g = build_cefg(*ts);
    worst = std::max(worst, ms_since(t0));
    auto v = cefg_violation(*ts, g);
    o.require(v.empty(), v);
    ++traces;
  }
  // repeated invocations of one callee collapse into a single node
  const auto& ts = webkey_trace();
  auto g = build_cefg(ts);
  std::size_t merged = 0;
  for (const auto& n : g.nodes) merged = std::max(merged, n.frames.size());
  o.require(merged == 67, "largest aggregated node holds " + std::to_string(merged) + " frames, expected 67");
  o.require(g.nodes[g.root].ins.size() == 3, "root context split into " + std::to_string(g.nodes[g.root].ins.size()) + " segments");
  o.require(worst < 1000, "build took " + std::to_string(worst) + " ms");
  if (o.pass)
    o.detail = std::to_string(traces) + " traces partitioned, aggregation idempotent, 67 frames in one node, build " +
               std::to_string(static_cast<int>(worst)) + " ms";
  return o;
}

Outcome scope_criterion() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  std::size_t agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto cg = random_call_graph(rng, 50);
    auto m = scope_mismatch(cg, cg.nodes[0].address);
    if (m.empty())
      ++agree;
    else
      o.require(false, "trial " + std::to_string(trial) + ": " + m);
  }
  const auto& ts = webkey_trace();
  auto db = fixture_selectors("webkey");
  auto g = build_cefg(ts);
  auto cg = build_call_graph(g, ts);
  auto scope = localize_scope(cg, ts.initial_recipient);
  std::set<std::string> names;
  for (const auto& [id, _] : scope.functions)
    names.insert(cg.nodes[id].selector ? db.name_of(*cg.nodes[id].selector) : std::string("?"));
  o.require(names == std::set<std::string>{"wheeaappP", "DVMFlashLoanCall"}, "fixture scope differs");
  if (o.pass) o.detail = std::to_string(agree) + "/100 random graphs match brute force; fixture scope {wheeaappP, DVMFlashLoanCall}";
  return o;
}

Outcome decompiler_criterion() {
  Outcome o;
  auto golden = [](const std::string& n) { return read_text(fixtures_dir().parent_path() / "golden" / n); };
  auto wdb = fixture_selectors("webkey"), fdb = fixture_selectors("flash");
  std::size_t writes = 0, bad = 0;
  LiftOptions lo;
  lo.on_mem_write = [&](const ConcreteMemoryMap& m) {
    ++writes;
    bad += !m.non_overlapping();
  };
  auto w = stages(webkey_trace(), wdb, lo);
  auto f = stages(flash_trace(), fdb, lo);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ts = parse_trace(random_scenario(seed).trace, TraceFormat::Native);
    stages(ts, SelectorDb::builtin(), lo);
  }
  o.require(render_all(w.lifted, wdb, false, false) == golden("webkey_full.txt"), "webkey full output differs from golden");
  o.require(render_all(w.lifted, wdb, true, true) == golden("webkey_minimal.txt"), "webkey minimal output differs from golden");
  o.require(render_all(f.lifted, fdb, false, false) == golden("flash_full.txt"), "flash output differs from golden");
  o.require(bad == 0, std::to_string(bad) + " of " + std::to_string(writes) + " writes left overlapping segments");
  auto again = stages(webkey_trace(), wdb);
  o.require(render_all(again.lifted, wdb, false, false) == render_all(w.lifted, wdb, false, false), "non-deterministic output");
  if (o.pass) o.detail = "3 goldens byte-identical, " + std::to_string(writes) + " writes non-overlapping, deterministic";
  return o;
}

Outcome compressor_criterion() {
  Outcome o;
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    auto v = region_roundtrip_violation(random_region(rng));
    if (!v.empty()) {
      o.require(false, "region " + std::to_string(trial) + ": " + v);
      break;
    }
  }
  const auto& ts = webkey_trace();
  auto db = fixture_selectors("webkey");
  auto s = stages(ts, db);
  RenderOptions ro;
  ro.selectors = &db;
  ro.minimal = true;
  auto lines = render_lines(s.lifted.at(1).body, s.lifted.at(1).calldata, ro);
  auto cf = compress_lines(lines);
  o.require(cf.regions.size() == 1 && cf.regions[0].k == 67,
            "callback compressed into " + std::to_string(cf.regions.size()) + " regions");
  std::size_t before = 0, after = 0;
  for (const auto& fn : s.lifted) {
    auto l = render_lines(fn.body, fn.calldata, ro);
    before += join_lines(l).size();
    after += render_compressed(compress_lines(l)).size();
  }
  o.require(before >= 10 * after, "shrink " + std::to_string(before) + " -> " + std::to_string(after));
  if (o.pass)
    o.detail = "1000 regions round-trip, 67 iterations -> 1 template, " + std::to_string(before) + " -> " + std::to_string(after) +
               " bytes (" + std::to_string(before / std::max<std::size_t>(after, 1)) + "x)";
  return o;
}

Outcome fundflow_criterion() {
  Outcome o;
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    auto v = fund_flow_violation(random_transfers(rng, false), true);
    if (!v.empty()) {
      o.require(false, "log set " + std::to_string(trial) + ": " + v);
      break;
    }
  }
  const auto& ts = flash_trace();
  auto flow = extract_fund_flow(ts);
  o.require(!flow.native_transfers.empty(), "no native transfers captured");
  auto b = identify_beneficiary(flow.deltas, ts.sender, ts.initial_recipient);
  Word gain = flow.delta(b, AssetId::native_asset());
  o.require(b == ts.sender && gain == Word(5) * Word(1000000000000000000ull), "flash beneficiary does not gain 5 native");
  if (o.pass)
    o.detail = "500 random log sets conserve and match brute force; " + std::to_string(flow.native_transfers.size()) +
               " native transfers captured, sender +5 ether";
  return o;
}

Outcome budget_criterion() {
  Outcome o;
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 300; ++trial) {
    auto v = adversarial_budget_violation(rng());
    if (!v.empty()) {
      o.require(false, v);
      break;
    }
  }
  auto r = run_pipeline(fixture_input("flash"), fixture_config("flash"));
  o.require(r.label() == "Verifiable" && r.semantic_iterations == 1,
            "flash ended " + r.label() + " after " + std::to_string(r.semantic_iterations) + " semantic iterations");
  if (o.pass) o.detail = "300 adversarial sessions stay within 5/3/3; flash Verifiable after 1 semantic iteration";
  return o;
}

Outcome end_to_end_criterion() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  auto r = run_pipeline(fixture_input("webkey"), fixture_config("webkey"));
  double ms = ms_since(t0);
  o.require(r.label() == "Verifiable", "webkey ended " + r.label() + " " + r.error);
  o.require(ms < 30000, "webkey took " + std::to_string(ms) + " ms");
  auto in = fixture_input("webkey");
  in.no_harness = true;
  auto rd = run_pipeline(in, fixture_config("webkey"));
  o.require(rd.label() == "Readable", "without harness ended " + rd.label());
  const auto& s = rd.sketch;
  o.require(s.find("vm.createSelectFork(\"bsc\", 45302128 - 1);") != std::string::npos, "fork block is not block - 1");
  for (auto k : all_placeholders())
    o.require(count_occurrences(s, placeholder_marker(k)) == 1, std::string(placeholder_marker(k)) + " not present exactly once");
  auto start = line_of(s, "vm.startPrank"), stop = line_of(s, "vm.stopPrank");
  o.require(line_of(s, "before attack:") < start && start < stop && stop < line_of(s, "after attack:") &&
                line_of(s, "after attack:") != std::string::npos,
            "balance logs do not bracket the attack");
  if (o.pass)
    o.detail = "webkey Verifiable in " + std::to_string(static_cast<int>(ms)) +
               " ms; no-harness Readable with fork block-1, bracketing logs, 3 placeholders";
  return o;
}

Outcome taxonomy_criterion() {
  Outcome o;
  std::string seen;
  for (const char* id : {"r1", "r2", "r3", "r4", "r5"}) {
    auto c = failure_case(id);
    auto r = run_pipeline(c.input, c.config);
    o.require(r.label() == c.expect, std::string(id) + " gave " + r.label() + ", expected " + c.expect);
    seen += (seen.empty() ? "" : ", ") + std::string(id) + "=" + r.label();
  }
  if (o.pass) o.detail = seen;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cefg", cefg_criterion},
      {"scope", scope_criterion},
      {"decompiler", decompiler_criterion},
      {"compressor", compressor_criterion},
      {"fundflow", fundflow_criterion},
      {"budgets", budget_criterion},
      {"end-to-end", end_to_end_criterion},
      {"failure-taxonomy", taxonomy_criterion},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
