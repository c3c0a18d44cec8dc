#pragma once

// End-to-end incident pipeline: ingest, cEFG, scope, lift, compress, fund flow, sketch, completion, refinement.

#include <atomic>
#include <chrono>
#include <thread>

#include "txpoc/compressor.hpp"
#include "txpoc/config.hpp"
#include "txpoc/pseudocode.hpp"

namespace txpoc {

struct TxInput {
  std::string name;
  std::string trace_text;
  TraceFormat format = TraceFormat::Native;
  std::optional<Address> attack_contract;
  /// Extra selector signatures, JSON as accepted by SelectorDb::load_json.
  std::string selectors_json;
  bool direct_call = false;
  bool no_harness = false;
};

struct StageTiming {
  std::string stage;
  double ms = 0;
};

struct IncidentReport {
  std::string name;
  std::string tx_hash;
  std::string chain;
  std::uint64_t block = 0;
  std::vector<StageTiming> timings;
  double total_ms = 0;
  PocStatus status = PocStatus::Readable;
  FailureReason reason = FailureReason::None;
  std::string failed_stage;
  std::string error;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::size_t provider_rounds = 0;
  std::size_t syntax_iterations = 0;
  std::size_t semantic_iterations = 0;
  ScopeMetrics scope;
  std::size_t pseudocode_bytes = 0;
  std::size_t compressed_bytes = 0;

  // artifacts
  std::string trace_text;
  json cefg;
  std::string pseudocode;
  json fund_flow;
  json oracle;
  OracleSpec oracle_spec;
  std::vector<std::string> oracle_labels;
  std::vector<std::pair<std::string, Address>> constants;
  std::string sketch;
  json sketch_meta;
  std::string poc;
  json transcript;

  std::string label() const { return status_label(status, reason); }
};

inline json report_to_json(const IncidentReport& r) {
  json timings = json::array();
  for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"ms", t.ms}});
  json j{{"name", r.name},
         {"tx_hash", r.tx_hash},
         {"chain", r.chain},
         {"block", r.block},
         {"status", r.label()},
         {"timings", timings},
         {"total_ms", r.total_ms},
         {"costs", {{"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.completion_tokens}, {"provider_rounds", r.provider_rounds}}},
         {"iterations", {{"syntax", r.syntax_iterations}, {"semantic", r.semantic_iterations}}},
         {"scope",
          {{"total_instructions", r.scope.total_instructions},
           {"scope_instructions", r.scope.scope_instructions},
           {"total_contracts", r.scope.total_contracts},
           {"scope_contracts", r.scope.scope_contracts}}},
         {"pseudocode_bytes", r.pseudocode_bytes},
         {"compressed_bytes", r.compressed_bytes}};
  if (r.status == PocStatus::Failed) {
    j["failure"] = {{"code", failure_code(r.reason)}, {"reason", failure_name(r.reason)}, {"stage", r.failed_stage}, {"error", r.error}};
  }
  if (!r.oracle.is_null()) j["oracle"] = r.oracle;
  return j;
}

/// Stage errors onto the failure taxonomy.
inline FailureReason failure_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Timeout:
    case ErrorCode::LiftTimeout:
    case ErrorCode::ProviderTimeout: return FailureReason::Timeout;
    case ErrorCode::BudgetExhausted: return FailureReason::SyntaxRepairFailure;
    case ErrorCode::HarnessFailure:
    case ErrorCode::RpcUnavailable:
    case ErrorCode::TxNotFound:
    case ErrorCode::TraceUnsupported: return FailureReason::ExecutionFailure;
    default: return FailureReason::IncompleteContext;
  }
}

/// Injected collaborators; null members are built from the configuration.
struct PipelineDeps {
  CompletionProvider* provider = nullptr;
  Harness* harness = nullptr;
};

inline std::unique_ptr<CompletionProvider> make_provider(const PipelineConfig& cfg) {
  if (cfg.provider.kind == "mock") {
    if (cfg.provider.mock_dir.empty()) throw Error(ErrorCode::ConfigError, "mock provider needs provider.mock_dir");
    return std::make_unique<MockProvider>(std::filesystem::path(cfg.provider.mock_dir));
  }
  return std::make_unique<HttpProvider>(cfg.provider.http);
}

namespace detail {

class StageClock {
 public:
  StageClock(IncidentReport& r, std::chrono::steady_clock::time_point deadline) : r_(r), deadline_(deadline) {}

  template <typename F>
  auto run(const std::string& stage, F&& f, bool check_deadline) {
    current_ = stage;
    auto t = std::chrono::steady_clock::now();
    if (check_deadline && t > deadline_) throw Error(ErrorCode::Timeout, "global timeout reached before " + stage);
    struct Record {
      IncidentReport& r;
      std::string stage;
      std::chrono::steady_clock::time_point t;
      ~Record() { r.timings.push_back({stage, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count()}); }
    } rec{r_, stage, t};
    auto check = [&] {
      if (check_deadline && std::chrono::steady_clock::now() > deadline_)
        throw Error(ErrorCode::Timeout, "global timeout reached during " + stage);
    };
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      check();
    } else {
      auto out = f();
      check();
      return out;
    }
  }
  const std::string& current() const { return current_; }
  std::chrono::milliseconds remaining() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(deadline_ - std::chrono::steady_clock::now());
  }

 private:
  IncidentReport& r_;
  std::chrono::steady_clock::time_point deadline_;
  std::string current_;
};

}  // namespace detail

inline IncidentReport run_pipeline(const TxInput& input, const PipelineConfig& cfg, PipelineDeps deps = {}) {
  cfg.validate();
  IncidentReport rep;
  rep.name = input.name;
  rep.trace_text = input.trace_text;
  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(cfg.global_timeout_s));
  detail::StageClock clock(rep, deadline);
  auto finish = [&] {
    rep.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  SelectorDb db = SelectorDb::builtin();
  TokenDb tokens = TokenDb::builtin();
  std::unique_ptr<CompletionProvider> own_provider;
  std::unique_ptr<Harness> own_harness;
  RefinementSession session;
  try {
    if (!cfg.selector_db.empty()) db.load_file(cfg.selector_db);
    if (!cfg.token_db.empty()) tokens.load_file(cfg.token_db);
    if (!input.selectors_json.empty()) db.load_json(json::parse(input.selectors_json));

    // static stages, bounded by the global timeout
    auto ts = clock.run("ingest", [&] { return parse_trace(input.trace_text, input.format); }, true);
    rep.tx_hash = to_hex(ts.tx_hash);
    auto meta = meta_from_trace(ts);
    rep.chain = meta.chain;
    rep.block = meta.block;
    auto g = clock.run("cefg", [&] { return build_cefg(ts); }, true);
    rep.cefg = cefg_to_json(g, ts);
    auto cg = build_call_graph(g, ts);
    Address a0 = input.attack_contract.value_or(ts.initial_recipient);
    AttackScope scope = clock.run("scope", [&] {
      try {
        return localize_scope(cg, a0);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::EmptyScope && input.direct_call) return AttackScope{};
        throw;
      }
    }, true);
    const bool direct = input.direct_call && scope.contracts.empty();
    std::vector<LiftedFunction> lifted;
    clock.run("lift", [&] {
      auto fts = extract_instructions(scope, cg, g, ts);
      LiftOptions lo;
      lo.budget = std::min(std::chrono::milliseconds(static_cast<long long>(cfg.lift_budget_s * 1000)), clock.remaining());
      if (lo.budget.count() <= 0) throw Error(ErrorCode::Timeout, "no time left for lifting");
      lifted = lift_scope(fts, ts, db, lo);
      rep.scope = scope_metrics(scope, cg, ts, fts);
    }, true);
    clock.run("compress", [&] {
      RenderOptions ro;
      ro.selectors = &db;
      ro.minimal = true;
      std::string text;
      for (std::size_t i = 0; i < lifted.size(); ++i) {
        auto lines = render_lines(lifted[i].body, lifted[i].calldata, ro);
        auto cf = compress_lines(lines);
        auto body = render_compressed(cf);
        rep.pseudocode_bytes += join_lines(lines).size();
        rep.compressed_bytes += body.size();
        text += (i ? "\n" : "") + function_header(lifted[i]) + "\n" + body;
      }
      rep.pseudocode = text;
    }, true);
    OracleSpec oracle = clock.run("fundflow", [&] {
      auto flow = extract_fund_flow(ts);
      rep.fund_flow = fund_flow_to_json(flow, &tokens);
      AssetRanking ranking;
      ranking.order = cfg.asset_priority;
      ranking.tokens = tokens;
      Address attack = direct ? ts.sender : a0;
      auto b = identify_beneficiary(flow.deltas, ts.sender, attack, ranking);
      OracleOptions oo;
      oo.funding_floor = cfg.funding_floor;
      return synthesize_oracles(flow, b, ts.sender, oo);
    }, true);
    rep.oracle = oracle_to_json(oracle);
    PocSketch sketch = clock.run("sketch", [&] {
      SketchOptions so;
      so.direct_call = direct;
      so.selectors = &db;
      so.tokens = &tokens;
      return build_sketch({ts, scope}, lifted, oracle, meta, so);
    }, true);
    rep.sketch = sketch.source_text;
    rep.oracle_spec = oracle;
    rep.oracle_labels = sketch.oracle_labels;
    rep.constants = sketch.constants;
    rep.sketch_meta = sketch_to_json(sketch);

    // provider and harness stages
    CompletionProvider* provider = deps.provider;
    if (!provider) {
      own_provider = make_provider(cfg);
      provider = own_provider.get();
    }
    session.poc_source = clock.run("complete", [&] { return complete_sketch(sketch, rep.pseudocode, *provider, &session); }, false);
    const bool harness_on = !input.no_harness && cfg.harness.enabled;
    if (harness_on) {
      Harness* harness = deps.harness;
      if (!harness) {
        ForgeConfig fc = cfg.harness.forge;
        for (const auto& [n, a] : sketch.constants) fc.address_aliases[n] = a.hex();
        own_harness = std::make_unique<ForgeHarness>(fc);
        harness = own_harness.get();
      }
      RefineContext ctx;
      ctx.oracle = oracle;
      ctx.labels = sketch.oracle_labels;
      ctx.ground = ground_calls(ts, db, ground_alias(ts, sketch.constants));
      ctx.window = cfg.window;
      ctx.budgets = cfg.budgets;
      clock.run("refine", [&] { refine(session, *harness, *provider, ctx); }, false);
      if (session.status == PocStatus::Failed) rep.failed_stage = "refine";
    }
    rep.status = session.status;
    rep.reason = session.reason;
  } catch (const Error& e) {
    rep.status = PocStatus::Failed;
    rep.reason = failure_for(e.code());
    rep.failed_stage = clock.current();
    rep.error = e.what();
  } catch (const json::exception& e) {
    rep.status = PocStatus::Failed;
    rep.reason = FailureReason::IncompleteContext;
    rep.failed_stage = clock.current();
    rep.error = e.what();
  }
  rep.poc = session.poc_source;
  rep.transcript = transcript_to_json(session);
  rep.prompt_tokens = session.prompt_tokens;
  rep.completion_tokens = session.completion_tokens;
  rep.provider_rounds = session.provider_rounds;
  rep.syntax_iterations = session.syntax_iterations_used;
  rep.semantic_iterations = session.semantic_iterations_used;
  return finish();
}

/// out/<chain>/<txhash>/ with trace, cefg.json, pseudocode.txt, sketch.sol, poc.sol, report.json, transcript.json.
inline std::filesystem::path write_artifacts(const IncidentReport& r, const std::filesystem::path& out_root) {
  auto dir = out_root / (r.chain.empty() ? "unknown" : r.chain) / (!r.tx_hash.empty() ? r.tx_hash : !r.name.empty() ? r.name : std::string("incident"));
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    if (!text.empty()) std::ofstream(dir / name, std::ios::binary) << text;
  };
  put("trace.jsonl", r.trace_text);
  if (!r.cefg.is_null()) put("cefg.json", r.cefg.dump(1));
  put("pseudocode.txt", r.pseudocode);
  if (!r.fund_flow.is_null()) put("fundflow.json", r.fund_flow.dump(1));
  put("sketch.sol", r.sketch);
  put("poc.sol", r.poc);
  put("report.json", report_to_json(r).dump(1) + "\n");
  put("transcript.json", r.transcript.dump(1) + "\n");
  return dir;
}

/// Runs incidents on at most `workers` threads; each incident pipeline stays sequential.
inline std::vector<IncidentReport> run_batch(const std::vector<TxInput>& inputs, const PipelineConfig& cfg, std::size_t workers,
                                             const std::function<PipelineDeps()>& make_deps = {}) {
  std::vector<IncidentReport> out(inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < inputs.size();) {
      PipelineDeps deps = make_deps ? make_deps() : PipelineDeps{};
      out[i] = run_pipeline(inputs[i], cfg, deps);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::max<std::size_t>(1, std::min(workers, inputs.size())); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace txpoc
