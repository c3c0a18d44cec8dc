// txpoc: attack trace -> pseudocode, fund-flow oracles, PoC sketch and refined PoC.

#include <CLI11.hpp>
#include <iostream>

#include "txpoc/pipeline.hpp"

using namespace txpoc;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  if (auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream(path, std::ios::binary) << text;
}

TraceFormat detect_format(const std::string& text, const std::string& name) {
  if (name != "auto") return parse_format_name(name);
  auto p = text.find_first_not_of(" \t\r\n");
  if (p != std::string::npos && text[p] == '{' && text.find("\"structLogs\"") != std::string::npos &&
      text.find('\n', p) > text.find("\"structLogs\""))
    return TraceFormat::Geth;
  return TraceFormat::Native;
}

struct Common {
  std::string trace;
  std::string format = "auto";
  std::string config;
  std::string selectors;
  std::string tokens;
  std::string attack;
  std::string out;
};

void add_trace_opts(CLI::App* c, Common& o) {
  c->add_option("--trace", o.trace, "Trace file (native line-JSON or geth structLogs JSON)")->required();
  c->add_option("--format", o.format, "native, geth or auto")->capture_default_str();
  c->add_option("--selectors", o.selectors, "Selector database JSON");
  c->add_option("--tokens", o.tokens, "Token database JSON");
  c->add_option("--attack", o.attack, "Attack contract address (defaults to the transaction recipient)");
  c->add_option("-o,--out", o.out, "Output file (stdout when omitted)");
}

void add_config_opt(CLI::App* c, Common& o) { c->add_option("-c,--config", o.config, "Pipeline configuration file"); }

PipelineConfig load(const Common& o) { return o.config.empty() ? PipelineConfig{} : load_config(o.config); }

struct Loaded {
  TraceStream ts;
  SelectorDb db = SelectorDb::builtin();
  TokenDb tokens = TokenDb::builtin();
  PipelineConfig cfg;
  Address a0;
};

Loaded load_trace(const Common& o) {
  Loaded l;
  l.cfg = load(o);
  if (!l.cfg.selector_db.empty()) l.db.load_file(l.cfg.selector_db);
  if (!l.cfg.token_db.empty()) l.tokens.load_file(l.cfg.token_db);
  if (!o.selectors.empty()) l.db.load_file(o.selectors);
  if (!o.tokens.empty()) l.tokens.load_file(o.tokens);
  auto text = read_file(o.trace);
  l.ts = parse_trace(text, detect_format(text, o.format));
  l.a0 = o.attack.empty() ? l.ts.initial_recipient : Address::from_hex(o.attack);
  return l;
}

json scope_json(const AttackScope& scope, const CallGraph& cg, const Cefg& g, const TraceStream& ts, const SelectorDb& db) {
  json contracts = json::array();
  for (const auto& [a, rule] : scope.contracts) contracts.push_back({{"address", a.hex()}, {"rule", scope_rule_name(rule)}});
  auto fts = extract_instructions(scope, cg, g, ts);
  json fns = json::array();
  for (const auto& ft : fts) {
    json f{{"contract", ft.address.hex()}, {"rule", scope_rule_name(ft.rule)}, {"blocks", ft.blocks.size()}};
    if (ft.selector) {
      f["selector"] = selector_hex(*ft.selector);
      f["name"] = db.name_of(*ft.selector);
    } else {
      f["name"] = "constructor";
    }
    fns.push_back(f);
  }
  auto m = scope_metrics(scope, cg, ts, fts);
  return json{{"contracts", contracts},
              {"functions", fns},
              {"metrics",
               {{"total_instructions", m.total_instructions},
                {"scope_instructions", m.scope_instructions},
                {"total_contracts", m.total_contracts},
                {"scope_contracts", m.scope_contracts}}}};
}

std::string lifted_text(const std::vector<LiftedFunction>& lifted, const SelectorDb& db, bool minimal, bool compress) {
  RenderOptions ro;
  ro.selectors = &db;
  ro.minimal = minimal;
  std::string text;
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    auto lines = render_lines(lifted[i].body, lifted[i].calldata, ro);
    text += (i ? "\n" : "") + function_header(lifted[i]) + "\n" +
            (compress ? render_compressed(compress_lines(lines)) : join_lines(lines));
  }
  return text;
}

int print_report(const IncidentReport& r, const std::string& out_dir) {
  auto dir = write_artifacts(r, out_dir);
  std::string id = r.name;
  if (!r.tx_hash.empty()) id += (id.empty() ? "" : " ") + r.tx_hash;
  std::cout << (id.empty() ? "incident" : id) << " " << r.label() << " (" << static_cast<long>(r.total_ms)
            << " ms) -> " << dir.string() << "\n";
  if (!r.error.empty()) std::cout << "  " << r.failed_stage << ": " << r.error << "\n";
  return r.status == PocStatus::Failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"txpoc: reproduce exploit transactions as Foundry PoCs"};
  app.require_subcommand(1);
  Common o;

  std::string tx, rpc_url, chain, cache_dir;
  auto* fetch = app.add_subcommand("fetch", "Fetch a transaction trace over JSON-RPC");
  fetch->add_option("--tx", tx, "Transaction hash")->required();
  fetch->add_option("--rpc", rpc_url, "Node URL (defaults to rpc.url from the config)");
  fetch->add_option("--chain", chain, "Chain name used for the cache key");
  fetch->add_option("--cache-dir", cache_dir, "Cache directory");
  fetch->add_option("-o,--out", o.out, "Output file");
  add_config_opt(fetch, o);

  bool native_out = false;
  auto* ingest = app.add_subcommand("ingest", "Parse a trace and print its summary or native form");
  add_trace_opts(ingest, o);
  ingest->add_flag("--native", native_out, "Write the trace in native line-JSON form");

  auto* cefg = app.add_subcommand("cefg", "Build the contract-centric execution flow graph");
  add_trace_opts(cefg, o);

  auto* scope = app.add_subcommand("scope", "Localize the attack scope");
  add_trace_opts(scope, o);
  add_config_opt(scope, o);

  bool full = false, no_compress = false;
  auto* lift = app.add_subcommand("lift", "Lift in-scope functions to pseudocode");
  add_trace_opts(lift, o);
  add_config_opt(lift, o);
  lift->add_flag("--full", full, "Keep constant guards");
  lift->add_flag("--no-compress", no_compress, "Do not summarize loops");

  auto* fundflow = app.add_subcommand("fundflow", "Balance deltas, beneficiary and profit oracle");
  add_trace_opts(fundflow, o);
  add_config_opt(fundflow, o);

  bool direct_call = false, json_meta = false;
  auto* sketch = app.add_subcommand("sketch", "Render the PoC sketch");
  add_trace_opts(sketch, o);
  add_config_opt(sketch, o);
  sketch->add_flag("--direct-call", direct_call, "Call victim functions from the test body when the scope is empty");
  sketch->add_flag("--json", json_meta, "Print sketch metadata as JSON");

  auto* synth = app.add_subcommand("synth", "Sketch and complete the placeholders with the provider");
  add_trace_opts(synth, o);
  add_config_opt(synth, o);
  synth->add_flag("--direct-call", direct_call, "Call victim functions from the test body when the scope is empty");

  std::string poc_file;
  auto* validate = app.add_subcommand("validate", "Build, run and check a PoC against the trace's oracle");
  add_trace_opts(validate, o);
  add_config_opt(validate, o);
  validate->add_option("--poc", poc_file, "PoC Solidity file")->required();

  bool no_harness = false;
  std::string out_dir, name;
  auto* run = app.add_subcommand("run", "End-to-end pipeline for one transaction");
  run->add_option("--trace", o.trace, "Trace file");
  run->add_option("--tx", tx, "Transaction hash to fetch when no trace file is given");
  run->add_option("--format", o.format, "native, geth or auto")->capture_default_str();
  run->add_option("--selectors", o.selectors, "Selector database JSON merged for this incident");
  run->add_option("--attack", o.attack, "Attack contract address");
  run->add_option("--name", name, "Incident name");
  run->add_option("--out-dir", out_dir, "Artifact root (default from config)");
  run->add_flag("--no-harness", no_harness, "Stop after completion");
  run->add_flag("--direct-call", direct_call, "Call victim functions from the test body when the scope is empty");
  add_config_opt(run, o);

  std::string manifest;
  std::size_t workers = 0;
  auto* batch = app.add_subcommand("batch", "Run a manifest of incidents concurrently");
  batch->add_option("--manifest", manifest, "JSON array of {trace, format, name, attack, selectors, direct_call}")->required();
  batch->add_option("--workers", workers, "Worker cap (default from config)");
  batch->add_option("--out-dir", out_dir, "Artifact root (default from config)");
  batch->add_flag("--no-harness", no_harness, "Stop after completion");
  add_config_opt(batch, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fetch) {
      auto cfg = load(o);
      EndpointConfig ep = cfg.rpc;
      if (!rpc_url.empty()) ep.url = rpc_url;
      if (!chain.empty()) ep.chain = chain;
      if (!cache_dir.empty()) ep.cache_dir = cache_dir;
      write_out(o.out, fetch_trace(tx, ep));
      return 0;
    }
    if (*ingest) {
      auto l = load_trace(o);
      if (native_out) {
        write_out(o.out, write_native(l.ts));
        return 0;
      }
      std::size_t frames = l.ts.frames.size(), logs = l.ts.logs.size();
      json j{{"tx_hash", to_hex(l.ts.tx_hash)},
             {"sender", l.ts.sender.hex()},
             {"recipient", l.ts.initial_recipient.hex()},
             {"chain_id", l.ts.chain_id},
             {"block", l.ts.block_number},
             {"steps", l.ts.steps.size()},
             {"frames", frames},
             {"logs", logs},
             {"value_transfers", l.ts.value_transfers.size()}};
      write_out(o.out, j.dump(2));
      return 0;
    }
    if (*cefg) {
      auto l = load_trace(o);
      write_out(o.out, cefg_to_json(build_cefg(l.ts), l.ts).dump(1));
      return 0;
    }
    if (*scope) {
      auto l = load_trace(o);
      auto g = build_cefg(l.ts);
      auto cg = build_call_graph(g, l.ts);
      write_out(o.out, scope_json(localize_scope(cg, l.a0), cg, g, l.ts, l.db).dump(2));
      return 0;
    }
    if (*lift) {
      auto l = load_trace(o);
      auto g = build_cefg(l.ts);
      auto cg = build_call_graph(g, l.ts);
      auto fts = extract_instructions(localize_scope(cg, l.a0), cg, g, l.ts);
      LiftOptions lo;
      lo.budget = std::chrono::milliseconds(static_cast<long long>(l.cfg.lift_budget_s * 1000));
      write_out(o.out, lifted_text(lift_scope(fts, l.ts, l.db, lo), l.db, !full, !no_compress));
      return 0;
    }
    if (*fundflow) {
      auto l = load_trace(o);
      auto flow = extract_fund_flow(l.ts);
      AssetRanking ranking;
      ranking.order = l.cfg.asset_priority;
      ranking.tokens = l.tokens;
      auto b = identify_beneficiary(flow.deltas, l.ts.sender, l.a0, ranking);
      OracleOptions oo;
      oo.funding_floor = l.cfg.funding_floor;
      json j{{"fund_flow", fund_flow_to_json(flow, &l.tokens)},
             {"beneficiary", b.hex()},
             {"oracle", oracle_to_json(synthesize_oracles(flow, b, l.ts.sender, oo))}};
      write_out(o.out, j.dump(2));
      return 0;
    }
    if (*sketch || *synth || *validate) {
      auto l = load_trace(o);
      TxInput in;
      in.trace_text = read_file(o.trace);
      in.format = detect_format(in.trace_text, o.format);
      if (!o.attack.empty()) in.attack_contract = l.a0;
      if (!o.selectors.empty()) in.selectors_json = read_file(o.selectors);
      in.direct_call = direct_call;
      in.no_harness = true;
      PipelineConfig cfg = l.cfg;
      if (!o.tokens.empty()) cfg.token_db = o.tokens;
      if (*sketch) {
        // static stages only: a provider that always refuses stops the pipeline after the sketch
        MockProvider refuse([](const CompletionRequest&) -> std::string { return "<<REFUSE>>"; });
        auto r = run_pipeline(in, cfg, {&refuse, nullptr});
        if (r.sketch.empty()) throw Error(ErrorCode::MissingMeta, r.failed_stage + ": " + r.error);
        write_out(o.out, json_meta ? r.sketch_meta.dump(2) : r.sketch);
        return 0;
      }
      if (*synth) {
        auto r = run_pipeline(in, cfg);
        if (r.status == PocStatus::Failed) {
          std::cerr << r.label() << " at " << r.failed_stage << ": " << r.error << "\n";
          return 2;
        }
        write_out(o.out, r.poc);
        return 0;
      }
      // validate
      MockProvider refuse([](const CompletionRequest&) -> std::string { return "<<REFUSE>>"; });
      auto r = run_pipeline(in, cfg, {&refuse, nullptr});
      if (r.sketch.empty()) throw Error(ErrorCode::MissingMeta, r.failed_stage + ": " + r.error);
      ForgeConfig fc = cfg.harness.forge;
      for (const auto& [n, a] : r.constants) fc.address_aliases[n] = a.hex();
      ForgeHarness h(fc);
      auto src = read_file(poc_file);
      auto b = h.build(src);
      json j{{"compiled", b.ok}, {"diagnostics", b.diagnostics}};
      bool ok = false;
      if (b.ok) {
        auto run_res = h.run(src);
        ok = validate_profit(run_res, r.oracle_spec, r.oracle_labels);
        json calls = json::array();
        for (const auto& c : run_res.calls) calls.push_back(call_summary_to_json(c));
        j["executed"] = run_res.executed;
        j["test_passed"] = run_res.test_passed;
        j["profit"] = ok;
        j["calls"] = calls;
      }
      j["status"] = ok ? "Verifiable" : b.ok ? "Runnable" : "Readable";
      write_out(o.out, j.dump(2));
      return ok ? 0 : 1;
    }
    if (*run) {
      auto cfg = load(o);
      TxInput in;
      in.name = name;
      if (!o.trace.empty()) {
        in.trace_text = read_file(o.trace);
      } else if (!tx.empty()) {
        in.trace_text = fetch_trace(tx, cfg.rpc);
      } else {
        throw Error(ErrorCode::ConfigError, "run needs --trace or --tx");
      }
      in.format = detect_format(in.trace_text, o.format);
      if (!o.attack.empty()) in.attack_contract = Address::from_hex(o.attack);
      if (!o.selectors.empty()) in.selectors_json = read_file(o.selectors);
      in.direct_call = direct_call;
      in.no_harness = no_harness;
      return print_report(run_pipeline(in, cfg), out_dir.empty() ? cfg.out_dir : out_dir);
    }
    if (*batch) {
      auto cfg = load(o);
      auto base = std::filesystem::path(manifest).parent_path();
      auto resolve = [&](const std::string& p) { return std::filesystem::path(p).is_relative() ? (base / p).string() : p; };
      std::vector<TxInput> inputs;
      for (const auto& e : json::parse(read_file(manifest))) {
        TxInput in;
        in.name = e.value("name", std::string());
        in.trace_text = read_file(resolve(e.at("trace").get<std::string>()));
        in.format = detect_format(in.trace_text, e.value("format", std::string("auto")));
        if (e.contains("attack")) in.attack_contract = Address::from_hex(e["attack"].get<std::string>());
        if (e.contains("selectors")) in.selectors_json = read_file(resolve(e["selectors"].get<std::string>()));
        in.direct_call = e.value("direct_call", false);
        in.no_harness = no_harness || e.value("no_harness", false);
        inputs.push_back(std::move(in));
      }
      auto reports = run_batch(inputs, cfg, workers ? workers : cfg.workers);
      int rc = 0;
      for (const auto& r : reports) rc = std::max(rc, print_report(r, out_dir.empty() ? cfg.out_dir : out_dir));
      return rc;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
