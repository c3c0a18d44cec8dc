#pragma once

// Placeholder completion and the budgeted repair loop: compiler-driven syntax rounds,
// balance-based profit validation, and error-site trace alignment for semantic rounds.

#include <cmath>

#include "txpoc/harness.hpp"
#include "txpoc/provider.hpp"

namespace txpoc {

enum class PocStatus { Readable, Runnable, Verifiable, Failed };

enum class FailureReason {
  None,
  Timeout,                ///< R1
  SyntaxRepairFailure,    ///< R2
  IncompleteContext,      ///< R3
  ExecutionFailure,       ///< R4
  SemanticRepairFailure,  ///< R5
};

inline std::string_view poc_status_name(PocStatus s) {
  switch (s) {
    case PocStatus::Readable: return "Readable";
    case PocStatus::Runnable: return "Runnable";
    case PocStatus::Verifiable: return "Verifiable";
    case PocStatus::Failed: return "Failed";
  }
  return "Failed";
}

inline std::string_view failure_code(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "";
    case FailureReason::Timeout: return "R1";
    case FailureReason::SyntaxRepairFailure: return "R2";
    case FailureReason::IncompleteContext: return "R3";
    case FailureReason::ExecutionFailure: return "R4";
    case FailureReason::SemanticRepairFailure: return "R5";
  }
  return "";
}

inline std::string_view failure_name(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "None";
    case FailureReason::Timeout: return "Timeout";
    case FailureReason::SyntaxRepairFailure: return "SyntaxRepairFailure";
    case FailureReason::IncompleteContext: return "IncompleteContext";
    case FailureReason::ExecutionFailure: return "ExecutionFailure";
    case FailureReason::SemanticRepairFailure: return "SemanticRepairFailure";
  }
  return "None";
}

/// "Verifiable" or "Failed(R2)".
inline std::string status_label(PocStatus s, FailureReason r) {
  if (s != PocStatus::Failed) return std::string(poc_status_name(s));
  return "Failed(" + std::string(failure_code(r)) + ")";
}

struct Budgets {
  std::size_t syntax = 5;
  std::size_t semantic = 3;
  std::size_t aux_syntax = 3;
};

struct TranscriptEntry {
  std::string kind;  ///< complete, syntax, semantic, aux_syntax, build, run
  std::size_t iteration = 0;
  std::vector<ChatMessage> prompt;
  std::string response;
  std::vector<std::string> diagnostics;
  std::string status;
  std::string note;
};

struct RefinementSession {
  std::string poc_source;
  std::size_t syntax_iterations_used = 0;
  std::size_t semantic_iterations_used = 0;
  /// Auxiliary syntax rounds spent in each semantic iteration.
  std::vector<std::size_t> aux_syntax_used;
  std::vector<TranscriptEntry> transcript;
  PocStatus status = PocStatus::Readable;
  FailureReason reason = FailureReason::None;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
  std::size_t provider_rounds = 0;
  std::optional<std::string> last_diff_summary;
  /// Outcome of the most recent harness run.
  std::optional<RunResult> last_run;

  std::string label() const { return status_label(status, reason); }

  /// Only moves forward along Readable -> Runnable -> Verifiable.
  void promote(PocStatus s) {
    if (status == PocStatus::Failed) return;
    if (static_cast<int>(s) > static_cast<int>(status)) status = s;
  }
  void fail(FailureReason r) {
    if (status == PocStatus::Verifiable) return;
    status = PocStatus::Failed;
    reason = r;
  }
};

inline json transcript_to_json(const RefinementSession& s) {
  json entries = json::array();
  for (const auto& e : s.transcript) {
    json msgs = json::array();
    for (const auto& m : e.prompt) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json j{{"kind", e.kind}, {"iteration", e.iteration}, {"status", e.status}};
    if (!msgs.empty()) j["prompt"] = msgs;
    if (!e.response.empty()) j["response"] = e.response;
    if (!e.diagnostics.empty()) j["diagnostics"] = e.diagnostics;
    if (!e.note.empty()) j["note"] = e.note;
    entries.push_back(j);
  }
  return json{{"status", s.label()},
              {"syntax_iterations", s.syntax_iterations_used},
              {"semantic_iterations", s.semantic_iterations_used},
              {"aux_syntax_iterations", s.aux_syntax_used},
              {"prompt_tokens", s.prompt_tokens},
              {"completion_tokens", s.completion_tokens},
              {"entries", entries}};
}

// --- completion --------------------------------------------------------------

inline const char* kCompletionSystemPrompt =
    "You complete Foundry exploit reproduction sketches. Reply with three sections, each starting with its "
    "marker on its own line: /*<<ATTACK_LOGIC>>*/ (statements for the attack function body), "
    "/*<<OTHER_FUNCTIONS>>*/ (further functions of AttackerC, such as callbacks) and /*<<OTHER_CONTRACTS>>*/ "
    "(helper contracts). A section may be empty. Use the constants and interfaces already declared.";

inline const char* kSyntaxSystemPrompt =
    "Fix the compilation errors in this Foundry test file. Reply with the complete corrected file only.";

inline const char* kSemanticSystemPrompt =
    "This Foundry PoC compiles but does not reproduce the exploit's profit. The first failing call is paired with "
    "the call the original attack made at that point. Change the PoC so it behaves like the original. Reply with "
    "the complete corrected file only.";

inline CompletionRequest completion_prompt(const std::string& sketch_source, const std::string& pseudocode) {
  CompletionRequest r;
  r.purpose = "complete";
  r.messages.push_back({"system", kCompletionSystemPrompt});
  r.messages.push_back({"user", "Sketch:\n```solidity\n" + sketch_source + "```\n\nPseudocode recovered from the attack:\n```\n" +
                                    pseudocode + "```\n"});
  return r;
}

/// Splits a completion response at the three marker tokens.
inline std::map<PlaceholderKind, std::string> parse_completion(const std::string& response) {
  struct Hit {
    std::size_t pos;
    PlaceholderKind kind;
  };
  std::vector<Hit> hits;
  for (auto k : all_placeholders()) {
    auto m = placeholder_marker(k);
    auto p = response.find(m);
    if (p == std::string::npos)
      throw Error(ErrorCode::MarkerMissing, "response does not cover " + std::string(m));
    hits.push_back({p, k});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
  std::map<PlaceholderKind, std::string> out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    auto begin = hits[i].pos + placeholder_marker(hits[i].kind).size();
    auto end = i + 1 < hits.size() ? hits[i + 1].pos : response.size();
    std::string body = response.substr(begin, end - begin);
    // fence lines around a section are not code
    std::istringstream in(body);
    std::string line, kept;
    while (std::getline(in, line))
      if (detail::trim(line).rfind("```", 0) != 0) kept += line + "\n";
    auto first = kept.find_first_not_of("\r\n");
    auto last = kept.find_last_not_of(" \t\r\n");
    out[hits[i].kind] = first == std::string::npos ? "" : kept.substr(first, last - first + 1);
  }
  return out;
}

/// Replaces each marker with its section, indenting continuation lines to the marker's column.
inline std::string merge_completion(const std::string& sketch_source, const std::map<PlaceholderKind, std::string>& sections) {
  std::string out = sketch_source;
  for (auto k : all_placeholders()) {
    auto m = placeholder_marker(k);
    auto p = out.find(m);
    if (p == std::string::npos) throw Error(ErrorCode::MarkerMissing, "sketch lacks " + std::string(m));
    auto line_start = out.rfind('\n', p);
    line_start = line_start == std::string::npos ? 0 : line_start + 1;
    std::string indent = out.substr(line_start, p - line_start);
    if (indent.find_first_not_of(" \t") != std::string::npos) indent.clear();
    auto it = sections.find(k);
    std::string body = it == sections.end() ? "" : it->second;
    std::string rendered;
    std::istringstream in(body);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (!first) rendered += "\n" + (line.empty() ? "" : indent);
      rendered += line;
      first = false;
    }
    out.replace(p, m.size(), rendered);
  }
  return out;
}

inline std::string complete_sketch(const PocSketch& sketch, const std::string& pseudocode, CompletionProvider& provider,
                                   RefinementSession* session = nullptr) {
  auto req = completion_prompt(sketch.source_text, pseudocode);
  auto res = provider.complete(req);
  if (session) {
    session->prompt_tokens += res.prompt_tokens;
    session->completion_tokens += res.completion_tokens;
    ++session->provider_rounds;
    session->transcript.push_back({"complete", 0, req.messages, res.text, {}, "Readable", ""});
  }
  return merge_completion(sketch.source_text, parse_completion(res.text));
}

/// The first fenced block of a reply, or the whole reply when it has none.
inline std::string extract_code(const std::string& reply) {
  auto open = reply.find("```");
  if (open == std::string::npos) return reply;
  auto nl = reply.find('\n', open);
  if (nl == std::string::npos) return reply;
  auto close = reply.find("```", nl + 1);
  if (close == std::string::npos) return reply.substr(nl + 1);
  return reply.substr(nl + 1, close - nl - 1);
}

// --- syntax repair -------------------------------------------------------------

inline CompletionRequest syntax_prompt(const std::string& source, const std::vector<std::string>& diagnostics) {
  CompletionRequest r;
  r.purpose = "syntax";
  r.messages.push_back({"system", kSyntaxSystemPrompt});
  std::string diag;
  for (const auto& d : diagnostics) diag += d + "\n";
  r.messages.push_back({"user", "Source:\n```solidity\n" + source + "```\n\nCompiler errors:\n" + diag});
  return r;
}

namespace detail {

inline std::string ask(RefinementSession& s, CompletionProvider& p, const CompletionRequest& req, const std::string& kind,
                       std::size_t iteration, const std::vector<std::string>& diagnostics) {
  auto res = p.complete(req);
  s.prompt_tokens += res.prompt_tokens;
  s.completion_tokens += res.completion_tokens;
  ++s.provider_rounds;
  s.transcript.push_back({kind, iteration, req.messages, res.text, diagnostics, std::string(poc_status_name(s.status)), ""});
  return extract_code(res.text);
}

inline void note(RefinementSession& s, const std::string& kind, std::size_t iteration, const std::vector<std::string>& diag,
                 const std::string& text) {
  s.transcript.push_back({kind, iteration, {}, "", diag, s.label(), text});
}

}  // namespace detail

/// One stateless repair round: the prompt carries only the current source and the current diagnostics.
inline RefinementSession& syntax_refine(RefinementSession& s, const std::vector<std::string>& diagnostics,
                                        CompletionProvider& provider, const Budgets& budgets = {}) {
  if (diagnostics.empty()) return s;
  if (s.syntax_iterations_used >= budgets.syntax)
    throw Error(ErrorCode::BudgetExhausted, "syntax repair budget of " + std::to_string(budgets.syntax) + " used up");
  ++s.syntax_iterations_used;
  s.poc_source = detail::ask(s, provider, syntax_prompt(s.poc_source, diagnostics), "syntax", s.syntax_iterations_used, diagnostics);
  return s;
}

// --- profit validation -----------------------------------------------------------

inline std::string oracle_label(const AssetId& a, const TokenDb& tokens) {
  return a.native ? "NATIVE" : default_alias(a.token, tokens);
}

/// True iff every oracle asset moved in its expected direction between the pre and post logs.
inline bool validate_profit(const RunResult& run, const OracleSpec& oracle, const std::vector<std::string>& labels) {
  if (run.infra_failure) throw Error(ErrorCode::HarnessFailure, run.infra_error.empty() ? "harness failed" : run.infra_error);
  if (oracle.assets.empty()) return false;
  for (std::size_t i = 0; i < oracle.assets.size(); ++i) {
    const std::string& l = i < labels.size() ? labels[i] : oracle_label(oracle.assets[i].asset, TokenDb::builtin());
    auto pre = run.pre.find(l), post = run.post.find(l);
    if (pre == run.pre.end() || post == run.post.end()) return false;
    bool ok = oracle.assets[i].expected_sign >= 0 ? post->second > pre->second : post->second < pre->second;
    if (!ok) return false;
  }
  return true;
}

inline bool validate_profit(const RunResult& run, const OracleSpec& oracle) { return validate_profit(run, oracle, {}); }

// --- trace alignment -------------------------------------------------------------

struct MatchWeights {
  double selector = 0.5;
  double target = 0.3;
  double args = 0.2;
};

struct TraceDiff {
  std::map<std::string, std::string> address_alignment;  ///< observed -> ground
  std::size_t error_site = 0;
  std::size_t ground_anchor = 0;
  std::size_t observed_index = 0;
  std::size_t ground_index = 0;
  std::pair<CallSummary, CallSummary> matched_pair;  ///< (expected, observed)
  double score = 0;
  std::string summary;
};

inline double match_score(const CallSummary& g, const CallSummary& o, const MatchWeights& w = {}) {
  double s = 0;
  if (g.function == o.function) s += w.selector;
  if (g.target == o.target) s += w.target;
  std::size_t n = std::max(g.args.size(), o.args.size());
  if (n == 0) {
    s += w.args;
  } else {
    std::size_t same = 0;
    for (std::size_t i = 0; i < std::min(g.args.size(), o.args.size()); ++i) same += g.args[i] == o.args[i];
    s += w.args * static_cast<double>(same) / static_cast<double>(n);
  }
  return s;
}

namespace detail {

/// The innermost failing call of the first failing subtree.
inline std::optional<std::size_t> error_origin(const std::vector<CallSummary>& calls) {
  std::optional<std::size_t> site;
  for (std::size_t i = 0; i < calls.size(); ++i)
    if (calls[i].reverted) {
      site = i;
      break;
    }
  if (!site) return site;
  for (bool moved = true; moved;) {
    moved = false;
    for (std::size_t j = *site + 1; j < calls.size() && calls[j].depth > calls[*site].depth; ++j)
      if (calls[j].reverted) {
        site = j;
        moved = true;
        break;
      }
  }
  return site;
}

/// Call text up to the first differing argument, the rest elided.
inline std::string brief(const CallSummary& c, std::size_t diff_at) {
  std::string s = c.target + "." + c.function + "(";
  std::size_t shown = std::min(c.args.size(), diff_at + 1);
  for (std::size_t i = 0; i < shown; ++i) s += (i ? ", " : "") + c.args[i];
  if (shown < c.args.size()) s += shown ? ", ..." : "...";
  return s + ")";
}

}  // namespace detail

inline TraceDiff align_traces(const std::vector<CallSummary>& ground, std::vector<CallSummary> observed, std::size_t window,
                              const MatchWeights& weights = {}) {
  TraceDiff d;
  // 1. creation-order alignment
  std::vector<std::string> gc, oc;
  for (const auto& c : ground)
    if (c.create && !c.role_bound) gc.push_back(c.target);
  for (const auto& c : observed)
    if (c.create && !c.role_bound) oc.push_back(c.target);
  if (gc.size() != oc.size())
    throw Error(ErrorCode::CreationCountMismatch, "ground creates " + std::to_string(gc.size()) + " contracts, observed " +
                                                      std::to_string(oc.size()));
  for (std::size_t i = 0; i < gc.size(); ++i) d.address_alignment[oc[i]] = gc[i];
  auto remap = [&](std::string& s) {
    if (auto it = d.address_alignment.find(s); it != d.address_alignment.end()) s = it->second;
  };
  for (auto& c : observed) {
    remap(c.target);
    for (auto& a : c.args) remap(a);
  }

  // 2. first observed error
  auto site = detail::error_origin(observed);
  if (!site) throw Error(ErrorCode::NoErrorSite, "observed execution has no failing call");
  d.error_site = *site;

  // ground position reached by the observed prefix, by greedy in-order matching
  std::size_t ptr = 0;
  for (std::size_t i = 0; i < *site; ++i)
    for (std::size_t j = ptr; j < ground.size(); ++j)
      if (ground[j].same_call(observed[i])) {
        ptr = j + 1;
        break;
      }
  d.ground_anchor = ptr;

  // 3. best pair within the window around the site
  auto lo = [&](std::size_t x) { return x > window ? x - window : 0; };
  struct Best {
    double score;
    std::size_t dist;
    std::size_t o, g;
  };
  std::optional<Best> best, exact;
  for (std::size_t o = lo(*site); o <= std::min(observed.size() - 1, *site + window); ++o) {
    for (std::size_t g = lo(ptr); g < ground.size() && g <= ptr + window; ++g) {
      if (ground[g].function != observed[o].function) continue;
      double sc = match_score(ground[g], observed[o], weights);
      std::size_t dist = (o > *site ? o - *site : *site - o) + (g > ptr ? g - ptr : ptr - g);
      Best cand{sc, dist, o, g};
      auto better = [](const Best& a, const std::optional<Best>& b) {
        return !b || a.score > b->score + 1e-12 || (std::fabs(a.score - b->score) <= 1e-12 && a.dist < b->dist);
      };
      if (ground[g].same_call(observed[o])) {
        if (o == *site && better(cand, exact)) exact = cand;
        continue;
      }
      if (better(cand, best)) best = cand;
    }
  }
  if (!best && !exact) throw Error(ErrorCode::NoMatchInWindow, "no ground call within " + std::to_string(window) +
                                                                  " calls of the error site matches " + observed[*site].text());
  const Best& pick = best ? *best : *exact;
  d.observed_index = pick.o;
  d.ground_index = pick.g;
  d.score = pick.score;
  const auto& g = ground[pick.g];
  const auto& o = observed[pick.o];
  d.matched_pair = {g, o};
  if (!best) {
    d.summary = "Observed execution reverted at " + o.text() +
                (o.revert_reason.empty() ? "" : " (" + o.revert_reason + ")") + ", but expected it to succeed";
  } else if (g.target != o.target) {
    d.summary = "Observed execution with a different target: " + detail::brief(o, o.args.size()) +
                ", but expected: " + detail::brief(g, g.args.size());
  } else {
    std::size_t at = 0;
    while (at < std::min(g.args.size(), o.args.size()) && g.args[at] == o.args[at]) ++at;
    d.summary = "Observed execution with different parameters: " + detail::brief(o, at) + ", but expected: " + detail::brief(g, at);
  }
  return d;
}

inline json trace_diff_to_json(const TraceDiff& d) {
  return json{{"address_alignment", d.address_alignment},
              {"error_site", d.error_site},
              {"expected", call_summary_to_json(d.matched_pair.first)},
              {"observed", call_summary_to_json(d.matched_pair.second)},
              {"score", d.score},
              {"summary", d.summary}};
}

// --- semantic repair -------------------------------------------------------------

inline CompletionRequest semantic_prompt(const std::string& source, const std::string& expected, const std::string& observed,
                                         const std::string& summary) {
  CompletionRequest r;
  r.purpose = "semantic";
  r.messages.push_back({"system", kSemanticSystemPrompt});
  std::string u = "Source:\n```solidity\n" + source + "```\n\n";
  if (!expected.empty()) u += "Expected call: " + expected + "\nObserved call: " + observed + "\n";
  u += summary + "\n";
  r.messages.push_back({"user", u});
  return r;
}

struct RefineContext {
  OracleSpec oracle;
  std::vector<std::string> labels;
  std::vector<CallSummary> ground;
  std::size_t window = 8;
  Budgets budgets;
  MatchWeights weights;
  /// Revert reasons that point at state the single transaction cannot provide.
  std::vector<std::string> context_patterns{"caller is not the owner", "not whitelisted", "invalid signature",
                                            "call to non-contract", "not authorized", "Unauthorized"};
};

namespace detail {

/// Builds, spending up to `cap` repair rounds from `used`. Returns true once the source compiles.
inline bool compile_with_repairs(RefinementSession& s, Harness& h, CompletionProvider& p, std::size_t cap, std::size_t& used,
                                 const std::string& kind) {
  for (;;) {
    auto b = h.build(s.poc_source);
    note(s, "build", used, b.diagnostics, b.ok ? "compiled" : "compile failed");
    if (b.ok) return true;
    if (used >= cap) return false;
    ++used;
    s.poc_source = ask(s, p, syntax_prompt(s.poc_source, b.diagnostics), kind, used, b.diagnostics);
  }
}

inline bool matches_context_pattern(const std::string& reason, const std::vector<std::string>& pats) {
  for (const auto& p : pats)
    if (!p.empty() && reason.find(p) != std::string::npos) return true;
  return false;
}

/// Runs the PoC; records the outcome and returns it. Infrastructure failures end the session as R4.
inline std::optional<RunResult> run_and_check(RefinementSession& s, Harness& h, const RefineContext& ctx, std::size_t iteration,
                                              bool& verified) {
  RunResult r = h.run(s.poc_source);
  s.last_run = r;
  try {
    verified = validate_profit(r, ctx.oracle, ctx.labels);
  } catch (const Error& e) {
    s.fail(FailureReason::ExecutionFailure);
    note(s, "run", iteration, {}, e.what());
    return std::nullopt;
  }
  if (verified) s.promote(PocStatus::Verifiable);
  note(s, "run", iteration, {}, verified ? "profit reproduced" : "profit not reproduced");
  return r;
}

}  // namespace detail

/// One semantic iteration: prompt with the paired calls, then up to `aux_syntax` repairs, then re-validation.
/// When the repairs run out the source falls back to the last compiling snapshot.
inline RefinementSession& semantic_refine(RefinementSession& s, const TraceDiff& diff, CompletionProvider& provider, Harness& harness,
                                          const RefineContext& ctx, bool* verified = nullptr) {
  if (s.semantic_iterations_used >= ctx.budgets.semantic)
    throw Error(ErrorCode::BudgetExhausted, "semantic repair budget of " + std::to_string(ctx.budgets.semantic) + " used up");
  ++s.semantic_iterations_used;
  const auto n = s.semantic_iterations_used;
  s.last_diff_summary = diff.summary;
  std::string snapshot = s.poc_source;
  std::string expected = diff.summary.empty() ? "" : diff.matched_pair.first.text();
  if (diff.matched_pair.first.function.empty()) expected.clear();
  s.poc_source = detail::ask(s, provider, semantic_prompt(s.poc_source, expected, diff.matched_pair.second.text(), diff.summary),
                             "semantic", n, {});
  s.aux_syntax_used.push_back(0);
  bool ok = false;
  if (detail::compile_with_repairs(s, harness, provider, ctx.budgets.aux_syntax, s.aux_syntax_used.back(), "aux_syntax")) {
    s.promote(PocStatus::Runnable);
    detail::run_and_check(s, harness, ctx, n, ok);
  } else {
    s.poc_source = snapshot;
    detail::note(s, "revert_edit", n, {}, "auxiliary repairs exhausted; kept the previous compiling source");
  }
  if (verified) *verified = ok;
  return s;
}

/// Prompt material when no paired call is available.
inline TraceDiff fallback_diff(const std::string& why) {
  TraceDiff d;
  d.summary = why;
  return d;
}

/// Full loop from a completed PoC: syntax repair, profit check, then semantic iterations.
inline RefinementSession& refine(RefinementSession& s, Harness& harness, CompletionProvider& provider, const RefineContext& ctx) {
  if (s.status == PocStatus::Failed) return s;
  std::size_t used = s.syntax_iterations_used;
  bool built = detail::compile_with_repairs(s, harness, provider, ctx.budgets.syntax, used, "syntax");
  s.syntax_iterations_used = used;
  if (!built) {
    s.fail(FailureReason::SyntaxRepairFailure);
    return s;
  }
  s.promote(PocStatus::Runnable);
  bool verified = false;
  if (!detail::run_and_check(s, harness, ctx, 0, verified)) return s;
  std::string last_reason;
  while (!verified) {
    const auto& calls = s.last_run->calls;
    if (auto site = detail::error_origin(calls)) last_reason = calls[*site].revert_reason;
    if (s.semantic_iterations_used >= ctx.budgets.semantic) {
      s.fail(detail::matches_context_pattern(last_reason, ctx.context_patterns) ? FailureReason::IncompleteContext
                                                                                 : FailureReason::SemanticRepairFailure);
      break;
    }
    TraceDiff diff;
    try {
      diff = align_traces(ctx.ground, calls, ctx.window, ctx.weights);
    } catch (const Error& e) {
      auto site = detail::error_origin(calls);
      switch (e.code()) {
        case ErrorCode::NoErrorSite:
          diff = fallback_diff("Observed execution completed without reverting, but the balance checks did not show the expected profit");
          break;
        case ErrorCode::NoMatchInWindow:
        case ErrorCode::CreationCountMismatch:
          diff = fallback_diff("Observed execution failed at " + (site ? calls[*site].text() : std::string("an unknown call")) +
                               "; no matching call of the original attack was found nearby");
          if (site) diff.matched_pair.second = calls[*site];
          break;
        default: throw;
      }
    }
    detail::note(s, "align", s.semantic_iterations_used + 1, {}, diff.summary);
    semantic_refine(s, diff, provider, harness, ctx, &verified);
    if (s.status == PocStatus::Failed) break;
  }
  return s;
}

}  // namespace txpoc
