#pragma once

// Completion providers: an HTTP chat-completions client and a scripted mock.

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>

#include "txpoc/net.hpp"

namespace txpoc {

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  /// "complete", "syntax" or "semantic".
  std::string purpose;
  std::vector<ChatMessage> messages;

  std::string text() const {
    std::string out;
    for (const auto& m : messages) out += m.role + "\n" + m.content + "\n\n";
    return out;
  }
  /// First 8 bytes of keccak256 over purpose and messages, as 16 hex digits.
  std::string digest() const {
    auto h = keccak256(std::string_view(purpose + "\n" + text()));
    return to_hex(std::vector<std::uint8_t>(h.begin(), h.begin() + 8), false);
  }
};

struct CompletionResponse {
  std::string text;
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

/// Rough token estimate for providers that do not report usage.
inline std::size_t estimate_tokens(std::string_view s) { return (s.size() + 3) / 4; }

class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual CompletionResponse complete(const CompletionRequest& req) = 0;
  virtual std::string name() const = 0;
};

inline constexpr std::string_view kMockRefuse = "<<REFUSE>>";
inline constexpr std::string_view kMockTimeout = "<<TIMEOUT>>";

/// Scripted provider. Directory lookup order: <digest>.txt, first matching rule in rules.json,
/// <purpose>.txt. Responses starting with <<REFUSE>> or <<TIMEOUT>> raise the matching error.
class MockProvider : public CompletionProvider {
 public:
  using Script = std::function<std::string(const CompletionRequest&)>;

  explicit MockProvider(Script script) : script_(std::move(script)) {}

  explicit MockProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_))
      throw Error(ErrorCode::ConfigError, "mock provider directory " + dir_.string() + " does not exist");
    auto rules = dir_ / "rules.json";
    if (std::filesystem::exists(rules)) {
      std::ifstream in(rules);
      json j;
      try {
        in >> j;
      } catch (const std::exception& e) {
        throw Error(ErrorCode::ConfigError, "rules.json: " + std::string(e.what()));
      }
      for (const auto& r : j) rules_.push_back(parse_rule(r));
    }
  }

  CompletionResponse complete(const CompletionRequest& req) override {
    std::string text = script_ ? script_(req) : from_dir(req);
    if (text.rfind(kMockRefuse, 0) == 0) throw Error(ErrorCode::ProviderRefusal, "mock refused " + req.purpose + " request");
    if (text.rfind(kMockTimeout, 0) == 0) throw Error(ErrorCode::ProviderTimeout, "mock timed out on " + req.purpose + " request");
    {
      std::lock_guard lock(mu_);
      ++calls_;
    }
    return {text, estimate_tokens(req.text()), estimate_tokens(text)};
  }

  std::string name() const override { return "mock"; }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  struct Rule {
    std::string purpose;
    std::vector<std::string> contains;
    std::vector<std::string> absent;
    std::string response;
    /// Set for rules that answer with the prompt's source after literal replacements.
    std::optional<std::vector<std::pair<std::string, std::string>>> edits;
  };

  Rule parse_rule(const json& r) const {
    Rule rule;
    rule.purpose = r.value("purpose", std::string());
    auto strings = [](const json& v) {
      std::vector<std::string> out;
      if (v.is_string())
        out.push_back(v.get<std::string>());
      else if (v.is_array())
        for (const auto& x : v) out.push_back(x.get<std::string>());
      return out;
    };
    if (r.contains("contains")) rule.contains = strings(r["contains"]);
    if (r.contains("absent")) rule.absent = strings(r["absent"]);
    if (r.contains("edit")) {
      rule.edits.emplace();
      for (const auto& e : r["edit"]) rule.edits->emplace_back(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    } else if (r.contains("response"))
      rule.response = r["response"].get<std::string>();
    else if (r.contains("response_file"))
      rule.response = read_file(dir_ / r["response_file"].get<std::string>());
    else
      throw Error(ErrorCode::ConfigError, "mock rule without response");
    return rule;
  }

  static std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  /// First fenced block of the last user message, with every replacement applied.
  static std::string edited_source(const CompletionRequest& req, const std::vector<std::pair<std::string, std::string>>& edits) {
    std::string src;
    for (const auto& m : req.messages)
      if (m.role == "user") src = m.content;
    auto open = src.find("```");
    if (open != std::string::npos) {
      auto nl = src.find('\n', open);
      auto close = nl == std::string::npos ? nl : src.find("```", nl + 1);
      if (close != std::string::npos) src = src.substr(nl + 1, close - nl - 1);
    }
    for (const auto& [from, to] : edits) {
      if (from.empty()) continue;
      for (auto p = src.find(from); p != std::string::npos; p = src.find(from, p + to.size())) src.replace(p, from.size(), to);
    }
    return "```solidity\n" + src + "```\n";
  }

  std::string from_dir(const CompletionRequest& req) const {
    if (auto p = dir_ / (req.digest() + ".txt"); std::filesystem::exists(p)) return read_file(p);
    std::string prompt = req.text();
    for (const auto& r : rules_) {
      if (!r.purpose.empty() && r.purpose != req.purpose) continue;
      bool ok = std::all_of(r.contains.begin(), r.contains.end(),
                            [&](const auto& s) { return prompt.find(s) != std::string::npos; }) &&
                std::none_of(r.absent.begin(), r.absent.end(), [&](const auto& s) { return prompt.find(s) != std::string::npos; });
      if (ok) return r.edits ? edited_source(req, *r.edits) : r.response;
    }
    if (auto p = dir_ / (req.purpose + ".txt"); std::filesystem::exists(p)) return read_file(p);
    throw Error(ErrorCode::ProviderRefusal, "no scripted response for " + req.purpose + " prompt " + req.digest());
  }

  Script script_;
  std::filesystem::path dir_;
  std::vector<Rule> rules_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

struct HttpProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key_env = "TXPOC_API_KEY";
  double temperature = 0.0;
  int timeout_s = 120;
  int max_tokens = 4096;
};

/// Chat-completions JSON over HTTP. Each call opens its own client, so concurrent requests are safe.
class HttpProvider : public CompletionProvider {
 public:
  explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {}

  CompletionResponse complete(const CompletionRequest& req) override {
    json body{{"model", cfg_.model}, {"temperature", cfg_.temperature}, {"max_tokens", cfg_.max_tokens}};
    json msgs = json::array();
    for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body["messages"] = msgs;
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = http_post_json(cfg_.endpoint, body.dump(), headers, cfg_.timeout_s);
    if (!res.ok) throw Error(ErrorCode::ProviderTimeout, "completion request failed: " + res.error);
    if (res.status == 400 || res.status == 403)
      throw Error(ErrorCode::ProviderRefusal, "provider rejected request with HTTP " + std::to_string(res.status));
    if (res.status != 200) throw Error(ErrorCode::ProviderTimeout, "provider answered HTTP " + std::to_string(res.status));
    json j;
    try {
      j = json::parse(res.body);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ProviderRefusal, std::string("unparseable provider response: ") + e.what());
    }
    CompletionResponse out;
    const auto* msg = j.contains("choices") && !j["choices"].empty() ? &j["choices"][0]["message"] : nullptr;
    if (!msg || !msg->contains("content") || !(*msg)["content"].is_string()) {
      std::string why = msg && msg->contains("refusal") && (*msg)["refusal"].is_string() ? (*msg)["refusal"].get<std::string>()
                                                                                       : "no message content";
      throw Error(ErrorCode::ProviderRefusal, why);
    }
    out.text = (*msg)["content"].get<std::string>();
    if (j.contains("usage")) {
      out.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t(0));
      out.completion_tokens = j["usage"].value("completion_tokens", std::size_t(0));
    } else {
      out.prompt_tokens = estimate_tokens(req.text());
      out.completion_tokens = estimate_tokens(out.text);
    }
    return out;
  }

  std::string name() const override { return "http:" + cfg_.model; }

 private:
  HttpProviderConfig cfg_;
};

}  // namespace txpoc
