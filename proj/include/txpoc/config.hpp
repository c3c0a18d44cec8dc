#pragma once

// Pipeline configuration from a TOML-style file: [section] headers, key = value lines,
// strings, numbers, booleans and flat string arrays.

#include <filesystem>
#include <fstream>
#include <variant>

#include "txpoc/fundflow.hpp"
#include "txpoc/harness.hpp"
#include "txpoc/provider.hpp"
#include "txpoc/refiner.hpp"
#include "txpoc/rpc.hpp"

namespace txpoc {

using ConfigValue = std::variant<std::string, double, bool, std::vector<std::string>>;

/// "section.key" -> value.
using ConfigTable = std::map<std::string, ConfigValue>;

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

inline std::string unquote(const std::string& v, std::size_t lineno) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"')
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": unterminated string");
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) {
      char n = v[++i];
      out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
    } else {
      out += v[i];
    }
  }
  return out;
}

}  // namespace detail

inline ConfigTable parse_config(const std::string& text) {
  ConfigTable t;
  std::istringstream in(text);
  std::string raw, section;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(line.substr(0, eq));
    std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": empty key or value");
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = detail::unquote(key, lineno);
    std::string full = section.empty() ? key : section + "." + key;
    ConfigValue v;
    if (val.front() == '"') {
      v = detail::unquote(val, lineno);
    } else if (val == "true" || val == "false") {
      v = val == "true";
    } else if (val.front() == '[') {
      if (val.back() != ']') throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": unterminated array");
      std::vector<std::string> items;
      for (const auto& item : detail::split_top_level(val.substr(1, val.size() - 2)))
        items.push_back(item.front() == '"' ? detail::unquote(item, lineno) : item);
      v = items;
    } else {
      try {
        std::size_t used = 0;
        double d = std::stod(val, &used);
        if (used != val.size()) throw std::invalid_argument(val);
        v = d;
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": cannot parse value '" + val + "'");
      }
    }
    t[full] = v;
  }
  return t;
}

struct ProviderSettings {
  std::string kind = "mock";  ///< mock or http
  std::string mock_dir;
  HttpProviderConfig http;
};

struct HarnessSettings {
  bool enabled = true;
  ForgeConfig forge;
};

struct PipelineConfig {
  double global_timeout_s = 600;
  double lift_budget_s = 120;
  Budgets budgets;
  std::size_t window = 8;
  std::vector<AssetClass> asset_priority{AssetClass::Native, AssetClass::WrappedNative, AssetClass::Stable, AssetClass::Other};
  std::string selector_db;
  std::string token_db;
  ProviderSettings provider;
  HarnessSettings harness;
  EndpointConfig rpc;
  std::size_t workers = 4;
  std::string out_dir = "out";
  Word funding_floor = Word(1000000000000000000ull);

  void validate() const {
    if (global_timeout_s <= 0 || lift_budget_s <= 0) throw Error(ErrorCode::ConfigError, "timeouts must be positive");
    if (global_timeout_s < lift_budget_s)
      throw Error(ErrorCode::ConfigError, "global timeout must not be shorter than the per-function lift budget");
    if (window == 0) throw Error(ErrorCode::ConfigError, "alignment window must be positive");
    if (workers == 0) throw Error(ErrorCode::ConfigError, "worker count must be positive");
    if (provider.kind != "mock" && provider.kind != "http")
      throw Error(ErrorCode::ConfigError, "provider kind must be mock or http, not " + provider.kind);
  }
};

inline AssetClass parse_asset_class(const std::string& s) {
  if (s == "native") return AssetClass::Native;
  if (s == "wrapped" || s == "wrapped_native") return AssetClass::WrappedNative;
  if (s == "stable") return AssetClass::Stable;
  if (s == "other") return AssetClass::Other;
  throw Error(ErrorCode::ConfigError, "unknown asset class '" + s + "'");
}

/// Applies a parsed table over the defaults. Relative paths resolve against `base_dir`.
inline PipelineConfig config_from_table(const ConfigTable& t, const std::filesystem::path& base_dir = {}) {
  PipelineConfig c;
  std::set<std::string> used;
  auto get = [&](const std::string& k) -> const ConfigValue* {
    auto it = t.find(k);
    if (it == t.end()) return nullptr;
    used.insert(k);
    return &it->second;
  };
  auto num = [&](const std::string& k, auto& dst) {
    if (const auto* v = get(k)) {
      if (!std::holds_alternative<double>(*v)) throw Error(ErrorCode::ConfigError, k + " must be a number");
      double d = std::get<double>(*v);
      using T = std::decay_t<decltype(dst)>;
      if constexpr (std::is_integral_v<T>) {
        if (d < 0 || d != static_cast<double>(static_cast<long long>(d)))
          throw Error(ErrorCode::ConfigError, k + " must be a non-negative integer");
      }
      dst = static_cast<std::decay_t<decltype(dst)>>(d);
    }
  };
  auto str = [&](const std::string& k, std::string& dst) {
    if (const auto* v = get(k)) {
      if (!std::holds_alternative<std::string>(*v)) throw Error(ErrorCode::ConfigError, k + " must be a string");
      dst = std::get<std::string>(*v);
    }
  };
  auto path = [&](const std::string& k, std::string& dst) {
    str(k, dst);
    if (!dst.empty() && std::filesystem::path(dst).is_relative() && t.count(k))
      dst = std::filesystem::absolute(base_dir / dst).lexically_normal().string();
  };
  auto boolean = [&](const std::string& k, bool& dst) {
    if (const auto* v = get(k)) {
      if (!std::holds_alternative<bool>(*v)) throw Error(ErrorCode::ConfigError, k + " must be true or false");
      dst = std::get<bool>(*v);
    }
  };

  num("timeouts.global_s", c.global_timeout_s);
  num("timeouts.lift_s", c.lift_budget_s);
  num("budgets.syntax", c.budgets.syntax);
  num("budgets.semantic", c.budgets.semantic);
  num("budgets.aux_syntax", c.budgets.aux_syntax);
  num("alignment.window", c.window);
  if (const auto* v = get("assets.priority")) {
    if (!std::holds_alternative<std::vector<std::string>>(*v)) throw Error(ErrorCode::ConfigError, "assets.priority must be an array");
    c.asset_priority.clear();
    for (const auto& s : std::get<std::vector<std::string>>(*v)) c.asset_priority.push_back(parse_asset_class(s));
  }
  if (const auto* v = get("assets.funding_floor")) {
    if (std::holds_alternative<std::string>(*v))
      c.funding_floor = word_from_string(std::get<std::string>(*v));
    else if (std::holds_alternative<double>(*v))
      c.funding_floor = Word(static_cast<std::uint64_t>(std::get<double>(*v)));
  }
  path("databases.selectors", c.selector_db);
  path("databases.tokens", c.token_db);
  str("provider.kind", c.provider.kind);
  path("provider.mock_dir", c.provider.mock_dir);
  str("provider.endpoint", c.provider.http.endpoint);
  str("provider.model", c.provider.http.model);
  str("provider.api_key_env", c.provider.http.api_key_env);
  num("provider.temperature", c.provider.http.temperature);
  num("provider.timeout_s", c.provider.http.timeout_s);
  num("provider.max_tokens", c.provider.http.max_tokens);
  boolean("harness.enabled", c.harness.enabled);
  // a bare program name is looked up on PATH
  str("harness.forge", c.harness.forge.forge);
  if (c.harness.forge.forge.find('/') != std::string::npos) path("harness.forge", c.harness.forge.forge);
  num("harness.timeout_s", c.harness.forge.timeout_s);
  path("harness.forge_std", c.harness.forge.forge_std);
  std::string work_root;
  path("harness.work_root", work_root);
  if (!work_root.empty()) c.harness.forge.work_root = work_root;
  for (const auto& [k, v] : t)
    if (k.rfind("harness.rpc_endpoints.", 0) == 0 && std::holds_alternative<std::string>(v)) {
      c.harness.forge.rpc_endpoints[k.substr(22)] = std::get<std::string>(v);
      used.insert(k);
    }
  str("rpc.url", c.rpc.url);
  str("rpc.chain", c.rpc.chain);
  num("rpc.timeout_s", c.rpc.timeout_s);
  num("rpc.retries", c.rpc.retries);
  num("rpc.rate_limit", c.rpc.rate_limit);
  path("rpc.cache_dir", c.rpc.cache_dir);
  num("batch.workers", c.workers);
  path("output.dir", c.out_dir);
  for (const auto& [k, _] : t)
    if (!used.count(k)) throw Error(ErrorCode::ConfigError, "unknown configuration key '" + k + "'");
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config " + file);
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return config_from_table(parse_config(text), std::filesystem::path(file).parent_path());
}

}  // namespace txpoc
