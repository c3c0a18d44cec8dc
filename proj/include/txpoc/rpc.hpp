#pragma once

// JSON-RPC front end: transaction, receipt and structLogs for one hash, bundled into a document parse_geth reads.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include "txpoc/net.hpp"

namespace txpoc {

struct EndpointConfig {
  std::string url;
  std::string chain;
  int timeout_s = 30;
  int retries = 3;
  /// Requests per second; 0 disables limiting.
  double rate_limit = 10;
  int backoff_ms = 200;
  std::string cache_dir;

  void validate() const {
    if (url.empty()) throw Error(ErrorCode::ConfigError, "RPC endpoint URL is empty");
    if (timeout_s <= 0) throw Error(ErrorCode::ConfigError, "RPC timeout must be positive");
    if (retries < 0) throw Error(ErrorCode::ConfigError, "RPC retry count must not be negative");
    if (rate_limit < 0) throw Error(ErrorCode::ConfigError, "RPC rate limit must not be negative");
  }
};

/// Spaces requests to one endpoint at least 1/rate seconds apart.
class RateLimiter {
 public:
  explicit RateLimiter(double rate) : interval_(rate > 0 ? std::chrono::nanoseconds(static_cast<long long>(1e9 / rate)) : std::chrono::nanoseconds(0)) {}

  void acquire() {
    if (interval_.count() == 0) return;
    std::chrono::steady_clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      auto now = std::chrono::steady_clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

  /// One limiter per URL, shared by every client in the process.
  static std::shared_ptr<RateLimiter> for_endpoint(const std::string& url, double rate) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<RateLimiter>> limiters;
    std::lock_guard lock(mu);
    auto& l = limiters[url];
    if (!l) l = std::make_shared<RateLimiter>(rate);
    return l;
  }

 private:
  std::mutex mu_;
  std::chrono::nanoseconds interval_;
  std::chrono::steady_clock::time_point next_{};
};

class RpcClient {
 public:
  explicit RpcClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    limiter_ = RateLimiter::for_endpoint(cfg_.url, cfg_.rate_limit);
  }

  /// Result member of a JSON-RPC reply. Transport failures and 429/5xx are retried with exponential backoff.
  json call(const std::string& method, const json& params) {
    json req{{"jsonrpc", "2.0"}, {"id", ++id_}, {"method", method}, {"params", params}};
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms << (attempt - 1)));
      limiter_->acquire();
      auto res = http_post_json(cfg_.url, req.dump(), {}, cfg_.timeout_s);
      if (!res.ok) {
        last_error = res.error;
        continue;
      }
      if (res.status == 429 || res.status >= 500) {
        last_error = "HTTP " + std::to_string(res.status);
        continue;
      }
      if (res.status != 200) throw Error(ErrorCode::RpcUnavailable, method + ": HTTP " + std::to_string(res.status));
      json j;
      try {
        j = json::parse(res.body);
      } catch (const std::exception& e) {
        throw Error(ErrorCode::RpcUnavailable, method + ": unparseable reply: " + e.what());
      }
      if (j.contains("error") && !j["error"].is_null()) {
        const auto& err = j["error"];
        int code = err.value("code", 0);
        std::string msg = err.value("message", std::string("unknown error"));
        if (code == -32601 || msg.find("does not exist") != std::string::npos || msg.find("not available") != std::string::npos ||
            msg.find("not supported") != std::string::npos || msg.find("Method not found") != std::string::npos)
          throw Error(ErrorCode::TraceUnsupported, method + ": " + msg);
        if (msg.find("not found") != std::string::npos) throw Error(ErrorCode::TxNotFound, method + ": " + msg);
        throw Error(ErrorCode::RpcUnavailable, method + ": " + msg);
      }
      return j.value("result", json());
    }
    throw Error(ErrorCode::RpcUnavailable, method + " failed after " + std::to_string(cfg_.retries + 1) + " attempts: " + last_error);
  }

  const EndpointConfig& config() const { return cfg_; }

 private:
  EndpointConfig cfg_;
  std::shared_ptr<RateLimiter> limiter_;
  std::atomic<long> id_{0};
};

inline std::filesystem::path trace_cache_path(const EndpointConfig& cfg, const std::string& tx_hash) {
  std::string h = tx_hash;
  for (auto& c : h) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return std::filesystem::path(cfg.cache_dir) / (cfg.chain.empty() ? "unknown" : cfg.chain) / (h + ".json");
}

/// Bundles {"tx": header, "result": {"structLogs": ...}}; cached on disk by (chain, hash) when a cache dir is set.
inline std::string fetch_trace(const std::string& tx_hash, const EndpointConfig& cfg) {
  if (!cfg.cache_dir.empty()) {
    auto p = trace_cache_path(cfg, tx_hash);
    if (std::filesystem::exists(p)) {
      std::ifstream in(p, std::ios::binary);
      return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
  }
  RpcClient rpc(cfg);
  json tx = rpc.call("eth_getTransactionByHash", json::array({tx_hash}));
  if (tx.is_null()) throw Error(ErrorCode::TxNotFound, "transaction " + tx_hash + " not found");
  json receipt = rpc.call("eth_getTransactionReceipt", json::array({tx_hash}));
  json trace = rpc.call("debug_traceTransaction",
                        json::array({tx_hash, {{"enableMemory", true}, {"disableStorage", true}, {"enableReturnData", true}}}));
  if (!trace.is_object() || !trace.contains("structLogs"))
    throw Error(ErrorCode::TraceUnsupported, "debug_traceTransaction returned no structLogs");

  json header{{"hash", tx.value("hash", tx_hash)}};
  for (const char* k : {"from", "to", "value", "input", "blockNumber", "chainId"})
    if (tx.contains(k) && !tx[k].is_null()) header[k] = tx[k];
  if (!cfg.chain.empty()) header["chain"] = cfg.chain;
  if (receipt.is_object() && receipt.contains("contractAddress") && !receipt["contractAddress"].is_null())
    header["contractAddress"] = receipt["contractAddress"];
  std::string doc = json{{"tx", header}, {"result", trace}}.dump();
  if (!cfg.cache_dir.empty()) {
    auto p = trace_cache_path(cfg, tx_hash);
    std::filesystem::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    std::ofstream(tmp, std::ios::binary) << doc;
    std::filesystem::rename(tmp, p);
  }
  return doc;
}

}  // namespace txpoc
