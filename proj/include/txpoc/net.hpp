#pragma once

// Thin HTTP helpers over cpp-httplib. TLS needs CPPHTTPLIB_OPENSSL_SUPPORT (set by the build when OpenSSL is found).

#include <string>

#include "httplib.h"
// <resolv.h> (pulled in by httplib) defines ADD, which collides with the opcode constant.
#undef ADD
#include "txpoc/trace.hpp"

namespace txpoc {

struct UrlParts {
  std::string origin;  ///< scheme://host[:port]
  std::string path;
};

inline UrlParts split_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::ConfigError, "URL without scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

struct HttpResult {
  bool ok = false;
  int status = 0;
  std::string body;
  std::string error;
};

inline HttpResult http_post_json(const std::string& url, const std::string& body, const httplib::Headers& headers,
                                 int timeout_s) {
  auto parts = split_url(url);
  HttpResult out;
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (parts.origin.rfind("https://", 0) == 0) {
    out.error = "built without TLS support";
    return out;
  }
#endif
  httplib::Client cli(parts.origin);
  cli.set_connection_timeout(timeout_s, 0);
  cli.set_read_timeout(timeout_s, 0);
  cli.set_write_timeout(timeout_s, 0);
  auto res = cli.Post(parts.path, headers, body, "application/json");
  if (!res) {
    out.error = httplib::to_string(res.error());
    return out;
  }
  out.ok = true;
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace txpoc
