#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace txpoc {

enum class ErrorCode {
  MalformedTrace,
  DepthDiscontinuity,
  UnknownOpcode,
  InsufficientStack,
  EmptyScope,
  UnboundValue,
  LiftTimeout,
  ShapeMismatch,
  MalformedLog,
  NoBeneficiary,
  MissingMeta,
  ProviderRefusal,
  ProviderTimeout,
  MarkerMissing,
  BudgetExhausted,
  HarnessFailure,
  NoErrorSite,
  NoMatchInWindow,
  CreationCountMismatch,
  RpcUnavailable,
  TxNotFound,
  TraceUnsupported,
  ConfigError,
  Timeout,
};

inline std::string_view error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedTrace: return "MalformedTrace";
    case ErrorCode::DepthDiscontinuity: return "DepthDiscontinuity";
    case ErrorCode::UnknownOpcode: return "UnknownOpcode";
    case ErrorCode::InsufficientStack: return "InsufficientStack";
    case ErrorCode::EmptyScope: return "EmptyScope";
    case ErrorCode::UnboundValue: return "UnboundValue";
    case ErrorCode::LiftTimeout: return "LiftTimeout";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::NoBeneficiary: return "NoBeneficiary";
    case ErrorCode::MissingMeta: return "MissingMeta";
    case ErrorCode::ProviderRefusal: return "ProviderRefusal";
    case ErrorCode::ProviderTimeout: return "ProviderTimeout";
    case ErrorCode::MarkerMissing: return "MarkerMissing";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::HarnessFailure: return "HarnessFailure";
    case ErrorCode::NoErrorSite: return "NoErrorSite";
    case ErrorCode::NoMatchInWindow: return "NoMatchInWindow";
    case ErrorCode::CreationCountMismatch: return "CreationCountMismatch";
    case ErrorCode::RpcUnavailable: return "RpcUnavailable";
    case ErrorCode::TxNotFound: return "TxNotFound";
    case ErrorCode::TraceUnsupported: return "TraceUnsupported";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Timeout: return "Timeout";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace txpoc
