#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roq {

enum class ErrorCode {
  Io,
  Parse,
  Domain,
  DuplicateTuple,
  SelfJoin,
  HeadVariable,
  Schema,
  Plan,
  CapExceeded,
  ResourceLimit,
  InvalidArgument,
};

/// Stable machine-readable tag printed by the CLI, e.g. "E_PARSE".
constexpr std::string_view error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Domain: return "E_DOMAIN";
    case ErrorCode::DuplicateTuple: return "E_DUPLICATE_TUPLE";
    case ErrorCode::SelfJoin: return "E_SELF_JOIN";
    case ErrorCode::HeadVariable: return "E_HEAD_VARIABLE";
    case ErrorCode::Schema: return "E_SCHEMA";
    case ErrorCode::Plan: return "E_PLAN";
    case ErrorCode::CapExceeded: return "E_CAP_EXCEEDED";
    case ErrorCode::ResourceLimit: return "E_RESOURCE_LIMIT";
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roq
