#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gmine {

/// Error taxonomy shared by every module. The string forms returned by
/// code_name() are the machine-readable codes used by the CLI and service.
enum class ErrorCode {
  parse,
  io,
  empty_graph,
  contract,
  infeasible,
  format,
  integrity,
  not_found,
  insufficient_budget,
  timeout,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse: return "parse-error";
    case ErrorCode::io: return "io-error";
    case ErrorCode::empty_graph: return "empty-graph";
    case ErrorCode::contract: return "contract-error";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::format: return "format-error";
    case ErrorCode::integrity: return "integrity-error";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::insufficient_budget: return "insufficient-budget";
    case ErrorCode::timeout: return "timeout";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  /// Format errors carry the absolute file offset where decoding failed.
  Error(ErrorCode code, const std::string& message, std::uint64_t offset)
      : std::runtime_error(message + " (at offset " + std::to_string(offset) + ")"),
        code_(code),
        offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> offset_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::contract, message);
}

}  // namespace detail
}  // namespace gmine
