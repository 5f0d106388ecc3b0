#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scadscope {

enum class ErrorCode {
  kNotFound,
  kPrecondition,
  kUnsupportedSelection,
  kOverlappingEdits,
  kBoundary,
  kTransport,
  kGeneration,
  kConfiguration,
  kTimeout,
  kRenderFailed,
  kMigration,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Single exception type for all library failures; `code()` drives the HTTP
// status mapping and CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace scadscope
