#pragma once

#include <string>
#include <vector>

#include "scadscope/source_span.hpp"

namespace scadscope {

enum class Severity { kError, kWarning };

struct ParseDiagnostic {
  Severity severity = Severity::kError;
  std::string message;
  SourceSpan span;
};

inline bool has_errors(const std::vector<ParseDiagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::kError) return true;
  return false;
}

}  // namespace scadscope
