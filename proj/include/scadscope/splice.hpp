#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "scadscope/source_span.hpp"

namespace scadscope {

struct Edit {
  SourceSpan span;  // replaced bytes; empty for a pure insertion
  std::string replacement;
};

/// Applies non-overlapping edits. Pure insertions at the same offset are
/// applied in the order given. Throws Error(kOverlappingEdits) without
/// modifying anything when two edits overlap or a span is out of range.
std::string splice(std::string_view source, std::vector<Edit> edits);

}  // namespace scadscope
