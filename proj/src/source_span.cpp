#include "scadscope/source_span.hpp"

#include <algorithm>

#include "scadscope/error.hpp"

namespace scadscope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kUnsupportedSelection: return "unsupported_selection";
    case ErrorCode::kOverlappingEdits: return "overlapping_edits";
    case ErrorCode::kBoundary: return "boundary";
    case ErrorCode::kTransport: return "transport";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kConfiguration: return "configuration";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kRenderFailed: return "render_failed";
    case ErrorCode::kMigration: return "migration";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

LineIndex::LineIndex(std::string_view source) : size_(source.size()) {
  line_starts_.push_back(0);
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == '\n') line_starts_.push_back(i + 1);
  }
}

int LineIndex::line_of(std::size_t offset) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  return static_cast<int>(it - line_starts_.begin());
}

int LineIndex::column_of(std::size_t offset) const {
  const int line = line_of(offset);
  return static_cast<int>(offset - line_starts_[line - 1]) + 1;
}

std::size_t LineIndex::line_start(int line) const {
  if (line < 1) return 0;
  if (line > line_count()) return size_;
  return line_starts_[line - 1];
}

SourceSpan LineIndex::span(std::size_t start_byte, std::size_t end_byte) const {
  SourceSpan s;
  s.start_byte = start_byte;
  s.end_byte = end_byte;
  s.start_line = line_of(start_byte);
  s.start_col = column_of(start_byte);
  s.end_line = line_of(end_byte);
  s.end_col = column_of(end_byte);
  return s;
}

}  // namespace scadscope
