#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace scadscope {

/// Byte range [start_byte, end_byte) with derived 1-based line/column.
/// Columns count bytes, not code points.
struct SourceSpan {
  std::size_t start_byte = 0;
  std::size_t end_byte = 0;
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;

  std::size_t size() const noexcept { return end_byte - start_byte; }
  bool empty() const noexcept { return start_byte == end_byte; }
  bool contains(const SourceSpan& other) const noexcept {
    return start_byte <= other.start_byte && other.end_byte <= end_byte;
  }
  bool overlaps(const SourceSpan& other) const noexcept {
    return start_byte < other.end_byte && other.start_byte < end_byte;
  }

  friend bool operator==(const SourceSpan& a, const SourceSpan& b) noexcept {
    return a.start_byte == b.start_byte && a.end_byte == b.end_byte;
  }
};

/// Maps byte offsets of one source text to line/column positions.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source);

  SourceSpan span(std::size_t start_byte, std::size_t end_byte) const;
  int line_of(std::size_t offset) const;
  int column_of(std::size_t offset) const;
  std::size_t line_start(int line) const;
  int line_count() const noexcept { return static_cast<int>(line_starts_.size()); }
  std::size_t source_size() const noexcept { return size_; }

 private:
  std::vector<std::size_t> line_starts_;
  std::size_t size_ = 0;
};

}  // namespace scadscope
