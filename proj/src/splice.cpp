#include "scadscope/splice.hpp"

#include <algorithm>

#include "scadscope/error.hpp"

namespace scadscope {

std::string splice(std::string_view source, std::vector<Edit> edits) {
  for (const auto& e : edits) {
    if (e.span.start_byte > e.span.end_byte || e.span.end_byte > source.size())
      throw Error(ErrorCode::kOverlappingEdits, "edit span out of range");
  }
  std::stable_sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    if (a.span.start_byte != b.span.start_byte) return a.span.start_byte < b.span.start_byte;
    return a.span.empty() && !b.span.empty();
  });
  for (std::size_t i = 1; i < edits.size(); ++i) {
    if (edits[i].span.start_byte < edits[i - 1].span.end_byte)
      throw Error(ErrorCode::kOverlappingEdits, "overlapping edits");
  }
  // right-to-left keeps earlier offsets valid
  std::string out(source);
  for (auto it = edits.rbegin(); it != edits.rend(); ++it) {
    out.replace(it->span.start_byte, it->span.size(), it->replacement);
  }
  return out;
}

}  // namespace scadscope
