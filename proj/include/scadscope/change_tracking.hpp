#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scadscope {

enum class Origin { kHuman, kAi };

std::string_view to_string(Origin origin);
/// Throws Error(kPrecondition) for anything but "human" / "ai".
Origin origin_from_string(std::string_view text);

/// A line-ranged description of one edited chunk. Line numbers refer to
/// the current code; a deletion has start_line -1 and end_line set to the
/// last removed line of the previous code.
struct ChangeRecord {
  int start_line = -1;
  int end_line = -1;
  std::string description;
  Origin origin = Origin::kHuman;

  friend bool operator==(const ChangeRecord&, const ChangeRecord&) = default;
};

/// Wire form: exactly {"startLine", "endLine", "description"}. Origin is
/// carried by the list a record belongs to.
void to_json(nlohmann::json& j, const ChangeRecord& record);
/// Throws Error(kPrecondition) on a malformed object.
void from_json(const nlohmann::json& j, ChangeRecord& record);

/// Parses the strict JSON array of change chunks. Throws Error(kGeneration)
/// if the text is not exactly such an array or a record is invalid for a
/// document of `current_line_count` lines.
std::vector<ChangeRecord> parse_change_json(std::string_view text, int current_line_count,
                                            Origin origin);

/// "Line 22: ..." / "Lines 3-5: ..." / "Removed (previous line 7): ...".
std::string format_change(const ChangeRecord& record);

std::vector<std::string> split_lines(std::string_view text);

enum class DiffOp { kEqual, kDelete, kInsert };

struct DiffLine {
  DiffOp op;
  int old_line;  // 1-based, 0 when absent
  int new_line;
};

/// Minimal line edit script (longest common subsequence).
std::vector<DiffLine> diff_lines(const std::vector<std::string>& before,
                                 const std::vector<std::string>& after);

/// Change records computed locally from a line diff; empty iff the texts
/// have identical lines.
std::vector<ChangeRecord> local_changes(std::string_view before, std::string_view after,
                                        Origin origin);

/// Describes an edit of one line, naming changed call parameters when the
/// call itself is unchanged.
std::string describe_line_change(std::string_view before, std::string_view after);

}  // namespace scadscope
