#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scadscope/change_tracking.hpp"

namespace scadscope {

/// One `"CodeN", [label],[text]` entry followed by its code lines.
struct ComponentNote {
  std::string name;   // "Code1"
  std::string label;  // first bracketed field: part or function
  std::string text;   // remaining fields, joined with "; "
  std::string code;

  friend bool operator==(const ComponentNote&, const ComponentNote&) = default;
};

struct ReportSection {
  std::string heading;  // without the ## fences
  std::string body;

  friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct AiReport {
  std::string summary;
  std::string description;
  std::string evaluation;
  std::vector<ComponentNote> per_component;
  std::vector<ChangeRecord> code_changes;
  std::vector<std::string> caveats;
  std::vector<ReportSection> sections;  // every section in order of appearance
  std::string raw;

  bool structured() const { return !sections.empty(); }
  friend bool operator==(const AiReport&, const AiReport&) = default;
};

inline constexpr std::string_view kReportBegin = "***Report Begins***";
inline constexpr std::string_view kReportEnd = "***Report Ends***";

/// Total: never throws. Text without `##...##` headings yields a report
/// holding only `raw`. Change records in a "Code changes" section are read
/// as JSON and attributed to `origin`.
AiReport parse_report(std::string_view raw, Origin origin = Origin::kAi);

/// Delimited report with Description, Summary, Evaluation, Codes, Code
/// changes and Caveats sections; empty sections are omitted.
std::string format_report(const AiReport& report);

/// Splits "##Heading##" sections from the body between report or
/// template markers, or from the whole text when no marker is present.
std::vector<ReportSection> split_sections(std::string_view text);

std::vector<ComponentNote> parse_code_notes(std::string_view body);
std::string format_code_notes(const std::vector<ComponentNote>& notes);

void to_json(nlohmann::json& j, const AiReport& report);
void from_json(const nlohmann::json& j, AiReport& report);

}  // namespace scadscope
