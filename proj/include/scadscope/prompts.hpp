#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scadscope {

enum class TemplateId {
  kDescribeImages,
  kAnalyzeCode,
  kDescribeComponent,
  kCompareVersions,
  kGeneralDescribe,
  kSummarize,
  kMatchCodeParts,
  kTrackChanges,
  kCreateModel,
  kImproveCode,
  kChat,
};

std::string_view to_string(TemplateId id);
/// Throws Error(kNotFound) for unknown names.
TemplateId template_from_string(std::string_view name);
std::vector<TemplateId> all_templates();

/// Unmodified template text, placeholders included.
std::string_view template_body(TemplateId id);

/// Placeholder names ("code", "text", "n") occurring in the body.
std::vector<std::string> template_placeholders(TemplateId id);

/// The create-model body ends at its template marker; this output layout
/// is appended so the response can be parsed.
std::string_view create_model_template_suffix();

/// Substitutes every {name} placeholder in one pass. Substituted values are
/// not scanned again. Throws Error(kPrecondition) when a placeholder of the
/// body has no value.
std::string fill_template(TemplateId id, const std::map<std::string, std::string>& values);

}  // namespace scadscope
