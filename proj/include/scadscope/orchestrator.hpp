#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scadscope/change_tracking.hpp"
#include "scadscope/hierarchy.hpp"
#include "scadscope/llm.hpp"
#include "scadscope/report.hpp"

namespace scadscope {

struct TrackResult {
  std::vector<ChangeRecord> records;
  bool used_fallback = false;
  std::string warning;  // why the local diff was used
};

enum class DescribeMode { kModel, kComponent, kCompare, kGeneral };
std::string_view to_string(DescribeMode mode);
DescribeMode describe_mode_from_string(std::string_view text);

/// Component context for component mode; see `component_context`.
struct DescribeInput {
  DescribeMode mode = DescribeMode::kModel;
  std::string code;
  std::string previous_code;                 // compare, and change list in model mode
  std::vector<ImageAttachment> images;       // current views, or isolated renders
  std::vector<ImageAttachment> previous_images;  // compare mode
  nlohmann::json component = nlohmann::json::object();
  std::vector<std::string> render_errors;   // failed views, reported as caveats
};

struct DescribeResult {
  std::optional<AiReport> report;  // model mode only
  std::string narration;           // plain text; the report summary in model mode
  std::vector<std::string> caveats;
};

enum class GenerateMode { kCreate, kImprove };
std::string_view to_string(GenerateMode mode);
GenerateMode generate_mode_from_string(std::string_view text);

struct GenerateResult {
  std::string code;
  AiReport report;
  int attempts = 1;
};

struct ChatRoute {
  enum class Kind { kAnswer, kView, kComponent };
  Kind kind = Kind::kAnswer;
  std::string view;          // kView: default/top/bottom/front/rear/left/right
  std::string component_id;  // kComponent
};

struct ChatResult {
  ChatRoute route;
  std::string text;
};

/// Camera or component intent in a chat question, if any. Component
/// names are matched against `tree` (may be null).
ChatRoute route_chat(std::string_view question, const ComponentTree* tree);

/// {label, kind, children: [labels], siblings: [labels], operation?,
/// invisible?} for describe/component mode.
nlohmann::json component_context(const ComponentTree& tree, const ComponentNode& node);

/// The last fenced OpenSCAD block (''' or ``` fences). For improve
/// responses without a full program, Original/Improved snippet pairs are
/// applied to `existing_code`.
std::optional<std::string> extract_code(std::string_view response, std::string_view existing_code);

/// Removes markdown emphasis and heading marks so narration reads cleanly.
std::string plain_text(std::string_view text);

class Orchestrator {
 public:
  explicit Orchestrator(LlmProvider& provider) : provider_(provider) {}

  /// (x, x) returns no records without a provider call. Malformed model
  /// output is retried once; after that, or on a transport error, the
  /// local line diff is returned with `used_fallback` set.
  TrackResult track_changes(std::string_view previous_code, std::string_view current_code,
                            Origin origin);

  DescribeResult describe(const DescribeInput& input);

  /// Throws kPrecondition (empty request for create, empty code for
  /// improve) or kGeneration (no code, or code still unparseable after one
  /// repair round-trip; detail carries the raw response).
  GenerateResult generate_code(GenerateMode mode, std::string_view request_text,
                               std::string_view existing_code);

  ChatResult chat(std::string_view question, std::string_view code, const ComponentTree* tree);

  /// Throws kPrecondition on blank text.
  std::string summarize(std::string_view text);

  AiReport parse(std::string_view raw) const { return parse_report(raw); }

  LlmProvider& provider() { return provider_; }

 private:
  LlmProvider& provider_;
};

/// One user message holding the filled template, with `code` appended in a
/// fenced block when the template has no {code} slot.
ChatRequest build_request(TemplateId id, const std::map<std::string, std::string>& values,
                          std::string_view code, std::vector<ImageAttachment> images,
                          nlohmann::json context);

}  // namespace scadscope
