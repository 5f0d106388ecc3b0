#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scadscope/hierarchy.hpp"

namespace scadscope {

struct Rgba {
  double r = 1.0;
  double g = 0.0;
  double b = 1.0;
  double a = 0.5;
};

enum class ContextMode { kNormal, kBackground };

struct HighlightStyle {
  Rgba color;  // alpha in [0, 1]
  ContextMode context_mode = ContextMode::kNormal;
};

/// Everything the UI needs to reflect one selection in all panels.
struct HighlightBundle {
  std::string component_id;
  std::string label;
  SourceSpan code_span;
  std::vector<std::string> hierarchy_path;  // root first
  std::string highlighted_source;
  std::string isolated_source;
  std::optional<std::string> description_slot;  // token of a pending description
  std::string announce;
};

using Selection = std::variant<SourceSpan, std::string>;

/// Every inserted fragment is bracketed by these comments so it can be
/// removed again without touching the original bytes.
inline constexpr std::string_view kMarkerOpen = "/*@scadscope{*/";
inline constexpr std::string_view kMarkerClose = "/*}scadscope@*/";

/// Source with the component's instantiation wrapped in a color modifier.
/// Throws Error(kPrecondition) when the source does not parse,
/// Error(kNotFound) for unknown ids and Error(kUnsupportedSelection) for
/// truncated components.
std::string emit_highlighted(std::string_view source, const ComponentTree& tree,
                             std::string_view component_id, const HighlightStyle& style = {});

/// Source in which only the component renders solid; every other part of
/// the model carries the background modifier.
std::string emit_isolated(std::string_view source, const ComponentTree& tree,
                          std::string_view component_id);

/// Removes all marker-bracketed insertions.
std::string strip_wrappers(std::string_view emitted);

HighlightBundle cross_reference(const ComponentTree& tree, const Selection& selection,
                                const HighlightStyle& style = {});

}  // namespace scadscope
