#pragma once

// JSON wire forms shared by the CLI and the HTTP service.

#include <json.hpp>

#include "scadscope/diagnostic.hpp"
#include "scadscope/hierarchy.hpp"
#include "scadscope/source_span.hpp"

namespace scadscope {

void to_json(nlohmann::json& j, const SourceSpan& span);
void from_json(const nlohmann::json& j, SourceSpan& span);
void to_json(nlohmann::json& j, const ParseDiagnostic& diag);

/// {id, label, kind, span, children} plus optional extras
/// (def_span, modifiers, comment, expandable).
nlohmann::json tree_to_json(const ComponentNode& node);

nlohmann::json syntax_to_json(const SyntaxNode& node);

}  // namespace scadscope
