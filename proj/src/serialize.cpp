#include "scadscope/serialize.hpp"

namespace scadscope {

void to_json(nlohmann::json& j, const SourceSpan& s) {
  j = {{"start_byte", s.start_byte}, {"end_byte", s.end_byte}, {"start_line", s.start_line},
       {"start_col", s.start_col},   {"end_line", s.end_line}, {"end_col", s.end_col}};
}

void from_json(const nlohmann::json& j, SourceSpan& s) {
  s.start_byte = j.at("start_byte").get<std::size_t>();
  s.end_byte = j.at("end_byte").get<std::size_t>();
  s.start_line = j.value("start_line", 1);
  s.start_col = j.value("start_col", 1);
  s.end_line = j.value("end_line", 1);
  s.end_col = j.value("end_col", 1);
}

void to_json(nlohmann::json& j, const ParseDiagnostic& d) {
  j = {{"severity", d.severity == Severity::kError ? "error" : "warning"},
       {"message", d.message},
       {"span", d.span}};
}

nlohmann::json tree_to_json(const ComponentNode& node) {
  nlohmann::json j = {{"id", node.id},
                      {"label", node.label},
                      {"kind", std::string(to_string(node.kind))},
                      {"span", node.span}};
  if (node.def_span) j["def_span"] = *node.def_span;
  if (!node.modifiers.empty()) j["modifiers"] = node.modifiers;
  if (!node.comment.empty()) j["comment"] = node.comment;
  if (node.expandable) j["expandable"] = true;
  auto& kids = j["children"] = nlohmann::json::array();
  for (const auto& c : node.children) kids.push_back(tree_to_json(c));
  return j;
}

nlohmann::json syntax_to_json(const SyntaxNode& node) {
  nlohmann::json j = {{"kind", std::string(to_string(node.kind))}, {"span", node.span}};
  if (!node.name.empty()) j["name"] = node.name;
  if (!node.modifiers.empty()) j["modifiers"] = node.modifiers;
  if (!node.children.empty()) {
    auto& kids = j["children"] = nlohmann::json::array();
    for (const auto& c : node.children) kids.push_back(syntax_to_json(c));
  }
  return j;
}

}  // namespace scadscope
