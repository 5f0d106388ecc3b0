#include <algorithm>
#include <map>
#include <regex>
#include <sstream>

#include "scadscope/change_tracking.hpp"
#include "scadscope/hierarchy.hpp"
#include "scadscope/llm.hpp"
#include "scadscope/report.hpp"

namespace scadscope {

namespace {

std::string ctx_string(const nlohmann::json& ctx, const char* key) {
  auto it = ctx.find(key);
  return it != ctx.end() && it->is_string() ? it->get<std::string>() : std::string();
}

std::vector<std::string> ctx_strings(const nlohmann::json& ctx, const char* key) {
  std::vector<std::string> out;
  auto it = ctx.find(key);
  if (it == ctx.end() || !it->is_array()) return out;
  for (const auto& v : *it)
    if (v.is_string()) out.push_back(v.get<std::string>());
  return out;
}

std::string join_words(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::string count_noun(std::size_t n, const std::string& noun) {
  return std::to_string(n) + " " + noun + (n == 1 ? "" : "s");
}

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct Model {
  std::shared_ptr<const ParseResult> parse;
  std::optional<ComponentTree> tree;

  explicit Model(const std::string& code) : parse(scadscope::parse(code)) {
    tree.emplace(build_hierarchy(parse));
  }

  std::vector<std::string> top_labels() const {
    std::vector<std::string> out;
    for (const auto& c : tree->root().children) out.push_back(c.label);
    return out;
  }

  std::vector<std::string> module_names() const {
    std::vector<std::string> out;
    for (const auto& s : parse->root.children)
      if (s.kind == NodeKind::kModuleDef) out.push_back(s.name);
    return out;
  }

  // Primitive name -> number of instances in the expanded tree.
  std::map<std::string, std::size_t> primitive_counts() const {
    BuildOptions deep;
    deep.expand_depth = deep.max_module_depth;
    const auto full = build_hierarchy(parse, deep);
    std::map<std::string, std::size_t> counts;
    for (const auto* n : full.preorder())
      if (n->kind == ComponentKind::kPrimitive) ++counts[n->name];
    return counts;
  }
};

std::string parts_sentence(const Model& m) {
  const auto labels = m.top_labels();
  if (labels.empty()) return "The model is empty.";
  if (labels.size() == 1) return "The model consists of one part: " + labels.front() + ".";
  return "The model is made of " + count_noun(labels.size(), "part") + ": " + join_words(labels) + ".";
}

std::string primitives_sentence(const Model& m) {
  std::vector<std::string> items;
  for (const auto& [name, n] : m.primitive_counts()) items.push_back(count_noun(n, name));
  if (items.empty()) return "";
  return "It is built from " + join_words(items) + ".";
}

std::vector<ComponentNote> component_notes(const Model& m, bool with_purpose) {
  std::vector<ComponentNote> notes;
  for (const auto& c : m.tree->root().children) {
    ComponentNote note;
    note.name = "Code" + std::to_string(notes.size() + 1);
    note.label = c.label;
    if (with_purpose) note.text = "Creates " + c.label;
    note.code = std::string(slice(m.parse->source, c.span));
    notes.push_back(std::move(note));
  }
  return notes;
}

std::string evaluation_sentence(const Model& m) {
  if (!m.parse->ok()) {
    const auto& d = m.parse->diagnostics.front();
    return "The code has " + count_noun(m.parse->diagnostics.size(), "syntax error") +
           "; the first is on line " + std::to_string(d.span.start_line) + ": " + d.message + ".";
  }
  const auto modules = m.module_names();
  if (modules.empty()) return "The code parses without errors and uses no modules.";
  return "The code parses without errors and is organized into " +
         count_noun(modules.size(), "module") + ": " + join_words(modules) + ".";
}

std::string first_sentence(const std::string& text) {
  static const std::regex kEnd(R"([.!?](\s|$))");
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::smatch m;
  const std::string rest = text.substr(b);
  std::string sentence = std::regex_search(rest, m, kEnd)
                             ? rest.substr(0, static_cast<std::size_t>(m.position(0)) + 1)
                             : rest;
  const auto e = sentence.find_last_not_of(" \t\r\n");
  sentence = sentence.substr(0, e + 1);
  // Paragraph breaks end a sentence too.
  if (auto p = sentence.find("\n\n"); p != std::string::npos) sentence = sentence.substr(0, p);
  return sentence;
}

std::string create_code(const std::string& request) {
  static const std::regex kShape(R"(\b(sphere|ball|cube|box|cylinder)s?\b)", std::regex::icase);
  static const std::regex kNumber(R"(\b(radius|diameter|height|size|side|width)\s+(?:of\s+)?(\d+(?:\.\d+)?))",
                                  std::regex::icase);
  struct Shape {
    std::string kind;
    std::map<std::string, double> dims;
  };
  std::vector<Shape> shapes;
  std::vector<std::size_t> starts;
  for (auto it = std::sregex_iterator(request.begin(), request.end(), kShape);
       it != std::sregex_iterator(); ++it) {
    std::string word = (*it)[1].str();
    std::transform(word.begin(), word.end(), word.begin(), ::tolower);
    if (word == "ball") word = "sphere";
    if (word == "box") word = "cube";
    shapes.push_back({word, {}});
    starts.push_back(static_cast<std::size_t>(it->position(0)));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const std::size_t end = i + 1 < starts.size() ? starts[i + 1] : request.size();
    const std::string tail = request.substr(starts[i], end - starts[i]);
    for (auto it = std::sregex_iterator(tail.begin(), tail.end(), kNumber);
         it != std::sregex_iterator(); ++it) {
      std::string key = (*it)[1].str();
      std::transform(key.begin(), key.end(), key.begin(), ::tolower);
      if (key == "side" || key == "width") key = "size";
      shapes[i].dims.emplace(key, std::stod((*it)[2].str()));
    }
  }
  std::string code = "// " + request + "\n";
  if (shapes.empty()) return code + "cube(10);  // placeholder shape\n";
  double x = 0;
  for (const auto& s : shapes) {
    auto dim = [&](const char* k) -> std::optional<double> {
      auto it = s.dims.find(k);
      return it == s.dims.end() ? std::nullopt : std::optional<double>(it->second);
    };
    std::string call;
    double extent = 10;
    if (s.kind == "sphere") {
      if (auto r = dim("radius")) call = "sphere(" + format_number(*r) + ")", extent = 2 * *r;
      else if (auto d = dim("diameter")) call = "sphere(d=" + format_number(*d) + ")", extent = *d;
      else call = "sphere(10)", extent = 20;
    } else if (s.kind == "cube") {
      const double size = dim("size").value_or(10);
      call = "cube(" + format_number(size) + ")";
      extent = size;
    } else {
      const double h = dim("height").value_or(10);
      if (auto d = dim("diameter")) call = "cylinder(h=" + format_number(h) + ", d=" + format_number(*d) + ")", extent = *d;
      else {
        const double r = dim("radius").value_or(5);
        call = "cylinder(h=" + format_number(h) + ", r=" + format_number(r) + ")";
        extent = 2 * r;
      }
    }
    if (shapes.size() > 1 && x != 0)
      code += "translate([" + format_number(x) + ", 0, 0])\n    ";
    code += call + ";\n";
    x += extent + 5;
  }
  return code;
}

std::string fenced(const std::string& code) {
  return "'''openscad'''\n" + code + (code.ends_with("\n") ? "" : "\n") + "'''openscad'''";
}

std::string statement_comment(const SyntaxNode& s) {
  switch (s.kind) {
    case NodeKind::kModuleDef: return "Module " + s.name;
    case NodeKind::kModuleCall: return "Place " + s.name;
    case NodeKind::kPrimitive: return "A " + s.name;
    case NodeKind::kTransform:
    case NodeKind::kBoolean: return "Apply " + s.name;
    case NodeKind::kAssign: return "Parameter " + s.name;
    case NodeKind::kFor: return "Repeat the following shape";
    case NodeKind::kIf: return "Conditional part";
    default: return "";
  }
}

// Puts a comment line above each top-level statement that starts its line.
std::string add_comments(const ParseResult& parse) {
  const std::string& src = parse.source;
  std::vector<std::pair<std::size_t, std::string>> inserts;
  std::size_t last_line_start = std::string::npos;
  for (const auto& s : parse.root.children) {
    const std::string text = statement_comment(s);
    if (text.empty()) continue;
    const std::size_t start = s.span.start_byte;
    const auto nl = src.rfind('\n', start == 0 ? 0 : start - 1);
    const std::size_t line_start = start == 0 || nl == std::string::npos ? 0 : nl + 1;
    if (line_start == last_line_start) continue;
    const std::string indent = src.substr(line_start, start - line_start);
    if (indent.find_first_not_of(" \t") != std::string::npos) continue;
    last_line_start = line_start;
    inserts.emplace_back(line_start, indent + "// " + text + "\n");
  }
  std::string out = src;
  for (auto it = inserts.rbegin(); it != inserts.rend(); ++it) out.insert(it->first, it->second);
  return out;
}

std::string improve(const std::string& code, const std::string& request) {
  const Model m(code);
  std::string lowered = request;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(), ::tolower);
  const bool comments = lowered.find("comment") != std::string::npos;
  const std::string improved = comments ? add_comments(*m.parse) : code;

  std::string out = "***Template Begins***\n##Suggestions for improving the code##\n";
  out += comments ? "Add a comment above each top-level statement so every part is announced "
                    "before its code."
                  : "No changes are needed for this request.";
  out += "\n\n##Evaluation of the code##\n" + evaluation_sentence(m) + "\n\n";
  out += "##Details for Codes' improvement##\n";
  std::size_t k = 0;
  for (const auto& s : m.parse->root.children) {
    const std::string text = statement_comment(s);
    if (!comments || text.empty()) continue;
    const std::string stmt(slice(m.parse->source, s.span));
    const std::string first_line = stmt.substr(0, stmt.find('\n'));
    out += "\"Code" + std::to_string(++k) + "\", [" + text + "],[Add a comment]\n";
    out += "Original Code: " + first_line + "\nImproved Code: // " + text + "\n" + first_line + "\n\n";
  }
  out += "##Improved code##\n" + fenced(improved) + "\n***Template Ends***\n";
  return out;
}

std::string describe_component(const nlohmann::json& ctx) {
  const nlohmann::json comp = ctx.value("component", nlohmann::json::object());
  const std::string label = ctx_string(comp, "label");
  const auto children = ctx_strings(comp, "children");
  const auto siblings = ctx_strings(comp, "siblings");
  std::string out = (label.empty() ? std::string("This part") : label) + " is one part of the full model";
  out += siblings.empty() ? "." : ", placed alongside " + join_words(siblings) + ".";
  if (children.empty())
    out += " It is a single shape with no sub-parts.";
  else
    out += " It is made of " + count_noun(children.size(), "part") + ": " + join_words(children) + ".";
  if (auto op = ctx_string(comp, "operation"); !op.empty())
    out += " It is used in a " + op + " operation.";
  if (comp.value("invisible", false)) out += " It is not visible in the rendered model.";
  return out;
}

std::string compare(const nlohmann::json& ctx) {
  const std::string prev = ctx_string(ctx, "previous_code");
  const std::string curr = ctx_string(ctx, "code");
  const auto changes = local_changes(prev, curr, Origin::kAi);
  if (changes.empty()) return "There is no visible change between the previous and the current model.";
  std::string out = "The current model differs from the previous model in " +
                    count_noun(changes.size(), "place") + ".";
  for (const auto& c : changes) out += " " + format_change(c) + ".";
  return out;
}

std::string chat(const nlohmann::json& ctx) {
  const std::string code = ctx_string(ctx, "code");
  const Model m(code);
  if (m.tree->root().children.empty())
    return "The current code is empty, so there is no model yet. Could you describe the shape "
           "you would like to create?";
  const auto labels = m.top_labels();
  std::string out = "Based on the code, your model ";
  out += labels.size() == 1 ? "is a single part: " + labels.front() + "."
                            : "has " + count_noun(labels.size(), "part") + ": " + join_words(labels) + ".";
  if (auto p = primitives_sentence(m); !p.empty()) out += " " + p;
  return out;
}

}  // namespace

ChatResponse MockProvider::complete(const ChatRequest& request) {
  ++calls_;
  const auto& ctx = request.context;
  const std::string code = ctx_string(ctx, "code");
  std::string text;
  switch (request.template_id) {
    case TemplateId::kDescribeImages: {
      const Model m(code);
      AiReport r;
      r.description = parts_sentence(m) + (primitives_sentence(m).empty() ? "" : " " + primitives_sentence(m));
      r.summary = parts_sentence(m);
      text = format_report(r);
      break;
    }
    case TemplateId::kAnalyzeCode: {
      const Model m(code);
      AiReport r;
      r.description = parts_sentence(m);
      r.summary = parts_sentence(m);
      r.evaluation = evaluation_sentence(m);
      r.per_component = component_notes(m, true);
      text = format_report(r);
      break;
    }
    case TemplateId::kMatchCodeParts: {
      AiReport r;
      r.per_component = component_notes(Model(code), false);
      text = format_report(r);
      break;
    }
    case TemplateId::kDescribeComponent:
      text = describe_component(ctx);
      break;
    case TemplateId::kCompareVersions:
      text = compare(ctx);
      break;
    case TemplateId::kGeneralDescribe: {
      const Model m(code);
      text = parts_sentence(m);
      if (auto p = primitives_sentence(m); !p.empty()) text += " " + p;
      break;
    }
    case TemplateId::kSummarize:
      text = first_sentence(ctx_string(ctx, "text"));
      break;
    case TemplateId::kTrackChanges:
      text = nlohmann::json(local_changes(ctx_string(ctx, "previous_code"), code, Origin::kAi)).dump();
      break;
    case TemplateId::kCreateModel: {
      const std::string request_text = ctx_string(ctx, "text");
      text = "*Template Begins*\n##Description of the model##\n" + first_sentence(request_text) +
             "\n\n##Code##\n" + fenced(create_code(request_text)) + "\n*Template Ends*\n";
      break;
    }
    case TemplateId::kImproveCode:
      text = improve(code, ctx_string(ctx, "text"));
      break;
    case TemplateId::kChat:
      text = chat(ctx);
      break;
  }
  return {text, "mock"};
}

}  // namespace scadscope
