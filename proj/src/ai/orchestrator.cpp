#include "scadscope/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "scadscope/error.hpp"

namespace scadscope {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fenced(std::string_view code) {
  std::string out = "'''openscad'''\n" + std::string(code);
  if (!out.ends_with("\n")) out += "\n";
  return out + "'''openscad'''";
}

int line_count(std::string_view code) { return static_cast<int>(split_lines(code).size()); }

std::string diagnostics_text(const ParseResult& parse) {
  std::string out;
  for (const auto& d : parse.diagnostics)
    out += "line " + std::to_string(d.span.start_line) + ", column " +
           std::to_string(d.span.start_col) + ": " + d.message + "\n";
  return out;
}

}  // namespace

std::string_view to_string(DescribeMode mode) {
  switch (mode) {
    case DescribeMode::kModel: return "model";
    case DescribeMode::kComponent: return "component";
    case DescribeMode::kCompare: return "compare";
    case DescribeMode::kGeneral: return "general";
  }
  return "model";
}

DescribeMode describe_mode_from_string(std::string_view text) {
  for (auto m : {DescribeMode::kModel, DescribeMode::kComponent, DescribeMode::kCompare,
                 DescribeMode::kGeneral})
    if (to_string(m) == text) return m;
  throw Error(ErrorCode::kPrecondition, "unknown describe mode '" + std::string(text) + "'");
}

std::string_view to_string(GenerateMode mode) {
  return mode == GenerateMode::kCreate ? "create" : "improve";
}

GenerateMode generate_mode_from_string(std::string_view text) {
  if (text == "create") return GenerateMode::kCreate;
  if (text == "improve") return GenerateMode::kImprove;
  throw Error(ErrorCode::kPrecondition, "unknown generate mode '" + std::string(text) + "'");
}

ChatRequest build_request(TemplateId id, const std::map<std::string, std::string>& values,
                          std::string_view code, std::vector<ImageAttachment> images,
                          nlohmann::json context) {
  ChatRequest req;
  req.template_id = id;
  std::string text = fill_template(id, values);
  if (id == TemplateId::kCreateModel) text += create_model_template_suffix();
  const auto slots = template_placeholders(id);
  if (!code.empty() && std::find(slots.begin(), slots.end(), "code") == slots.end())
    text += "\n\nOpenSCAD code:\n" + fenced(code);
  req.messages.push_back({"user", std::move(text), std::move(images)});
  req.context = std::move(context);
  return req;
}

ChatRoute route_chat(std::string_view question, const ComponentTree* tree) {
  const std::string q = lower(question);
  static const std::regex kVerb(R"(\b(show|view|display|render|switch|turn|rotate|look|see)\b)");
  static const std::regex kViewNoun(R"(\b(view|side|angle|perspective)\b)");
  static const std::regex kViewWord(
      R"(\b(top|bottom|front|rear|back|left|right|default|three[- ]quarter|isometric)\b)");
  std::smatch m;
  if (std::regex_search(q, kVerb) && std::regex_search(q, kViewNoun) &&
      std::regex_search(q, m, kViewWord)) {
    std::string v = m[1].str();
    if (v == "back") v = "rear";
    if (v != "top" && v != "bottom" && v != "front" && v != "rear" && v != "left" && v != "right")
      v = "default";
    return {ChatRoute::Kind::kView, v, ""};
  }
  static const std::regex kShow(
      R"(^\s*(?:please\s+)?(?:show|highlight|select|find)\s+(?:me\s+)?(?:the\s+)?(.+?)[\s.?!]*$)");
  if (tree && std::regex_match(q, m, kShow)) {
    const std::string phrase = trim(m[1].str());
    std::string ident = phrase;
    std::replace_if(ident.begin(), ident.end(), [](char c) { return c == ' ' || c == '-'; }, '_');
    for (const auto* node : tree->preorder()) {
      if (lower(node->name) == ident || lower(node->label) == phrase ||
          (!node->comment.empty() && lower(node->comment) == phrase))
        return {ChatRoute::Kind::kComponent, "", node->id};
    }
    if (phrase == "model" || phrase == "whole model" || phrase == "full model")
      return {ChatRoute::Kind::kComponent, "", tree->root().id};
  }
  return {};
}

nlohmann::json component_context(const ComponentTree& tree, const ComponentNode& node) {
  nlohmann::json ctx = {{"id", node.id}, {"label", node.label}, {"kind", to_string(node.kind)}};
  auto children = nlohmann::json::array();
  for (const auto& c : node.children) children.push_back(c.label);
  ctx["children"] = children;
  auto siblings = nlohmann::json::array();
  if (const auto* parent = tree.parent(node)) {
    for (const auto& s : parent->children)
      if (&s != &node) siblings.push_back(s.label);
    if (parent->kind == ComponentKind::kBooleanGroup) ctx["operation"] = parent->name;
  }
  ctx["siblings"] = siblings;
  bool invisible = false;
  for (const auto* n : tree.path_to(node))
    if (n->site && (n->site->modifiers.find('*') != std::string::npos ||
                    n->site->modifiers.find('%') != std::string::npos))
      invisible = true;
  if (invisible) ctx["invisible"] = true;
  return ctx;
}

std::optional<std::string> extract_code(std::string_view response, std::string_view existing_code) {
  struct Block {
    std::size_t end;
    std::string code;
  };
  std::optional<Block> best;
  auto consider = [&](std::size_t end, std::string code) {
    if (!best || end > best->end) best = Block{end, std::move(code)};
  };
  // ''' fences come in open/close pairs.
  constexpr std::string_view kQuote = "'''openscad'''";
  std::vector<std::size_t> quotes;
  for (auto p = response.find(kQuote); p != std::string_view::npos; p = response.find(kQuote, p + 1))
    quotes.push_back(p);
  for (std::size_t i = 0; i + 1 < quotes.size(); i += 2) {
    const std::size_t b = quotes[i] + kQuote.size();
    consider(quotes[i + 1] + kQuote.size(), trim(response.substr(b, quotes[i + 1] - b)) + "\n");
  }
  // Markdown fences, optionally tagged.
  std::size_t pos = 0;
  while (true) {
    const auto open = response.find("```", pos);
    if (open == std::string_view::npos) break;
    const auto eol = response.find('\n', open);
    if (eol == std::string_view::npos) break;
    const auto close = response.find("```", eol);
    if (close == std::string_view::npos) break;
    const std::string tag = trim(response.substr(open + 3, eol - open - 3));
    if (tag.empty() || lower(tag) == "openscad" || lower(tag) == "scad")
      consider(close + 3, trim(response.substr(eol + 1, close - eol - 1)) + "\n");
    pos = close + 3;
  }
  if (best) return best->code;

  if (existing_code.empty()) return std::nullopt;
  std::string code(existing_code);
  bool applied = false;
  for (const auto& note : parse_report(response).per_component) {
    const auto o = note.code.find("Original Code:");
    const auto i = note.code.find("Improved Code:");
    if (o == std::string::npos || i == std::string::npos || i < o) continue;
    const std::string original = trim(std::string_view(note.code).substr(o + 14, i - o - 14));
    const std::string improved = trim(std::string_view(note.code).substr(i + 14));
    if (original.empty()) continue;
    if (auto at = code.find(original); at != std::string::npos) {
      code.replace(at, original.size(), improved);
      applied = true;
    }
  }
  if (applied) return code;
  return std::nullopt;
}

std::string plain_text(std::string_view text) {
  std::string out;
  bool line_start = true;
  for (char c : text) {
    if (c == '*' || c == '`') continue;
    if (line_start && c == '#') continue;
    line_start = c == '\n' || (line_start && (c == ' ' || c == '\t'));
    out += c;
  }
  return trim(out);
}

TrackResult Orchestrator::track_changes(std::string_view previous_code,
                                        std::string_view current_code, Origin origin) {
  TrackResult out;
  if (split_lines(previous_code) == split_lines(current_code)) return out;
  auto request = build_request(TemplateId::kTrackChanges, {}, "", {},
                               {{"previous_code", previous_code}, {"code", current_code}});
  request.messages.front().text += "\n\nPrevious OpenSCAD code:\n" + fenced(previous_code) +
                                   "\n\nCurrent OpenSCAD code:\n" + fenced(current_code);
  const int lines = line_count(current_code);
  std::string last_error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const auto reply = provider_.complete(request);
      out.records = parse_change_json(trim(reply.text), lines, origin);
      return out;
    } catch (const Error& e) {
      last_error = e.what();
      if (e.code() == ErrorCode::kTransport) break;
      if (e.code() != ErrorCode::kGeneration) throw;
    }
  }
  out.records = local_changes(previous_code, current_code, origin);
  out.used_fallback = true;
  out.warning = "change list computed from a local line diff: " + last_error;
  return out;
}

DescribeResult Orchestrator::describe(const DescribeInput& in) {
  DescribeResult out;
  for (const auto& e : in.render_errors) out.caveats.push_back("Render failed: " + e);
  if (in.images.empty())
    out.caveats.push_back("No rendered views were available; this description is based on the "
                          "code only.");

  switch (in.mode) {
    case DescribeMode::kModel: {
      AiReport merged;
      std::string raw;
      if (!in.images.empty()) {
        const auto reply = provider_.complete(build_request(
            TemplateId::kDescribeImages, {}, in.code, in.images, {{"code", in.code}}));
        const auto r = parse_report(reply.text);
        merged.description = r.description;
        merged.summary = r.summary;
        merged.sections = r.sections;
        raw = reply.text;
      }
      const auto reply = provider_.complete(
          build_request(TemplateId::kAnalyzeCode, {{"code", in.code}}, in.code, {}, {{"code", in.code}}));
      const auto analysis = parse_report(reply.text);
      if (merged.description.empty()) merged.description = analysis.description;
      if (merged.summary.empty()) merged.summary = analysis.summary;
      merged.evaluation = analysis.evaluation;
      merged.per_component = analysis.per_component;
      merged.sections.insert(merged.sections.end(), analysis.sections.begin(), analysis.sections.end());
      raw += (raw.empty() ? "" : "\n") + reply.text;
      auto changes = track_changes(in.previous_code, in.code, Origin::kAi);
      merged.code_changes = std::move(changes.records);
      if (changes.used_fallback) out.caveats.push_back(changes.warning);
      merged.caveats = out.caveats;
      merged.raw = raw;
      out.narration = merged.summary;
      out.report = std::move(merged);
      return out;
    }
    case DescribeMode::kComponent: {
      auto req = build_request(TemplateId::kDescribeComponent, {}, "", in.images,
                               {{"code", in.code}, {"component", in.component}});
      auto& text = req.messages.front().text;
      text += "\n\nPart: " + in.component.value("label", std::string()) +
              "\n\nFull model code:\n" + fenced(in.code);
      if (auto it = in.component.find("code"); it != in.component.end() && it->is_string())
        text += "\n\nPart code:\n" + fenced(it->get<std::string>());
      out.narration = plain_text(provider_.complete(req).text);
      return out;
    }
    case DescribeMode::kCompare: {
      if (in.previous_images.size() != in.images.size())
        throw Error(ErrorCode::kPrecondition,
                    "compare needs the same number of previous and current images");
      std::vector<ImageAttachment> images = in.previous_images;
      images.insert(images.end(), in.images.begin(), in.images.end());
      auto req = build_request(TemplateId::kCompareVersions,
                               {{"n", std::to_string(in.images.size())}}, "", std::move(images),
                               {{"code", in.code}, {"previous_code", in.previous_code}});
      req.messages.front().text += "\n\nPrevious OpenSCAD code:\n" + fenced(in.previous_code) +
                                   "\n\nCurrent OpenSCAD code:\n" + fenced(in.code);
      out.narration = plain_text(provider_.complete(req).text);
      return out;
    }
    case DescribeMode::kGeneral: {
      const auto reply = provider_.complete(
          build_request(TemplateId::kGeneralDescribe, {}, in.code, in.images, {{"code", in.code}}));
      out.narration = plain_text(reply.text);
      return out;
    }
  }
  return out;
}

GenerateResult Orchestrator::generate_code(GenerateMode mode, std::string_view request_text,
                                           std::string_view existing_code) {
  const std::string request = trim(request_text);
  ChatRequest req;
  if (mode == GenerateMode::kCreate) {
    if (request.empty()) throw Error(ErrorCode::kPrecondition, "create needs a description of the model");
    req = build_request(TemplateId::kCreateModel, {{"text", request}}, "", {}, {{"text", request}});
  } else {
    if (trim(existing_code).empty())
      throw Error(ErrorCode::kPrecondition, "improve needs existing code");
    const std::string ask = request.empty() ? "Improve the code." : request;
    req = build_request(TemplateId::kImproveCode, {{"text", ask}, {"code", std::string(existing_code)}},
                        existing_code, {}, {{"text", ask}, {"code", existing_code}});
  }
  const std::string base = mode == GenerateMode::kImprove ? std::string(existing_code) : "";

  GenerateResult out;
  std::string raw;
  for (out.attempts = 1; out.attempts <= 2; ++out.attempts) {
    raw = provider_.complete(req).text;
    const auto code = extract_code(raw, base);
    if (!code) {
      if (out.attempts == 2) throw Error(ErrorCode::kGeneration, "no OpenSCAD code in the response", raw);
      req.messages.push_back({"assistant", raw, {}});
      req.messages.push_back({"user",
                              "The response contains no OpenSCAD program. Return the complete "
                              "program in a '''openscad''' fenced block.",
                              {}});
      req.context["diagnostics"] = nlohmann::json::array({"no code block"});
      continue;
    }
    const auto parsed = scadscope::parse(*code);
    if (parsed->ok()) {
      out.code = *code;
      out.report = parse_report(raw);
      out.report.code_changes = track_changes(base, out.code, Origin::kAi).records;
      return out;
    }
    if (out.attempts == 2)
      throw Error(ErrorCode::kGeneration, "generated code does not parse: " + diagnostics_text(*parsed),
                  raw);
    const std::string diags = diagnostics_text(*parsed);
    req.messages.push_back({"assistant", raw, {}});
    req.messages.push_back({"user",
                            "The OpenSCAD code you returned does not parse:\n" + diags +
                                "Return the complete corrected program in the same format.",
                            {}});
    req.context["diagnostics"] = diags;
  }
  throw Error(ErrorCode::kGeneration, "generation failed", raw);
}

ChatResult Orchestrator::chat(std::string_view question, std::string_view code,
                              const ComponentTree* tree) {
  ChatResult out;
  out.route = route_chat(question, tree);
  switch (out.route.kind) {
    case ChatRoute::Kind::kView:
      out.text = "Showing the model from the " + out.route.view + " view.";
      return out;
    case ChatRoute::Kind::kComponent:
      out.text = "Showing " + resolve_component(*tree, out.route.component_id).label + ".";
      return out;
    case ChatRoute::Kind::kAnswer:
      break;
  }
  const auto reply = provider_.complete(build_request(
      TemplateId::kChat, {{"text", std::string(question)}, {"code", std::string(code)}}, code, {},
      {{"text", question}, {"code", code}}));
  out.text = trim(reply.text);
  return out;
}

std::string Orchestrator::summarize(std::string_view text) {
  if (trim(text).empty()) throw Error(ErrorCode::kPrecondition, "nothing to summarize");
  const auto reply = provider_.complete(build_request(
      TemplateId::kSummarize, {{"text", std::string(text)}}, "", {}, {{"text", text}}));
  return trim(reply.text);
}

}  // namespace scadscope
