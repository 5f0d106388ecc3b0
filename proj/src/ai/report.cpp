#include "scadscope/report.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>
#include <regex>

namespace scadscope {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Drops blank leading/trailing lines but keeps the indentation of the first
// non-blank one.
std::string trim_block(std::string_view s) {
  std::size_t b = 0;
  while (true) {
    const auto nl = s.find('\n', b);
    if (nl == std::string_view::npos) break;
    if (s.substr(b, nl - b).find_first_not_of(" \t\r") != std::string_view::npos) break;
    b = nl + 1;
  }
  s.remove_prefix(b);
  const auto e = s.find_last_not_of(" \t\r\n");
  return e == std::string_view::npos ? "" : std::string(s.substr(0, e + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  return lower(text.substr(0, prefix.size())) == prefix;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    out.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::string_view report_body(std::string_view text) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kMarkers = {{
      {kReportBegin, kReportEnd},
      {"***Template Begins***", "***Template Ends***"},
      {"*Template Begins*", "*Template Ends*"},
  }};
  for (const auto& [open, close] : kMarkers) {
    const auto b = text.find(open);
    if (b == std::string_view::npos) continue;
    auto body = text.substr(b + open.size());
    const auto e = body.find(close);
    return e == std::string_view::npos ? body : body.substr(0, e);
  }
  return text;
}

std::optional<std::string> heading_of(std::string_view line) {
  const std::string t = trim(line);
  if (t.size() > 4 && t.starts_with("##") && t.ends_with("##")) {
    std::string inner = trim(std::string_view(t).substr(2, t.size() - 4));
    if (!inner.empty() && inner.find("##") == std::string::npos) return inner;
  }
  return std::nullopt;
}

// Reads `[a],[b], ...`; nested brackets stay inside a field.
std::vector<std::string> bracket_fields(std::string_view rest) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (true) {
    while (i < rest.size() && (std::isspace(static_cast<unsigned char>(rest[i])) || rest[i] == ','))
      ++i;
    if (i >= rest.size() || rest[i] != '[') break;
    int depth = 0;
    std::size_t j = i;
    for (; j < rest.size(); ++j) {
      if (rest[j] == '[') ++depth;
      else if (rest[j] == ']' && --depth == 0) break;
    }
    if (j >= rest.size()) break;
    fields.push_back(trim(rest.substr(i + 1, j - i - 1)));
    i = j + 1;
  }
  return fields;
}

std::vector<ChangeRecord> lenient_changes(std::string_view body, Origin origin) {
  std::vector<ChangeRecord> out;
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (!j.is_array()) return out;
  for (const auto& item : j) {
    try {
      ChangeRecord r;
      from_json(item, r);
      r.origin = origin;
      out.push_back(std::move(r));
    } catch (const std::exception&) {
    }
  }
  return out;
}

}  // namespace

std::vector<ReportSection> split_sections(std::string_view text) {
  std::vector<ReportSection> out;
  std::string body;
  bool open = false;
  auto flush = [&] {
    if (open) out.back().body = trim_block(body);
    body.clear();
  };
  for (auto line : lines_of(report_body(text))) {
    if (auto h = heading_of(line)) {
      flush();
      out.push_back({*h, ""});
      open = true;
      continue;
    }
    body.append(line);
    body.push_back('\n');
  }
  flush();
  return out;
}

std::vector<ComponentNote> parse_code_notes(std::string_view body) {
  static const std::regex kHeader(R"re(^\s*"([^"]+)"\s*,\s*(.*)$)re");
  std::vector<ComponentNote> out;
  std::string code;
  auto flush = [&] {
    if (!out.empty()) out.back().code = trim_block(code);
    code.clear();
  };
  for (auto line : lines_of(body)) {
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_match(line.begin(), line.end(), m, kHeader)) {
      flush();
      ComponentNote note;
      note.name = m[1].str();
      const std::string rest = m[2].str();
      auto fields = bracket_fields(rest);
      if (fields.empty()) {
        std::string t = trim(rest);
        while (!t.empty() && t.back() == ',') t.pop_back();
        note.label = trim(t);
      } else {
        note.label = fields.front();
        for (std::size_t i = 1; i < fields.size(); ++i)
          note.text += (i > 1 ? "; " : "") + fields[i];
      }
      out.push_back(std::move(note));
      continue;
    }
    if (trim(line) == "...") continue;
    code.append(line);
    code.push_back('\n');
  }
  flush();
  return out;
}

std::string format_code_notes(const std::vector<ComponentNote>& notes) {
  std::string out;
  for (const auto& n : notes) {
    if (!out.empty()) out += "\n";
    out += "\"" + n.name + "\", [" + n.label + "],";
    if (!n.text.empty()) out += "[" + n.text + "]";
    out += "\n";
    if (!n.code.empty()) out += n.code + "\n";
  }
  return out;
}

AiReport parse_report(std::string_view raw, Origin origin) {
  AiReport r;
  r.raw = std::string(raw);
  try {
    r.sections = split_sections(raw);
  } catch (const std::exception&) {
    r.sections.clear();
    return r;
  }
  for (const auto& s : r.sections) {
    const std::string h = lower(s.heading);
    if (starts_with_ci(h, "summary")) {
      r.summary = s.body;
    } else if (starts_with_ci(h, "description")) {
      r.description = s.body;
    } else if (starts_with_ci(h, "evaluation")) {
      r.evaluation = s.body;
    } else if (h == "codes" || starts_with_ci(h, "details for codes")) {
      auto notes = parse_code_notes(s.body);
      r.per_component.insert(r.per_component.end(), notes.begin(), notes.end());
    } else if (h == "code changes") {
      auto changes = lenient_changes(s.body, origin);
      r.code_changes.insert(r.code_changes.end(), changes.begin(), changes.end());
    } else if (h == "caveats") {
      for (auto line : lines_of(s.body))
        if (auto t = trim(line); !t.empty()) r.caveats.push_back(t);
    }
  }
  return r;
}

std::string format_report(const AiReport& r) {
  std::string out(kReportBegin);
  out += "\n";
  auto section = [&](std::string_view heading, const std::string& body) {
    if (body.empty()) return;
    out += "##" + std::string(heading) + "##\n" + body + "\n\n";
  };
  section("Description of the model", r.description);
  section("Summary of the model", r.summary);
  section("Evaluation of the code", r.evaluation);
  section("Codes", trim_block(format_code_notes(r.per_component)));
  if (!r.code_changes.empty()) section("Code changes", nlohmann::json(r.code_changes).dump());
  std::string caveats;
  for (const auto& c : r.caveats) caveats += (caveats.empty() ? "" : "\n") + c;
  section("Caveats", caveats);
  while (out.ends_with("\n\n")) out.pop_back();
  out += std::string(kReportEnd) + "\n";
  return out;
}

void to_json(nlohmann::json& j, const AiReport& r) {
  auto notes = nlohmann::json::array();
  for (const auto& n : r.per_component)
    notes.push_back({{"name", n.name}, {"label", n.label}, {"text", n.text}, {"code", n.code}});
  auto sections = nlohmann::json::array();
  for (const auto& s : r.sections) sections.push_back({{"heading", s.heading}, {"body", s.body}});
  j = nlohmann::json{{"summary", r.summary},           {"description", r.description},
                     {"evaluation", r.evaluation},     {"per_component", notes},
                     {"code_changes", r.code_changes}, {"caveats", r.caveats},
                     {"sections", sections},           {"raw", r.raw}};
}

void from_json(const nlohmann::json& j, AiReport& r) {
  r = AiReport{};
  r.summary = j.value("summary", "");
  r.description = j.value("description", "");
  r.evaluation = j.value("evaluation", "");
  r.raw = j.value("raw", "");
  for (const auto& n : j.value("per_component", nlohmann::json::array()))
    r.per_component.push_back({n.value("name", ""), n.value("label", ""), n.value("text", ""),
                               n.value("code", "")});
  for (const auto& c : j.value("code_changes", nlohmann::json::array())) {
    ChangeRecord rec;
    from_json(c, rec);
    rec.origin = Origin::kAi;
    r.code_changes.push_back(std::move(rec));
  }
  r.caveats = j.value("caveats", std::vector<std::string>{});
  for (const auto& s : j.value("sections", nlohmann::json::array()))
    r.sections.push_back({s.value("heading", ""), s.value("body", "")});
}

}  // namespace scadscope
