#include "scadscope/change_tracking.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

#include <json.hpp>

#include "scadscope/error.hpp"
#include "scadscope/lexer.hpp"

namespace scadscope {

std::string_view to_string(Origin origin) { return origin == Origin::kAi ? "ai" : "human"; }

Origin origin_from_string(std::string_view text) {
  if (text == "human") return Origin::kHuman;
  if (text == "ai") return Origin::kAi;
  throw Error(ErrorCode::kPrecondition, "origin must be 'human' or 'ai'", std::string(text));
}

void to_json(nlohmann::json& j, const ChangeRecord& r) {
  j = nlohmann::json{{"startLine", r.start_line}, {"endLine", r.end_line},
                     {"description", r.description}};
}

void from_json(const nlohmann::json& j, ChangeRecord& r) {
  if (!j.is_object() || !j.contains("startLine") || !j.contains("endLine") ||
      !j.contains("description") || !j["startLine"].is_number_integer() ||
      !j["endLine"].is_number_integer() || !j["description"].is_string())
    throw Error(ErrorCode::kPrecondition, "change record needs integer startLine/endLine and a "
                                          "string description");
  r.start_line = j["startLine"].get<int>();
  r.end_line = j["endLine"].get<int>();
  r.description = j["description"].get<std::string>();
}

std::vector<ChangeRecord> parse_change_json(std::string_view text, int current_line_count,
                                            Origin origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kGeneration, "change list is not valid JSON", e.what());
  }
  if (!j.is_array()) throw Error(ErrorCode::kGeneration, "change list must be a JSON array");
  std::vector<ChangeRecord> out;
  for (const auto& item : j) {
    ChangeRecord r;
    try {
      from_json(item, r);
    } catch (const Error& e) {
      throw Error(ErrorCode::kGeneration, e.what(), item.dump());
    }
    const bool deletion = r.start_line == -1 && r.end_line >= 1;
    const bool in_range =
        r.start_line >= 1 && r.start_line <= r.end_line && r.end_line <= current_line_count;
    if (!deletion && !in_range)
      throw Error(ErrorCode::kGeneration, "change record line range is invalid", item.dump());
    if (r.description.find_first_not_of(" \t\r\n") == std::string::npos)
      throw Error(ErrorCode::kGeneration, "change record description is empty", item.dump());
    r.origin = origin;
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_change(const ChangeRecord& r) {
  if (r.start_line == -1) return "Removed (previous line " + std::to_string(r.end_line) + "): " + r.description;
  if (r.start_line == r.end_line) return "Line " + std::to_string(r.start_line) + ": " + r.description;
  return "Lines " + std::to_string(r.start_line) + "-" + std::to_string(r.end_line) + ": " +
         r.description;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::vector<DiffLine> diff_lines(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
  std::size_t pre = 0;
  while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
  std::size_t suf = 0;
  while (suf < a.size() - pre && suf < b.size() - pre &&
         a[a.size() - 1 - suf] == b[b.size() - 1 - suf])
    ++suf;

  std::vector<DiffLine> out;
  for (std::size_t i = 0; i < pre; ++i)
    out.push_back({DiffOp::kEqual, static_cast<int>(i + 1), static_cast<int>(i + 1)});

  const std::size_t n = a.size() - pre - suf;
  const std::size_t m = b.size() - pre - suf;
  auto old_no = [&](std::size_t i) { return static_cast<int>(pre + i + 1); };
  auto new_no = [&](std::size_t j) { return static_cast<int>(pre + j + 1); };
  constexpr std::size_t kMaxCells = 4'000'000;
  if (n > 0 && m > 0 && n * m <= kMaxCells) {
    // lcs[i][j] = LCS length of a[pre+i..] and b[pre+j..]
    std::vector<std::uint32_t> lcs((n + 1) * (m + 1), 0);
    auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return lcs[i * (m + 1) + j]; };
    for (std::size_t i = n; i-- > 0;)
      for (std::size_t j = m; j-- > 0;)
        at(i, j) = a[pre + i] == b[pre + j] ? at(i + 1, j + 1) + 1
                                            : std::max(at(i + 1, j), at(i, j + 1));
    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
      if (i < n && j < m && a[pre + i] == b[pre + j]) {
        out.push_back({DiffOp::kEqual, old_no(i), new_no(j)});
        ++i;
        ++j;
      } else if (j < m && (i == n || at(i, j + 1) > at(i + 1, j))) {
        out.push_back({DiffOp::kInsert, 0, new_no(j)});
        ++j;
      } else {
        out.push_back({DiffOp::kDelete, old_no(i), 0});
        ++i;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out.push_back({DiffOp::kDelete, old_no(i), 0});
    for (std::size_t j = 0; j < m; ++j) out.push_back({DiffOp::kInsert, 0, new_no(j)});
  }

  for (std::size_t k = 0; k < suf; ++k)
    out.push_back({DiffOp::kEqual, static_cast<int>(a.size() - suf + k + 1),
                   static_cast<int>(b.size() - suf + k + 1)});
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string plural(std::size_t n, std::string_view word) {
  return std::to_string(n) + " " + std::string(word) + (n == 1 ? "" : "s");
}

struct CallArg {
  std::optional<std::string> name;
  std::string value;
};

struct Call {
  std::string name;
  std::vector<CallArg> args;
};

// First `name(...)` in a line, with its top-level arguments.
std::optional<Call> first_call(std::string_view line) {
  const auto lex = tokenize(line);
  std::vector<Token> toks;
  for (const auto& t : lex.tokens)
    if (t.kind != TokenKind::kComment) toks.push_back(t);
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (toks[i].kind != TokenKind::kIdentifier || !toks[i + 1].is_punct("(")) continue;
    static const std::set<std::string_view> kKeywords = {"for", "if", "module", "function", "let"};
    if (kKeywords.contains(toks[i].text)) continue;
    Call call;
    call.name = std::string(toks[i].text);
    int depth = 0;
    std::size_t arg_start = i + 2;
    for (std::size_t k = i + 1; k < toks.size(); ++k) {
      const auto& t = toks[k];
      if (t.is_punct("(") || t.is_punct("[") || t.is_punct("{")) {
        ++depth;
        continue;
      }
      const bool close = t.is_punct(")") || t.is_punct("]") || t.is_punct("}");
      if ((depth == 1 && t.is_punct(",")) || (close && depth == 1)) {
        if (k > arg_start) {
          CallArg arg;
          std::size_t v = arg_start;
          if (k - arg_start >= 2 && toks[arg_start].kind == TokenKind::kIdentifier &&
              toks[arg_start + 1].is_punct("=")) {
            arg.name = std::string(toks[arg_start].text);
            v = arg_start + 2;
          }
          if (v < k) {
            arg.value = std::string(line.substr(toks[v].span.start_byte,
                                                toks[k - 1].span.end_byte - toks[v].span.start_byte));
          }
          call.args.push_back(std::move(arg));
        }
        arg_start = k + 1;
      }
      if (close && --depth == 0) return call;
    }
    return std::nullopt;  // call continues on another line
  }
  return std::nullopt;
}

std::string parameter_name(const std::string& call, const CallArg& arg, std::size_t index) {
  static const std::map<std::string, std::string, std::less<>> kNamed = {
      {"h", "height"},          {"d", "diameter"},        {"r", "radius"},
      {"r1", "bottom radius"},  {"r2", "top radius"},     {"d1", "bottom diameter"},
      {"d2", "top diameter"},   {"$fn", "segment count"}, {"$fa", "minimum angle"},
      {"$fs", "minimum size"},  {"v", "vector"},          {"a", "angle"},
      {"c", "color"},           {"alpha", "transparency"}};
  if (arg.name) {
    auto it = kNamed.find(*arg.name);
    return it == kNamed.end() ? *arg.name : it->second;
  }
  static const std::map<std::string, std::vector<std::string>, std::less<>> kPositional = {
      {"cube", {"size", "center"}},
      {"sphere", {"radius"}},
      {"cylinder", {"height", "bottom radius", "top radius", "center"}},
      {"circle", {"radius"}},
      {"square", {"size", "center"}},
      {"text", {"text", "size", "font"}},
      {"translate", {"offset"}},
      {"rotate", {"angle", "axis"}},
      {"scale", {"factor"}},
      {"mirror", {"normal"}},
      {"resize", {"size"}},
      {"color", {"color", "transparency"}},
  };
  if (auto it = kPositional.find(call); it != kPositional.end() && index < it->second.size())
    return it->second[index];
  return "argument " + std::to_string(index + 1);
}

std::string render_arg(const CallArg& arg) {
  return arg.name ? *arg.name + "=" + arg.value : arg.value;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace

std::string describe_line_change(std::string_view before, std::string_view after) {
  const auto a = first_call(before);
  const auto b = first_call(after);
  if (a && b && a->name == b->name && a->args.size() == b->args.size()) {
    std::vector<std::size_t> changed;
    bool same_shape = true;
    for (std::size_t i = 0; i < a->args.size(); ++i) {
      if (a->args[i].name != b->args[i].name) same_shape = false;
      if (a->args[i].value != b->args[i].value) changed.push_back(i);
    }
    if (same_shape && !changed.empty()) {
      std::string names, from, to;
      for (std::size_t i : changed) {
        const std::string sep = names.empty() ? "" : ", ";
        names += sep + parameter_name(a->name, a->args[i], i);
        from += sep + render_arg(a->args[i]);
        to += sep + render_arg(b->args[i]);
      }
      return capitalized(a->name) + "'s parameter (" + names + ") changed, from (" + from +
             ") to (" + to + ")";
    }
  }
  if (a && b && a->name != b->name)
    return capitalized(a->name) + " replaced by " + b->name + ": " + trim(after);
  if (trim(before) == trim(after)) return "Indentation changed";
  if (trim(after).empty()) return "Line cleared, was: " + trim(before);
  if (trim(before).empty()) return "Line filled in: " + trim(after);
  return "Changed from \"" + trim(before) + "\" to \"" + trim(after) + "\"";
}

std::vector<ChangeRecord> local_changes(std::string_view before, std::string_view after,
                                        Origin origin) {
  const auto a = split_lines(before);
  const auto b = split_lines(after);
  const auto script = diff_lines(a, b);
  std::vector<ChangeRecord> out;
  std::size_t k = 0;
  while (k < script.size()) {
    if (script[k].op == DiffOp::kEqual) {
      ++k;
      continue;
    }
    std::vector<int> del, ins;
    for (; k < script.size() && script[k].op != DiffOp::kEqual; ++k) {
      if (script[k].op == DiffOp::kDelete) del.push_back(script[k].old_line);
      else ins.push_back(script[k].new_line);
    }
    auto first_text = [](const std::vector<std::string>& lines, const std::vector<int>& nos) {
      for (int n : nos) {
        std::string t = trim(lines[static_cast<std::size_t>(n - 1)]);
        if (!t.empty()) return t;
      }
      return std::string("blank lines");
    };
    if (del.empty()) {
      out.push_back({ins.front(), ins.back(),
                     "Added " + plural(ins.size(), "line") + ": " + first_text(b, ins), origin});
    } else if (ins.empty()) {
      out.push_back({-1, del.back(),
                     "Removed " + plural(del.size(), "line") + ": " + first_text(a, del), origin});
    } else if (del.size() == ins.size()) {
      for (std::size_t i = 0; i < ins.size(); ++i) {
        out.push_back({ins[i], ins[i],
                       describe_line_change(a[static_cast<std::size_t>(del[i] - 1)],
                                            b[static_cast<std::size_t>(ins[i] - 1)]),
                       origin});
      }
    } else {
      out.push_back({ins.front(), ins.back(),
                     "Replaced " + plural(del.size(), "line") + " with " +
                         plural(ins.size(), "line") + ": " + first_text(b, ins),
                     origin});
    }
  }
  return out;
}

}  // namespace scadscope
