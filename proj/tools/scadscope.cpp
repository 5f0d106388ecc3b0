#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "scadscope/change_tracking.hpp"
#include "scadscope/highlight.hpp"
#include "scadscope/serialize.hpp"
#include "scadscope/service.hpp"

namespace {

using namespace scadscope;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kDiagnostics = 1;
constexpr int kUsage = 2;

std::string read_source(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kPrecondition, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

json diagnostics_json(const ParseResult& p) {
  auto out = json::array();
  for (const auto& d : p.diagnostics) out.push_back(d);
  return out;
}

void report_diagnostics(const std::string& file, const ParseResult& p) {
  for (const auto& d : p.diagnostics)
    std::cerr << file << ":" << d.span.start_line << ":" << d.span.start_col << ": "
              << (d.severity == Severity::kError ? "error" : "warning") << ": " << d.message << "\n";
}

// Highlighting addresses any component, so expand everything.
BuildOptions full_depth() {
  BuildOptions o;
  o.expand_depth = 32;
  return o;
}

ServiceConfig config_from(const std::string& path) {
  return path.empty() ? ServiceConfig{} : load_service_config(path);
}

Rgba parse_color(const std::string& text) {
  Rgba c;
  std::array<double*, 4> parts = {&c.r, &c.g, &c.b, &c.a};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == 4) throw Error(ErrorCode::kPrecondition, "color takes at most four components");
    try {
      *parts[i++] = std::stod(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kPrecondition, "bad color component '" + item + "'");
    }
  }
  if (i < 3) throw Error(ErrorCode::kPrecondition, "color needs r,g,b[,a]");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inspect, highlight, render and describe OpenSCAD models."};
  app.require_subcommand(1);

  std::string file, other, id, view_name = "default", output, mode = "model", config_path, color;
  std::string renderer_path;
  int expand_depth = 1, width = 1024, height = 768;
  std::vector<std::string> expand_ids;
  bool mock = false, background = false;

  auto* parse_cmd = app.add_subcommand("parse", "Parse a file and print its syntax tree and diagnostics");
  parse_cmd->add_option("file", file, "OpenSCAD source")->required();

  auto* tree_cmd = app.add_subcommand("tree", "Print the component hierarchy");
  tree_cmd->add_option("file", file, "OpenSCAD source")->required();
  tree_cmd->add_option("--depth", expand_depth, "Module nesting expanded by default");
  tree_cmd->add_option("--expand", expand_ids, "Component ids to expand further");

  auto* highlight_cmd = app.add_subcommand("highlight", "Emit the source with one component highlighted");
  highlight_cmd->add_option("file", file, "OpenSCAD source")->required();
  highlight_cmd->add_option("--id", id, "Component id")->required();
  highlight_cmd->add_option("--color", color, "r,g,b[,a] in [0,1]");
  highlight_cmd->add_flag("--background", background, "Render the rest of the model as background");

  auto* isolate_cmd = app.add_subcommand("isolate", "Emit only one component");
  isolate_cmd->add_option("file", file, "OpenSCAD source")->required();
  isolate_cmd->add_option("--id", id, "Component id")->required();

  auto* render_cmd = app.add_subcommand("render", "Render one view to PNG");
  render_cmd->add_option("file", file, "OpenSCAD source")->required();
  render_cmd->add_option("--view", view_name, "default, top, bottom, front, rear, left or right");
  render_cmd->add_option("-o,--output", output, "PNG path")->required();
  render_cmd->add_option("--width", width, "Image width");
  render_cmd->add_option("--height", height, "Image height");
  render_cmd->add_option("--highlight", id, "Component id to highlight");
  render_cmd->add_option("--renderer", renderer_path, "OpenSCAD executable");
  render_cmd->add_option("--config", config_path, "Service config file");

  auto* describe_cmd = app.add_subcommand("describe", "Describe a model with the AI assistant");
  describe_cmd->add_option("file", file, "OpenSCAD source")->required();
  describe_cmd->add_option("--mode", mode, "model, component, compare or general");
  describe_cmd->add_option("--id", id, "Component id for component mode");
  describe_cmd->add_option("--previous", other, "Previous version for compare mode");
  describe_cmd->add_flag("--mock", mock, "Use the offline rule-based provider");
  describe_cmd->add_option("--renderer", renderer_path, "OpenSCAD executable");
  describe_cmd->add_option("--config", config_path, "Service config file");

  auto* diff_cmd = app.add_subcommand("diff", "Line change records between two files");
  diff_cmd->add_option("old", file, "Previous version")->required();
  diff_cmd->add_option("new", other, "Current version")->required();

  auto* history_cmd = app.add_subcommand("history", "Print a saved session history");
  history_cmd->add_option("file", file, "history.jsonl")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config_path, "Service config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*parse_cmd) {
      const auto parsed = parse(read_source(file));
      report_diagnostics(file, *parsed);
      print_json({{"diagnostics", diagnostics_json(*parsed)}, {"syntax", syntax_to_json(parsed->root)}});
      return parsed->ok() ? kOk : kDiagnostics;
    }
    if (*tree_cmd) {
      const auto parsed = parse(read_source(file));
      report_diagnostics(file, *parsed);
      BuildOptions options;
      options.expand_depth = expand_depth;
      options.expanded_ids.insert(expand_ids.begin(), expand_ids.end());
      const auto tree = build_hierarchy(parsed, options);
      print_json(tree_to_json(tree.root()));
      return parsed->ok() ? kOk : kDiagnostics;
    }
    if (*highlight_cmd || *isolate_cmd) {
      const auto source = read_source(file);
      const auto parsed = parse(source);
      if (!parsed->ok()) {
        report_diagnostics(file, *parsed);
        return kDiagnostics;
      }
      const auto tree = build_hierarchy(parsed, full_depth());
      if (*isolate_cmd) {
        std::cout << emit_isolated(source, tree, id);
      } else {
        HighlightStyle style;
        if (!color.empty()) style.color = parse_color(color);
        if (background) style.context_mode = ContextMode::kBackground;
        std::cout << emit_highlighted(source, tree, id, style);
      }
      return kOk;
    }
    if (*render_cmd) {
      auto config = config_from(config_path);
      if (!renderer_path.empty()) config.renderer.executable = renderer_path;
      std::string source = read_source(file);
      if (!id.empty()) {
        const auto parsed = parse(source);
        if (!parsed->ok()) {
          report_diagnostics(file, *parsed);
          return kDiagnostics;
        }
        source = emit_highlighted(source, build_hierarchy(parsed, full_depth()), id);
      }
      ViewSpec view{named_view_from_string(view_name), {}, width, height};
      Renderer renderer(config.renderer, std::make_unique<ProcessBackend>(config.renderer));
      const auto result = renderer.render(source, view);
      json log = json::array();
      for (const auto& e : result.error_log) {
        std::cerr << file << ":" << e.line << ": " << e.message << "\n";
        log.push_back({{"line", e.line}, {"message", e.message}});
      }
      if (result.ok()) {
        std::ofstream out(output, std::ios::binary);
        out << *result.image;
        if (!out) throw Error(ErrorCode::kIo, "cannot write " + output);
      }
      print_json({{"ok", result.ok()}, {"output", result.ok() ? output : ""}, {"view", view}, {"error_log", log}});
      return result.ok() ? kOk : kDiagnostics;
    }
    if (*describe_cmd) {
      auto config = config_from(config_path);
      if (!renderer_path.empty()) config.renderer.executable = renderer_path;
      if (mock) config.provider = "mock";
      config.session_dir.clear();
      auto service = Service::from_config(config);
      const std::string sid = service->create_session()["session_id"];
      const auto describe_mode = describe_mode_from_string(mode);
      if (describe_mode == DescribeMode::kCompare) {
        if (other.empty()) throw Error(ErrorCode::kPrecondition, "compare needs --previous");
        service->set_code(sid, read_source(other), Origin::kHuman, true);
      }
      const auto state = service->set_code(sid, read_source(file), Origin::kHuman, true);
      if (!state["diagnostics"].empty()) report_diagnostics(file, *parse(read_source(file)));
      print_json(service->describe(sid, describe_mode, id));
      return kOk;
    }
    if (*diff_cmd) {
      const auto records = local_changes(read_source(file), read_source(other), Origin::kHuman);
      print_json(records);
      return kOk;
    }
    if (*history_cmd) {
      const auto history = SessionHistory::load(file);
      const auto* cur = history.current();
      print_json({{"current_record_id", cur ? json(cur->record_id) : json()}, {"records", history.records()}});
      return kOk;
    }
    if (*serve_cmd) return serve(load_service_config(config_path));
  } catch (const Error& e) {
    std::cerr << "scadscope: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << "\n";
    switch (e.code()) {
      case ErrorCode::kNotFound:
      case ErrorCode::kPrecondition:
      case ErrorCode::kConfiguration:
        return kUsage;
      default:
        return kDiagnostics;
    }
  }
  return kUsage;
}
