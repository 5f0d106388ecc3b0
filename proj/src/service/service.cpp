#include "scadscope/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "scadscope/serialize.hpp"

namespace scadscope {

namespace {

std::string random_hex(std::size_t bytes) {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  static constexpr char kHex[] = "0123456789abcdef";
  std::lock_guard lock(mutex);
  std::string out;
  for (std::size_t i = 0; i < bytes; ++i) {
    const auto b = static_cast<unsigned>(rng() & 0xff);
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

bool is_session_id(const std::string& sid) {
  return !sid.empty() && sid.size() <= 64 &&
         std::all_of(sid.begin(), sid.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json diagnostics_json(const ParseResult& parse) {
  auto out = nlohmann::json::array();
  for (const auto& d : parse.diagnostics) out.push_back(d);
  return out;
}

nlohmann::json records_json(const std::vector<ChangeRecord>& records) {
  auto out = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j = r;
    j["formatted"] = format_change(r);
    out.push_back(std::move(j));
  }
  return out;
}

std::string_view route_kind(ChatRoute::Kind kind) {
  switch (kind) {
    case ChatRoute::Kind::kView: return "view";
    case ChatRoute::Kind::kComponent: return "component";
    case ChatRoute::Kind::kAnswer: break;
  }
  return "answer";
}

nlohmann::json render_json(const RenderResult& r) {
  nlohmann::json j = {{"view", r.view}, {"ok", r.ok()}, {"from_cache", r.from_cache}};
  if (r.ok()) {
    j["png_base64"] = base64_encode(*r.image);
  } else {
    j["error"] = r.error;
  }
  auto log = nlohmann::json::array();
  for (const auto& e : r.error_log)
    log.push_back({{"severity", e.severity == Severity::kError ? "error" : "warning"},
                   {"line", e.line},
                   {"message", e.message}});
  j["error_log"] = std::move(log);
  return j;
}

std::string label_for(GenerateMode mode, const std::string& request) {
  std::string text = request.size() > 80 ? request.substr(0, 77) + "..." : request;
  return std::string(to_string(mode)) + (text.empty() ? "" : ": " + text);
}

}  // namespace

void from_json(const nlohmann::json& j, ServiceConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "service config must be an object");
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.session_dir = j.value("session_dir", c.session_dir.string());
    if (auto it = j.find("renderer"); it != j.end()) {
      c.renderer_backend = it->value("backend", c.renderer_backend);
      it->get_to(c.renderer);
    }
    if (auto it = j.find("provider"); it != j.end()) {
      if (it->is_string()) {
        c.provider = it->get<std::string>();
      } else {
        c.provider = it->value("kind", c.provider);
        it->get_to(c.llm);
      }
    }
    if (auto it = j.find("api_key_env"); it != j.end()) c.llm.api_key_env = it->get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "invalid service config", e.what());
  }
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kConfiguration, "port out of range");
  if (c.renderer_backend != "process" && c.renderer_backend != "stub")
    throw Error(ErrorCode::kConfiguration, "unknown renderer backend '" + c.renderer_backend + "'");
  if (c.provider != "mock" && c.provider != "http")
    throw Error(ErrorCode::kConfiguration, "unknown provider '" + c.provider + "'");
}

void to_json(nlohmann::json& j, const ServiceConfig& c) {
  nlohmann::json renderer = c.renderer;
  renderer["backend"] = c.renderer_backend;
  nlohmann::json provider = c.llm;
  provider["kind"] = c.provider;
  j = {{"host", c.host},
       {"port", c.port},
       {"session_dir", c.session_dir.string()},
       {"renderer", renderer},
       {"provider", provider}};
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfiguration, e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "config is not valid JSON", e.what());
  }
  return j.get<ServiceConfig>();
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kPrecondition: return 400;
    case ErrorCode::kUnsupportedSelection: return 422;
    case ErrorCode::kOverlappingEdits: return 409;
    case ErrorCode::kBoundary: return 409;
    case ErrorCode::kTransport: return 502;
    case ErrorCode::kGeneration: return 502;
    case ErrorCode::kConfiguration: return 503;
    case ErrorCode::kTimeout: return 504;
    case ErrorCode::kRenderFailed: return 422;
    case ErrorCode::kMigration: return 500;
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

nlohmann::json error_body(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

nlohmann::json bundle_to_json(const HighlightBundle& b) {
  nlohmann::json j = {{"component_id", b.component_id},
                      {"label", b.label},
                      {"code_span", b.code_span},
                      {"hierarchy_path", b.hierarchy_path},
                      {"highlighted_source", b.highlighted_source},
                      {"isolated_source", b.isolated_source},
                      {"announce", b.announce}};
  if (b.description_slot) j["description_token"] = *b.description_slot;
  return j;
}

nlohmann::json report_to_json(const AiReport& r) {
  nlohmann::json j = r;
  j["formatted"] = format_report(r);
  return j;
}

Service::Service(ServiceConfig config, std::unique_ptr<LlmProvider> provider,
                 std::unique_ptr<RenderBackend> backend)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      renderer_(config_.renderer, std::move(backend)) {
  if (!config_.session_dir.empty()) std::filesystem::create_directories(config_.session_dir);
}

std::unique_ptr<Service> Service::from_config(const ServiceConfig& config) {
  std::unique_ptr<RenderBackend> backend;
  if (config.renderer_backend == "stub")
    backend = std::make_unique<StubBackend>();
  else
    backend = std::make_unique<ProcessBackend>(config.renderer);
  return std::make_unique<Service>(config, make_provider(config.provider, config.llm), std::move(backend));
}

Service::~Service() { wait_idle(); }

nlohmann::json Service::create_session() {
  auto s = std::make_shared<Session>();
  s->id = random_hex(16);
  rebuild(*s, "");
  {
    std::unique_lock lock(s->mutex);
    persist(*s);
  }
  std::lock_guard lock(sessions_mutex_);
  sessions_[s->id] = s;
  return {{"session_id", s->id}};
}

std::vector<std::string> Service::session_ids() const {
  std::lock_guard lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

std::shared_ptr<Service::Session> Service::session(const std::string& sid) {
  {
    std::lock_guard lock(sessions_mutex_);
    if (auto it = sessions_.find(sid); it != sessions_.end()) return it->second;
  }
  if (auto loaded = load_session(sid)) {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.emplace(sid, *loaded).first->second;
  }
  throw Error(ErrorCode::kNotFound, "unknown session", sid);
}

std::optional<std::shared_ptr<Service::Session>> Service::load_session(const std::string& sid) {
  if (config_.session_dir.empty() || !is_session_id(sid)) return std::nullopt;
  const auto dir = config_.session_dir / sid;
  if (!std::filesystem::exists(dir / "session.json")) return std::nullopt;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(dir / "session.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, "corrupt session file", e.what());
  }
  auto s = std::make_shared<Session>();
  s->id = sid;
  s->expanded = meta.value("expanded", std::set<std::string>{});
  if (std::filesystem::exists(dir / "history.jsonl"))
    s->history = SessionHistory::load(dir / "history.jsonl");
  rebuild(*s, meta.value("code", std::string()));
  return s;
}

void Service::persist(const Session& s) const {
  if (config_.session_dir.empty()) return;
  const auto dir = config_.session_dir / s.id;
  std::filesystem::create_directories(dir);
  nlohmann::json provider = config_.llm;
  provider["kind"] = config_.provider;
  const nlohmann::json meta = {{"session_id", s.id},
                               {"code", s.code},
                               {"expanded", s.expanded},
                               {"config", {{"provider", provider}, {"renderer", config_.renderer}}}};
  const auto tmp = dir / "session.json.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << meta.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::kIo, "cannot write session", tmp.string());
  }
  std::filesystem::rename(tmp, dir / "session.json");
  s.history.save(dir / "history.jsonl");
}

BuildOptions Service::options_for(const Session& s) {
  BuildOptions o;
  o.expanded_ids = s.expanded;
  return o;
}

void Service::rebuild(Session& s, const std::string& code) {
  s.code = code;
  s.parse = scadscope::parse(code);
  if (s.parse->ok()) s.tree = std::make_shared<const ComponentTree>(build_hierarchy(s.parse, options_for(s)));
}

nlohmann::json Service::state_locked(const Session& s) const {
  nlohmann::json j = {{"session_id", s.id},
                      {"code", s.code},
                      {"diagnostics", diagnostics_json(*s.parse)},
                      {"stale", !s.parse->ok()},
                      {"hierarchy", s.tree ? tree_to_json(s.tree->root()) : nlohmann::json()}};
  const auto* cur = s.history.current();
  j["history"] = {{"record_count", s.history.records().size()},
                  {"current_record_id", cur ? nlohmann::json(cur->record_id) : nlohmann::json()},
                  {"can_undo", s.history.can_undo()},
                  {"can_redo", s.history.can_redo()},
                  {"unsaved", s.code != s.history.current_code()}};
  auto proposals = nlohmann::json::array();
  for (const auto& [id, p] : s.proposals) proposals.push_back(id);
  j["proposals"] = std::move(proposals);
  return j;
}

nlohmann::json Service::state(const std::string& sid) {
  auto s = session(sid);
  std::shared_lock lock(s->mutex);
  return state_locked(*s);
}

nlohmann::json Service::set_code(const std::string& sid, const std::string& code, Origin origin,
                                 bool save) {
  auto s = session(sid);
  std::lock_guard write(s->write_mutex);
  std::string previous;
  {
    std::shared_lock lock(s->mutex);
    previous = s->history.current_code();
  }
  auto parsed = scadscope::parse(code);
  const bool commit = (parsed->ok() || (save && origin == Origin::kHuman)) && code != previous;

  TrackResult tracked;
  if (commit) {
    std::lock_guard ai(s->ai_mutex);
    Orchestrator orch(*provider_);
    tracked = orch.track_changes(previous, code, origin);
  }

  std::unique_lock lock(s->mutex);
  rebuild(*s, code);
  std::optional<int> record_id;
  if (commit) record_id = s->history.commit(code, origin, std::nullopt, {}, tracked.records).record_id;
  persist(*s);
  auto j = state_locked(*s);
  j["committed"] = record_id.has_value();
  if (record_id) j["record_id"] = *record_id;
  j["change_records"] = records_json(tracked.records);
  if (!tracked.warning.empty()) j["warning"] = tracked.warning;
  return j;
}

nlohmann::json Service::hierarchy(const std::string& sid) {
  auto s = session(sid);
  std::shared_lock lock(s->mutex);
  return {{"stale", !s->parse->ok()},
          {"diagnostics", diagnostics_json(*s->parse)},
          {"hierarchy", s->tree ? tree_to_json(s->tree->root()) : nlohmann::json()}};
}

nlohmann::json Service::expand(const std::string& sid, const std::string& component_id, bool expanded) {
  auto s = session(sid);
  std::lock_guard write(s->write_mutex);
  std::unique_lock lock(s->mutex);
  if (!s->tree) throw Error(ErrorCode::kPrecondition, "no parsed code yet");
  resolve_component(*s->tree, component_id);
  if (expanded)
    s->expanded.insert(component_id);
  else
    s->expanded.erase(component_id);
  s->tree = std::make_shared<const ComponentTree>(build_hierarchy(s->tree->parse_ptr(), options_for(*s)));
  persist(*s);
  return {{"stale", !s->parse->ok()}, {"hierarchy", tree_to_json(s->tree->root())}};
}

nlohmann::json Service::select(const std::string& sid, const Selection& selection, bool want_description) {
  auto s = session(sid);
  std::shared_ptr<const ComponentTree> tree;
  bool stale = false;
  {
    std::shared_lock lock(s->mutex);
    tree = s->tree;
    stale = !s->parse->ok();
  }
  if (!tree) throw Error(ErrorCode::kPrecondition, "no parsed code yet");

  Selection resolved = selection;
  if (const auto* span = std::get_if<SourceSpan>(&selection)) {
    const auto& source = tree->parse().source;
    if (span->start_byte > span->end_byte || span->end_byte > source.size())
      throw Error(ErrorCode::kPrecondition, "selection outside the source",
                  std::to_string(span->start_byte) + ".." + std::to_string(span->end_byte));
    resolved = LineIndex(source).span(span->start_byte, span->end_byte);
  }
  auto bundle = cross_reference(*tree, resolved);
  if (want_description) bundle.description_slot = submit_describe(sid, DescribeMode::kComponent, bundle.component_id);
  auto j = bundle_to_json(bundle);
  j["stale"] = stale;
  return j;
}

RenderResult Service::render(const std::string& sid, const ViewSpec& view, const std::string& highlight_id) {
  auto s = session(sid);
  std::string source;
  {
    std::shared_lock lock(s->mutex);
    if (highlight_id.empty()) {
      source = s->code;
    } else {
      if (!s->parse->ok() || !s->tree)
        throw Error(ErrorCode::kPrecondition, "cannot highlight while the code has syntax errors");
      source = emit_highlighted(s->code, *s->tree, highlight_id);
    }
  }
  std::lock_guard render(s->render_mutex);
  return renderer_.render(source, view);
}

std::vector<ImageAttachment> Service::images_of(Session& s, const std::string& code, bool six,
                                                std::vector<std::string>& errors) {
  std::vector<RenderResult> results;
  {
    std::lock_guard render(s.render_mutex);
    if (six) {
      results = renderer_.render_six_views(code);
    } else {
      try {
        results.push_back(renderer_.render(code, ViewSpec::of(NamedView::kDefault)));
      } catch (const Error& e) {
        RenderResult r;
        r.view = ViewSpec::of(NamedView::kDefault);
        r.error = e.what();
        results.push_back(std::move(r));
      }
    }
  }
  std::vector<ImageAttachment> out;
  for (auto& r : results) {
    const std::string name(r.view.named ? to_string(*r.view.named) : "custom");
    if (r.ok())
      out.push_back({"image/png", std::move(*r.image), name + " view"});
    else
      errors.push_back(name + " view: " + r.error);
  }
  return out;
}

nlohmann::json Service::describe_impl(Session& s, DescribeMode mode, const std::string& component_id) {
  std::lock_guard ai(s.ai_mutex);
  std::shared_ptr<const ComponentTree> tree;
  std::string code, previous;
  std::optional<std::string> parent_code;
  {
    std::shared_lock lock(s.mutex);
    tree = s.tree;
    code = s.code;
    if (const auto* cur = s.history.current(); cur && cur->parent)
      parent_code = s.history.record(*cur->parent).code;
    previous = code != s.history.current_code() ? s.history.current_code() : parent_code.value_or(code);
  }

  DescribeInput in;
  in.mode = mode;
  in.code = code;
  switch (mode) {
    case DescribeMode::kModel:
      in.previous_code = previous;
      in.images = images_of(s, code, true, in.render_errors);
      break;
    case DescribeMode::kComponent: {
      if (!tree) throw Error(ErrorCode::kPrecondition, "no parsed code yet");
      const auto& node = resolve_component(*tree, component_id);
      in.code = tree->parse().source;
      in.component = component_context(*tree, node);
      in.images = images_of(s, emit_isolated(in.code, *tree, node.id), false, in.render_errors);
      break;
    }
    case DescribeMode::kCompare: {
      if (previous == code) throw Error(ErrorCode::kPrecondition, "no previous version to compare with");
      in.previous_code = previous;
      std::vector<std::string> before_errors;
      auto before = images_of(s, previous, true, before_errors);
      auto after = images_of(s, code, true, in.render_errors);
      for (auto& e : before_errors) in.render_errors.push_back("previous " + e);
      // Keep only views that rendered on both sides so the halves line up.
      std::vector<ImageAttachment> b, a;
      for (auto& img : after)
        for (auto& old : before)
          if (old.caption == img.caption) {
            b.push_back(old);
            a.push_back(img);
          }
      in.previous_images = std::move(b);
      in.images = std::move(a);
      break;
    }
    case DescribeMode::kGeneral:
      in.images = images_of(s, code, false, in.render_errors);
      break;
  }

  Orchestrator orch(*provider_);
  const auto result = orch.describe(in);
  nlohmann::json j = {{"mode", to_string(mode)}, {"narration", result.narration}, {"caveats", result.caveats}};
  if (!component_id.empty()) j["component_id"] = component_id;
  if (result.report) j["report"] = report_to_json(*result.report);
  return j;
}

nlohmann::json Service::describe(const std::string& sid, DescribeMode mode, const std::string& component_id) {
  auto s = session(sid);
  return describe_impl(*s, mode, component_id);
}

nlohmann::json Service::summarize(const std::string& sid, const std::string& text) {
  auto s = session(sid);
  std::lock_guard ai(s->ai_mutex);
  Orchestrator orch(*provider_);
  return {{"summary", orch.summarize(text)}};
}

nlohmann::json Service::chat(const std::string& sid, const std::string& text) {
  auto s = session(sid);
  std::shared_ptr<const ComponentTree> tree;
  std::string code;
  {
    std::shared_lock lock(s->mutex);
    tree = s->tree;
    code = s->code;
  }
  ChatResult result;
  {
    std::lock_guard ai(s->ai_mutex);
    Orchestrator orch(*provider_);
    result = orch.chat(text, code, tree.get());
  }
  nlohmann::json j = {{"route",
                       {{"kind", route_kind(result.route.kind)},
                        {"view", result.route.view},
                        {"component_id", result.route.component_id}}},
                      {"text", result.text}};
  if (result.route.kind == ChatRoute::Kind::kView) {
    const auto view = ViewSpec::thumbnail(named_view_from_string(result.route.view));
    try {
      j["render"] = render_json(render(sid, view));
    } catch (const Error& e) {
      j["render"] = {{"view", view}, {"ok", false}, {"error", e.what()}};
    }
  } else if (result.route.kind == ChatRoute::Kind::kComponent) {
    j["bundle"] = bundle_to_json(cross_reference(*tree, result.route.component_id));
  }
  return j;
}

nlohmann::json Service::proposal_json(const Proposal& p) const {
  return {{"proposal_id", p.id},
          {"mode", to_string(p.mode)},
          {"request", p.request},
          {"code", p.code},
          {"report", report_to_json(p.report)},
          {"change_records", records_json(p.changes)},
          {"attempts", p.attempts},
          {"committed", false}};
}

nlohmann::json Service::generate_impl(Session& s, GenerateMode mode, const std::string& text) {
  std::lock_guard ai(s.ai_mutex);
  std::string code;
  {
    std::shared_lock lock(s.mutex);
    code = s.code;
  }
  Orchestrator orch(*provider_);
  auto result = orch.generate_code(mode, text, code);
  auto tracked = orch.track_changes(code, result.code, Origin::kAi);

  Proposal p;
  p.mode = mode;
  p.request = text;
  p.base_code = code;
  p.code = std::move(result.code);
  p.report = std::move(result.report);
  p.report.code_changes = tracked.records;
  p.changes = std::move(tracked.records);
  p.attempts = result.attempts;
  std::unique_lock lock(s.mutex);
  p.id = "p" + std::to_string(s.next_proposal++);
  auto j = proposal_json(p);
  s.proposals.emplace(p.id, std::move(p));
  return j;
}

nlohmann::json Service::generate(const std::string& sid, GenerateMode mode, const std::string& text) {
  auto s = session(sid);
  return generate_impl(*s, mode, text);
}

nlohmann::json Service::accept(const std::string& sid, const std::string& proposal_id) {
  auto s = session(sid);
  std::lock_guard write(s->write_mutex);
  std::unique_lock lock(s->mutex);
  auto it = s->proposals.find(proposal_id);
  if (it == s->proposals.end()) throw Error(ErrorCode::kNotFound, "unknown proposal", proposal_id);
  Proposal p = std::move(it->second);
  s->proposals.erase(it);
  const std::string current = s->history.current_code();
  auto changes = current == p.base_code ? p.changes : local_changes(current, p.code, Origin::kAi);
  p.report.code_changes = changes;
  const auto& record = s->history.commit(p.code, Origin::kAi, p.report, label_for(p.mode, p.request), changes);
  const int record_id = record.record_id;
  rebuild(*s, p.code);
  persist(*s);
  auto j = state_locked(*s);
  j["record_id"] = record_id;
  j["change_records"] = records_json(changes);
  return j;
}

nlohmann::json Service::reject(const std::string& sid, const std::string& proposal_id) {
  auto s = session(sid);
  std::unique_lock lock(s->mutex);
  if (s->proposals.erase(proposal_id) == 0) throw Error(ErrorCode::kNotFound, "unknown proposal", proposal_id);
  return state_locked(*s);
}

nlohmann::json Service::history(const std::string& sid) {
  auto s = session(sid);
  std::shared_lock lock(s->mutex);
  const auto* cur = s->history.current();
  return {{"current_record_id", cur ? nlohmann::json(cur->record_id) : nlohmann::json()},
          {"can_undo", s->history.can_undo()},
          {"can_redo", s->history.can_redo()},
          {"records", s->history.records()}};
}

nlohmann::json Service::changes(const std::string& sid, Origin origin) {
  auto s = session(sid);
  std::shared_lock lock(s->mutex);
  auto out = nlohmann::json::array();
  for (const auto& c : s->history.changes(origin)) {
    nlohmann::json j = c.change;
    j["record_id"] = c.record_id;
    j["formatted"] = format_change(c.change);
    out.push_back(std::move(j));
  }
  return {{"origin", to_string(origin)}, {"changes", out}};
}

nlohmann::json Service::move(const std::string& sid, const std::function<std::string(SessionHistory&)>& step) {
  auto s = session(sid);
  std::lock_guard write(s->write_mutex);
  std::unique_lock lock(s->mutex);
  const auto code = step(s->history);
  rebuild(*s, code);
  persist(*s);
  return state_locked(*s);
}

nlohmann::json Service::restore(const std::string& sid, int record_id) {
  return move(sid, [&](SessionHistory& h) { return h.restore(record_id); });
}

nlohmann::json Service::undo(const std::string& sid) {
  return move(sid, [](SessionHistory& h) { return h.undo(); });
}

nlohmann::json Service::redo(const std::string& sid) {
  return move(sid, [](SessionHistory& h) { return h.redo(); });
}

std::string Service::spawn(const std::string& sid, std::function<nlohmann::json()> work) {
  const std::string token = random_hex(12);
  {
    std::lock_guard lock(jobs_mutex_);
    jobs_[token].session_id = sid;
    ++running_;
  }
  std::thread([this, token, work = std::move(work)] {
    Job done;
    try {
      done.result = work();
      done.status = "done";
    } catch (const Error& e) {
      done.status = "failed";
      done.error = error_body(e);
    } catch (const std::exception& e) {
      done.status = "failed";
      done.error = {{"code", "internal"}, {"message", e.what()}, {"detail", ""}};
    }
    std::lock_guard lock(jobs_mutex_);
    auto& job = jobs_[token];
    job.status = done.status;
    job.result = std::move(done.result);
    job.error = std::move(done.error);
    --running_;
    jobs_cv_.notify_all();
  }).detach();
  return token;
}

std::string Service::submit_describe(const std::string& sid, DescribeMode mode, const std::string& component_id) {
  auto s = session(sid);
  return spawn(sid, [this, s, mode, component_id] { return describe_impl(*s, mode, component_id); });
}

std::string Service::submit_generate(const std::string& sid, GenerateMode mode, const std::string& text) {
  auto s = session(sid);
  return spawn(sid, [this, s, mode, text] { return generate_impl(*s, mode, text); });
}

nlohmann::json Service::job(const std::string& sid, const std::string& token) {
  session(sid);
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(token);
  if (it == jobs_.end() || it->second.session_id != sid) throw Error(ErrorCode::kNotFound, "unknown job", token);
  nlohmann::json j = {{"token", token}, {"status", it->second.status}};
  if (it->second.status == "done") j["result"] = it->second.result;
  if (it->second.status == "failed") j["error"] = it->second.error;
  return j;
}

void Service::wait_idle() {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [&] { return running_ == 0; });
}

void Service::check_consistency(const std::string& sid) {
  auto s = session(sid);
  std::shared_lock lock(s->mutex);
  auto fail = [&](const std::string& what) { throw Error(ErrorCode::kPrecondition, "inconsistent session: " + what, sid); };
  if (!s->parse || s->parse->source != s->code) fail("parse does not match code");
  if (s->parse->ok() && (!s->tree || s->tree->parse().source != s->code)) fail("tree does not match code");
  if (s->tree && !s->tree->parse().ok()) fail("tree built from a failed parse");
  if (s->code != s->history.current_code() && s->parse->ok()) fail("parseable code left uncommitted");
  const auto& records = s->history.records();
  if (records.empty() != !s->history.cursor().has_value()) fail("cursor");
  if (auto c = s->history.cursor(); c && (*c >= records.size() || records[*c].superseded)) fail("cursor on a superseded record");
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].record_id != static_cast<int>(i) + 1) fail("record ids not dense");
    if (records[i].origin == Origin::kAi && !scadscope::parse(records[i].code)->ok()) fail("AI record does not parse");
  }
  for (const auto& [id, p] : s->proposals)
    if (!scadscope::parse(p.code)->ok()) fail("proposal " + id + " does not parse");
}

}  // namespace scadscope
