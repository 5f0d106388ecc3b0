#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "scadscope/service.hpp"

namespace scadscope {

namespace {

constexpr const char* kJson = "application/json";
const std::string kSession = R"(/v1/sessions/([0-9a-f]+))";

void send(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) { send(res, error_body(e), http_status(e.code())); }

nlohmann::json body_of(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kPrecondition, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kPrecondition, "request body is not valid JSON", e.what());
  }
}

template <typename T>
T field(const nlohmann::json& body, const char* name, T fallback) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kPrecondition, std::string("bad field '") + name + "'", e.what());
  }
}

template <typename T>
T required(const nlohmann::json& body, const char* name) {
  if (!body.contains(name)) throw Error(ErrorCode::kPrecondition, std::string("missing field '") + name + "'");
  return field<T>(body, name, T{});
}

// Wraps a handler so library errors become structured bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const nlohmann::json::exception& e) {
      send_error(res, Error(ErrorCode::kPrecondition, "malformed request", e.what()));
    } catch (const std::exception& e) {
      send(res, {{"code", "internal"}, {"message", e.what()}, {"detail", ""}}, 500);
    }
  };
}

void send_render(httplib::Response& res, const RenderResult& r) {
  if (r.ok()) {
    res.status = 200;
    res.set_header("X-Render-Cache", r.from_cache ? "hit" : "miss");
    res.set_content(*r.image, "image/png");
    return;
  }
  auto log = nlohmann::json::array();
  for (const auto& e : r.error_log)
    log.push_back({{"severity", e.severity == Severity::kError ? "error" : "warning"},
                   {"line", e.line},
                   {"message", e.message}});
  send(res,
       {{"code", to_string(ErrorCode::kRenderFailed)},
        {"message", r.error},
        {"detail", ""},
        {"error_log", log}},
       422);
}

ViewSpec view_from_query(const httplib::Request& req) {
  ViewSpec v = ViewSpec::of(NamedView::kDefault);
  if (req.has_param("view")) v.named = named_view_from_string(req.get_param_value("view"));
  try {
    if (req.has_param("width")) v.width = std::stoi(req.get_param_value("width"));
    if (req.has_param("height")) v.height = std::stoi(req.get_param_value("height"));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kPrecondition, "width and height must be integers");
  }
  v.validate();
  return v;
}

}  // namespace

void mount_routes(httplib::Server& server, Service& service) {
  server.Get("/v1/health", guarded([&](const httplib::Request&, httplib::Response& res) {
               send(res, {{"status", "ok"},
                          {"provider", service.provider().name()},
                          {"renderer", service.config().renderer_backend}});
             }));

  server.Post("/v1/sessions", guarded([&](const httplib::Request&, httplib::Response& res) {
                send(res, service.create_session(), 201);
              }));

  server.Get(kSession, guarded([&](const httplib::Request& req, httplib::Response& res) {
               send(res, service.state(req.matches[1]));
             }));

  server.Get(kSession + "/code", guarded([&](const httplib::Request& req, httplib::Response& res) {
               auto st = service.state(req.matches[1]);
               send(res, {{"code", st["code"]}, {"diagnostics", st["diagnostics"]}, {"stale", st["stale"]}});
             }));

  server.Put(kSession + "/code", guarded([&](const httplib::Request& req, httplib::Response& res) {
               const auto body = body_of(req);
               send(res, service.set_code(req.matches[1], required<std::string>(body, "code"),
                                          origin_from_string(field<std::string>(body, "origin", "human")),
                                          field<bool>(body, "save", false)));
             }));

  server.Get(kSession + "/hierarchy", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send(res, service.hierarchy(req.matches[1]));
             }));

  server.Post(kSession + "/hierarchy/expand", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                send(res, service.expand(req.matches[1], required<std::string>(body, "component_id"),
                                         field<bool>(body, "expanded", true)));
              }));

  server.Post(kSession + "/select", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                Selection sel;
                if (body.contains("component_id")) {
                  sel = required<std::string>(body, "component_id");
                } else if (body.contains("span")) {
                  const auto& span = body.at("span");
                  SourceSpan s;
                  s.start_byte = required<std::size_t>(span, "start_byte");
                  s.end_byte = required<std::size_t>(span, "end_byte");
                  sel = s;
                } else {
                  throw Error(ErrorCode::kPrecondition, "select needs component_id or span");
                }
                send(res, service.select(req.matches[1], sel, field<bool>(body, "want_description", false)));
              }));

  auto job_handler = guarded([&](const httplib::Request& req, httplib::Response& res) {
    send(res, service.job(req.matches[1], req.matches[2]));
  });
  server.Get(kSession + "/descriptions/([0-9a-f]+)", job_handler);
  server.Get(kSession + "/jobs/([0-9a-f]+)", job_handler);

  server.Get(kSession + "/render", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send_render(res, service.render(req.matches[1], view_from_query(req),
                                               req.has_param("highlight") ? req.get_param_value("highlight") : ""));
             }));

  server.Post(kSession + "/render", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                ViewSpec view = ViewSpec::of(NamedView::kDefault);
                if (body.contains("view")) {
                  const auto& v = body.at("view");
                  view = v.is_string() ? ViewSpec::of(named_view_from_string(v.get<std::string>())) : v.get<ViewSpec>();
                }
                send_render(res, service.render(req.matches[1], view, field<std::string>(body, "highlight", "")));
              }));

  server.Post(kSession + "/chat", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.chat(req.matches[1], required<std::string>(body_of(req), "text")));
              }));

  server.Post(kSession + "/summarize", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.summarize(req.matches[1], required<std::string>(body_of(req), "text")));
              }));

  server.Post(kSession + "/describe", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                const auto mode = describe_mode_from_string(field<std::string>(body, "mode", "model"));
                const auto component = field<std::string>(body, "component_id", "");
                if (field<bool>(body, "async", false))
                  send(res, {{"token", service.submit_describe(req.matches[1], mode, component)}}, 202);
                else
                  send(res, service.describe(req.matches[1], mode, component));
              }));

  server.Post(kSession + "/generate", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                const auto mode = generate_mode_from_string(field<std::string>(body, "mode", "create"));
                const auto text = field<std::string>(body, "text", "");
                if (field<bool>(body, "async", false))
                  send(res, {{"token", service.submit_generate(req.matches[1], mode, text)}}, 202);
                else
                  send(res, service.generate(req.matches[1], mode, text));
              }));

  server.Post(kSession + "/proposals/(p[0-9]+)/accept", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.accept(req.matches[1], req.matches[2]));
              }));
  server.Post(kSession + "/proposals/(p[0-9]+)/reject", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.reject(req.matches[1], req.matches[2]));
              }));

  server.Get(kSession + "/history", guarded([&](const httplib::Request& req, httplib::Response& res) {
               send(res, service.history(req.matches[1]));
             }));
  server.Get(kSession + "/history/changes", guarded([&](const httplib::Request& req, httplib::Response& res) {
               const auto origin = req.has_param("origin") ? req.get_param_value("origin") : "human";
               send(res, service.changes(req.matches[1], origin_from_string(origin)));
             }));
  server.Post(kSession + "/history/([0-9]+)/restore", guarded([&](const httplib::Request& req, httplib::Response& res) {
                int id = 0;
                try {
                  id = std::stoi(req.matches[2]);
                } catch (const std::exception&) {
                  throw Error(ErrorCode::kNotFound, "unknown record", req.matches[2]);
                }
                send(res, service.restore(req.matches[1], id));
              }));
  server.Post(kSession + "/undo", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.undo(req.matches[1]));
              }));
  server.Post(kSession + "/redo", guarded([&](const httplib::Request& req, httplib::Response& res) {
                send(res, service.redo(req.matches[1]));
              }));

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kPrecondition;
    res.set_content(error_body(Error(code, "no route for " + req.method + " " + req.path)).dump(), kJson);
  });
}

int serve(const ServiceConfig& config) {
  auto service = Service::from_config(config);
  httplib::Server server;
  mount_routes(server, *service);
  if (!server.bind_to_port(config.host, config.port))
    throw Error(ErrorCode::kConfiguration, "cannot listen on " + config.host + ":" + std::to_string(config.port));
  server.listen_after_bind();
  return 0;
}

}  // namespace scadscope
