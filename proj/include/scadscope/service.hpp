#pragma once

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scadscope/change_tracking.hpp"
#include "scadscope/error.hpp"
#include "scadscope/highlight.hpp"
#include "scadscope/llm.hpp"
#include "scadscope/orchestrator.hpp"
#include "scadscope/renderer.hpp"
#include "scadscope/versioning.hpp"

namespace httplib {
class Server;
}

namespace scadscope {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string renderer_backend = "process";  // "process" or "stub"
  RendererConfig renderer;
  std::string provider = "mock";  // "mock" or "http"
  LlmProviderConfig llm;
  std::filesystem::path session_dir;  // empty: sessions live in memory only
};

/// {"host", "port", "session_dir", "renderer": {"backend", ...RendererConfig},
///  "provider": {"kind", ...LlmProviderConfig}}. Throws Error(kConfiguration).
void from_json(const nlohmann::json& j, ServiceConfig& config);
void to_json(nlohmann::json& j, const ServiceConfig& config);
ServiceConfig load_service_config(const std::filesystem::path& path);

int http_status(ErrorCode code);
/// {code, message, detail}.
nlohmann::json error_body(const Error& error);

nlohmann::json bundle_to_json(const HighlightBundle& bundle);
nlohmann::json report_to_json(const AiReport& report);

class Service {
 public:
  Service(ServiceConfig config, std::unique_ptr<LlmProvider> provider,
          std::unique_ptr<RenderBackend> backend);
  /// Provider and backend chosen by the config.
  static std::unique_ptr<Service> from_config(const ServiceConfig& config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const { return config_; }
  Renderer& renderer() { return renderer_; }
  LlmProvider& provider() { return *provider_; }

  nlohmann::json create_session();
  std::vector<std::string> session_ids() const;
  /// Code, diagnostics, hierarchy, history position and open proposals.
  nlohmann::json state(const std::string& sid);

  /// Always accepted. Commits when the code parses, or when a human saves
  /// explicitly; otherwise the previous tree stays with `stale` set.
  nlohmann::json set_code(const std::string& sid, const std::string& code, Origin origin,
                          bool save = false);
  nlohmann::json hierarchy(const std::string& sid);
  nlohmann::json expand(const std::string& sid, const std::string& component_id, bool expanded);
  /// Returns the bundle at once; with `want_description` the narration is
  /// produced in the background under `description_token`.
  nlohmann::json select(const std::string& sid, const Selection& selection, bool want_description);
  /// Highlighted render when `highlight_id` is set. Never touches the code.
  RenderResult render(const std::string& sid, const ViewSpec& view,
                      const std::string& highlight_id = {});
  nlohmann::json chat(const std::string& sid, const std::string& text);
  nlohmann::json describe(const std::string& sid, DescribeMode mode,
                          const std::string& component_id = {});
  nlohmann::json summarize(const std::string& sid, const std::string& text);
  /// Proposes code without committing it.
  nlohmann::json generate(const std::string& sid, GenerateMode mode, const std::string& text);
  nlohmann::json accept(const std::string& sid, const std::string& proposal_id);
  nlohmann::json reject(const std::string& sid, const std::string& proposal_id);

  nlohmann::json history(const std::string& sid);
  nlohmann::json changes(const std::string& sid, Origin origin);
  nlohmann::json restore(const std::string& sid, int record_id);
  nlohmann::json undo(const std::string& sid);
  nlohmann::json redo(const std::string& sid);

  /// Background jobs (descriptions, async describe/generate).
  std::string submit_describe(const std::string& sid, DescribeMode mode,
                              const std::string& component_id = {});
  std::string submit_generate(const std::string& sid, GenerateMode mode, const std::string& text);
  /// {status: pending|done|failed, result?, error?}. Throws kNotFound.
  nlohmann::json job(const std::string& sid, const std::string& token);
  /// Blocks until every submitted job has finished.
  void wait_idle();

  /// Throws Error(kNotFound) for unknown sessions.
  void check_consistency(const std::string& sid);

 private:
  struct Proposal {
    std::string id;
    GenerateMode mode = GenerateMode::kCreate;
    std::string request;
    std::string base_code;  // session code when proposed
    std::string code;
    AiReport report;
    std::vector<ChangeRecord> changes;
    int attempts = 1;
  };

  struct Session {
    std::string id;
    std::string code;
    std::shared_ptr<const ParseResult> parse;
    std::shared_ptr<const ComponentTree> tree;  // last successful parse
    std::set<std::string> expanded;
    SessionHistory history;
    std::map<std::string, Proposal> proposals;
    int next_proposal = 1;
    mutable std::shared_mutex mutex;  // state
    std::mutex write_mutex;           // mutations, taken before ai_mutex
    std::mutex ai_mutex;              // AI calls run one at a time
    std::mutex render_mutex;          // one render at a time
  };

  struct Job {
    std::string session_id;
    std::string status = "pending";
    nlohmann::json result;
    nlohmann::json error;
  };

  std::shared_ptr<Session> session(const std::string& sid);
  std::optional<std::shared_ptr<Session>> load_session(const std::string& sid);
  void persist(const Session& s) const;
  static void rebuild(Session& s, const std::string& code);
  static BuildOptions options_for(const Session& s);
  nlohmann::json state_locked(const Session& s) const;
  nlohmann::json proposal_json(const Proposal& p) const;
  nlohmann::json describe_impl(Session& s, DescribeMode mode, const std::string& component_id);
  nlohmann::json generate_impl(Session& s, GenerateMode mode, const std::string& text);
  nlohmann::json move(const std::string& sid, const std::function<std::string(SessionHistory&)>& step);
  std::vector<ImageAttachment> images_of(Session& s, const std::string& code, bool six,
                                         std::vector<std::string>& errors);
  std::string spawn(const std::string& sid, std::function<nlohmann::json()> work);

  ServiceConfig config_;
  std::unique_ptr<LlmProvider> provider_;
  Renderer renderer_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::map<std::string, Job> jobs_;
  int running_ = 0;
};

/// Registers every /v1 route on `server`.
void mount_routes(httplib::Server& server, Service& service);
/// Blocks serving HTTP until the process is stopped.
int serve(const ServiceConfig& config);

}  // namespace scadscope
