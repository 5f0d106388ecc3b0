#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <thread>

#include "scadscope/error.hpp"
#include "scadscope/service.hpp"
#include "test_util.hpp"

using namespace scadscope;
using nlohmann::json;
using scadscope::testing::fixture;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kIo;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("scadscope-svc-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Harness {
  StubBackend* stub = nullptr;
  MockProvider* mock = nullptr;
  std::unique_ptr<Service> service;

  explicit Harness(ServiceConfig config = {}) {
    auto backend = std::make_unique<StubBackend>();
    auto provider = std::make_unique<MockProvider>();
    stub = backend.get();
    mock = provider.get();
    config.renderer_backend = "stub";
    service = std::make_unique<Service>(config, std::move(provider), std::move(backend));
  }
  std::string session() { return service->create_session()["session_id"]; }
};

// Fails every call with a transport error.
class DownProvider : public LlmProvider {
 public:
  ChatResponse complete(const ChatRequest&) override {
    throw Error(ErrorCode::kTransport, "provider unreachable", "retryable=true; refused");
  }
  std::string name() const override { return "down"; }
};

class BrokenBackend : public RenderBackend {
 public:
  RawRender run(const std::string&, const ViewSpec&) override {
    throw Error(ErrorCode::kTimeout, "renderer exceeded 30 s");
  }
};

json wait_job(Service& service, const std::string& sid, const std::string& token) {
  for (int i = 0; i < 500; ++i) {
    auto j = service.job(sid, token);
    if (j["status"] != "pending") return j;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return {{"status", "timeout"}};
}

std::vector<std::string> top_level_ids(const json& hierarchy) {
  std::vector<std::string> out;
  for (const auto& c : hierarchy["children"]) out.push_back(c["id"]);
  return out;
}

}  // namespace

TEST(Service, HelicopterHierarchyHasFiveTopLevelComponents) {
  Harness h;
  const auto sid = h.session();
  auto res = h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  EXPECT_TRUE(res["committed"]);
  EXPECT_EQ(res["record_id"], 1);
  EXPECT_TRUE(res["diagnostics"].empty());
  EXPECT_EQ(res["hierarchy"]["children"].size(), 5u);
  EXPECT_EQ(h.service->hierarchy(sid)["hierarchy"], res["hierarchy"]);
  h.service->check_consistency(sid);
}

TEST(Service, UnparseableCodeIsAcceptedButNotCommitted) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(1);\nsphere(2);\n", Origin::kHuman);
  const auto before = h.service->hierarchy(sid)["hierarchy"];
  auto res = h.service->set_code(sid, "cube(1);\nsphere(2;\n", Origin::kHuman);
  EXPECT_FALSE(res["committed"]);
  EXPECT_TRUE(res["stale"]);
  EXPECT_FALSE(res["diagnostics"].empty());
  EXPECT_EQ(res["hierarchy"], before);
  EXPECT_EQ(res["code"], "cube(1);\nsphere(2;\n");
  EXPECT_TRUE(res["history"]["unsaved"]);
  EXPECT_EQ(h.service->history(sid)["records"].size(), 1u);
  h.service->check_consistency(sid);

  auto saved = h.service->set_code(sid, "cube(1);\nsphere(2;\n", Origin::kHuman, true);
  EXPECT_TRUE(saved["committed"]);
  EXPECT_EQ(h.service->history(sid)["records"].size(), 2u);
  h.service->check_consistency(sid);
}

TEST(Service, SetCodeReportsLineChanges) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(1);\ncylinder(h=5, d=2);\n", Origin::kHuman);
  auto res = h.service->set_code(sid, "cube(1);\ncylinder(h=10, d=3);\n", Origin::kHuman);
  ASSERT_EQ(res["change_records"].size(), 1u);
  EXPECT_EQ(res["change_records"][0]["startLine"], 2);
  EXPECT_EQ(res["change_records"][0]["formatted"].get<std::string>().rfind("Line 2: ", 0), 0u);
}

TEST(Service, SelectByIdReturnsBundleThenDescription) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  const auto start = std::chrono::steady_clock::now();
  auto bundle = h.service->select(sid, std::string("root/main_propeller"), true);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(200));
  EXPECT_EQ(bundle["component_id"], "root/main_propeller");
  EXPECT_NE(bundle["highlighted_source"].get<std::string>().find("color(["), std::string::npos);
  ASSERT_TRUE(bundle.contains("description_token"));
  auto job = wait_job(*h.service, sid, bundle["description_token"]);
  ASSERT_EQ(job["status"], "done") << job.dump();
  const auto narration = job["result"]["narration"].get<std::string>();
  EXPECT_FALSE(narration.empty());
  EXPECT_NE(narration.find(bundle["label"].get<std::string>()), std::string::npos) << narration;
}

TEST(Service, SelectBySpanMatchesComponentAtOffset) {
  Harness h;
  const auto sid = h.session();
  const auto src = fixture("helicopter.scad");
  h.service->set_code(sid, src, Origin::kHuman);
  const auto at = src.find("main_propeller();");
  SourceSpan span;
  span.start_byte = at;
  span.end_byte = at + 3;
  auto bundle = h.service->select(sid, span, false);
  EXPECT_EQ(bundle["component_id"], "root/main_propeller");
  EXPECT_FALSE(bundle.contains("description_token"));
  SourceSpan outside;
  outside.start_byte = src.size() + 1;
  outside.end_byte = src.size() + 2;
  EXPECT_EQ(code_of([&] { h.service->select(sid, outside, false); }), ErrorCode::kPrecondition);
  EXPECT_EQ(code_of([&] { h.service->select(sid, std::string("root/nope"), false); }), ErrorCode::kNotFound);
}

TEST(Service, SelectUsesStaleTreeWhileCodeIsBroken) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(1);\nsphere(2);\n", Origin::kHuman);
  const auto fresh = h.service->select(sid, std::string("root"), false);
  EXPECT_FALSE(fresh["stale"]);
  h.service->set_code(sid, "cube(1);\nsphere(", Origin::kHuman);
  auto stale = h.service->select(sid, std::string("root"), false);
  EXPECT_TRUE(stale["stale"]);
  EXPECT_EQ(stale["code_span"], fresh["code_span"]);
}

TEST(Service, NamedViewRenderUsesRendererCamera) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  for (auto v : six_views()) {
    auto r = h.service->render(sid, ViewSpec::of(v));
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(h.stub->requests().back().view.camera(), camera_for(v));
  }
}

TEST(Service, RenderingNeverChangesCode) {
  Harness h;
  const auto sid = h.session();
  const auto src = fixture("helicopter.scad");
  h.service->set_code(sid, src, Origin::kHuman);
  const auto before = h.service->state(sid);
  auto r = h.service->render(sid, ViewSpec::of(NamedView::kDefault), "root/main_propeller");
  ASSERT_TRUE(r.ok());
  EXPECT_NE(h.stub->requests().back().source.find(kMarkerOpen), std::string::npos);
  EXPECT_EQ(h.service->state(sid), before);
  EXPECT_EQ(h.stub->requests().back().source == src, false);
}

TEST(Service, HighlightNeedsParseableCode) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(1);", Origin::kHuman);
  h.service->set_code(sid, "cube(1", Origin::kHuman);
  EXPECT_EQ(code_of([&] { h.service->render(sid, ViewSpec::of(NamedView::kTop), "root"); }),
            ErrorCode::kPrecondition);
  auto failed = h.service->render(sid, ViewSpec::of(NamedView::kTop));
  EXPECT_FALSE(failed.ok());
  ASSERT_FALSE(failed.error_log.empty());
  EXPECT_EQ(failed.error_log[0].line, 1);
}

TEST(Service, ChatRoutesViewsAndComponents) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  auto view = h.service->chat(sid, "show the model from the top view");
  EXPECT_EQ(view["route"]["kind"], "view");
  EXPECT_TRUE(view["render"]["ok"]);
  EXPECT_EQ(h.stub->requests().back().view.camera(), camera_for(NamedView::kTop));
  auto part = h.service->chat(sid, "show the main propeller");
  EXPECT_EQ(part["route"]["kind"], "component");
  EXPECT_EQ(part["bundle"]["component_id"], "root/main_propeller");
  auto answer = h.service->chat(sid, "how many parts are there?");
  EXPECT_EQ(answer["route"]["kind"], "answer");
  EXPECT_FALSE(answer["text"].get<std::string>().empty());
}

TEST(Service, DescribeModelHasAllReportSections) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  auto d = h.service->describe(sid, DescribeMode::kModel);
  ASSERT_TRUE(d.contains("report"));
  for (const char* key : {"description", "summary", "evaluation"})
    EXPECT_FALSE(d["report"][key].get<std::string>().empty()) << key;
  EXPECT_EQ(h.stub->requests().size(), 6u);
}

TEST(Service, DescribeCompareNeedsAPreviousVersion) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(1);", Origin::kHuman);
  EXPECT_EQ(code_of([&] { h.service->describe(sid, DescribeMode::kCompare); }), ErrorCode::kPrecondition);
  h.service->set_code(sid, "cube(2);", Origin::kHuman);
  auto d = h.service->describe(sid, DescribeMode::kCompare);
  EXPECT_FALSE(d["narration"].get<std::string>().empty());
}

TEST(Service, GenerationIsOnlyCommittedOnAccept) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(5);", Origin::kHuman);
  const auto before = h.service->state(sid);
  auto p = h.service->generate(sid, GenerateMode::kCreate, "a sphere with radius 50");
  EXPECT_FALSE(p["committed"]);
  EXPECT_NE(p["code"].get<std::string>().find("sphere"), std::string::npos);
  auto during = h.service->state(sid);
  EXPECT_EQ(during["code"], before["code"]);
  EXPECT_EQ(during["history"], before["history"]);
  EXPECT_EQ(during["proposals"], json::array({p["proposal_id"]}));

  auto accepted = h.service->accept(sid, p["proposal_id"]);
  EXPECT_EQ(accepted["code"], p["code"]);
  EXPECT_EQ(accepted["history"]["record_count"], 2);
  const auto record = h.service->history(sid)["records"].back();
  EXPECT_EQ(record["origin"], "ai");
  EXPECT_TRUE(record.contains("report"));
  EXPECT_FALSE(h.service->changes(sid, Origin::kAi)["changes"].empty());
  for (const auto& c : h.service->changes(sid, Origin::kHuman)["changes"]) EXPECT_NE(c["record_id"], 2);
  EXPECT_EQ(code_of([&] { h.service->accept(sid, p["proposal_id"]); }), ErrorCode::kNotFound);
  h.service->check_consistency(sid);
}

TEST(Service, RejectDiscardsProposal) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "cube(5);", Origin::kHuman);
  auto p = h.service->generate(sid, GenerateMode::kImprove, "add comments");
  auto after = h.service->reject(sid, p["proposal_id"]);
  EXPECT_TRUE(after["proposals"].empty());
  EXPECT_EQ(after["code"], "cube(5);");
  EXPECT_EQ(code_of([&] { h.service->reject(sid, p["proposal_id"]); }), ErrorCode::kNotFound);
}

TEST(Service, UndoRedoRestore) {
  Harness h;
  const auto sid = h.session();
  for (int i = 1; i <= 3; ++i) h.service->set_code(sid, "cube(" + std::to_string(i) + ");", Origin::kHuman);
  EXPECT_EQ(h.service->undo(sid)["code"], "cube(2);");
  EXPECT_EQ(h.service->undo(sid)["code"], "cube(1);");
  EXPECT_EQ(code_of([&] { h.service->undo(sid); }), ErrorCode::kBoundary);
  EXPECT_EQ(h.service->redo(sid)["code"], "cube(2);");
  auto restored = h.service->restore(sid, 3);
  EXPECT_EQ(restored["code"], "cube(3);");
  const auto last = h.service->history(sid)["records"].back();
  EXPECT_EQ(last["label"], "restored from #3");
  EXPECT_EQ(code_of([&] { h.service->restore(sid, 99); }), ErrorCode::kNotFound);
  h.service->check_consistency(sid);
}

TEST(Service, UnknownSessionIsNotFound) {
  Harness h;
  EXPECT_EQ(code_of([&] { h.service->state("abcdef"); }), ErrorCode::kNotFound);
  EXPECT_EQ(code_of([&] { h.service->set_code("abcdef", "cube(1);", Origin::kHuman); }), ErrorCode::kNotFound);
  const auto sid = h.session();
  EXPECT_EQ(code_of([&] { h.service->job(sid, "00ff"); }), ErrorCode::kNotFound);
}

TEST(Service, ProviderFailureLeavesSessionIntact) {
  ServiceConfig config;
  Service service(config, std::make_unique<DownProvider>(), std::make_unique<StubBackend>());
  const auto sid = service.create_session()["session_id"].get<std::string>();
  auto res = service.set_code(sid, "cube(1);\n", Origin::kHuman);
  EXPECT_TRUE(res["committed"]);
  EXPECT_TRUE(res.contains("warning"));
  const auto before = service.state(sid);
  EXPECT_EQ(code_of([&] { service.generate(sid, GenerateMode::kCreate, "a cube"); }), ErrorCode::kTransport);
  EXPECT_EQ(code_of([&] { service.describe(sid, DescribeMode::kModel); }), ErrorCode::kTransport);
  EXPECT_EQ(service.state(sid), before);
  service.check_consistency(sid);
}

TEST(Service, RendererFailureLeavesSessionIntact) {
  Service service({}, std::make_unique<MockProvider>(), std::make_unique<BrokenBackend>());
  const auto sid = service.create_session()["session_id"].get<std::string>();
  service.set_code(sid, "cube(1);", Origin::kHuman);
  const auto before = service.state(sid);
  EXPECT_EQ(code_of([&] { service.render(sid, ViewSpec::of(NamedView::kTop)); }), ErrorCode::kTimeout);
  auto d = service.describe(sid, DescribeMode::kModel);
  EXPECT_FALSE(d["caveats"].empty());
  EXPECT_EQ(service.state(sid), before);
}

TEST(Service, ExpandDeepensHierarchy) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, "module leg() { cube(1); }\nmodule table() { leg(); translate([2,0,0]) leg(); }\ntable();\n",
                      Origin::kHuman);
  const auto tree = h.service->hierarchy(sid)["hierarchy"];
  std::function<const json*(const json&)> find_expandable = [&](const json& n) -> const json* {
    if (n.value("expandable", false)) return &n;
    for (const auto& c : n["children"])
      if (auto* f = find_expandable(c)) return f;
    return nullptr;
  };
  const json* node = find_expandable(tree);
  ASSERT_NE(node, nullptr) << tree.dump(2);
  const std::string id = (*node)["id"];
  auto expanded = h.service->expand(sid, id, true)["hierarchy"];
  EXPECT_NE(expanded, tree);
  EXPECT_EQ(h.service->expand(sid, id, false)["hierarchy"], tree);
  EXPECT_EQ(code_of([&] { h.service->expand(sid, "root/none", true); }), ErrorCode::kNotFound);
}

TEST(Service, ConfigParsing) {
  auto c = json::parse(R"({"port": 9000, "session_dir": "/tmp/s",
    "renderer": {"backend": "stub", "timeout_seconds": 5},
    "provider": {"kind": "http", "model": "m", "api_key_env": "MY_KEY"}})")
               .get<ServiceConfig>();
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.renderer_backend, "stub");
  EXPECT_EQ(c.renderer.timeout_seconds, 5);
  EXPECT_EQ(c.provider, "http");
  EXPECT_EQ(c.llm.api_key_env, "MY_KEY");
  EXPECT_EQ(json(c).get<ServiceConfig>().llm.model, "m");
  EXPECT_EQ(code_of([] { json::parse(R"({"provider": "magic"})").get<ServiceConfig>(); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { json::parse(R"({"port": "x"})").get<ServiceConfig>(); }), ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { load_service_config("/nonexistent/config.json"); }), ErrorCode::kConfiguration);
}

TEST(Service, ErrorStatusMapping) {
  EXPECT_EQ(http_status(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status(ErrorCode::kPrecondition), 400);
  EXPECT_EQ(http_status(ErrorCode::kTimeout), 504);
  auto body = error_body(Error(ErrorCode::kBoundary, "nothing to undo", "cursor=0"));
  EXPECT_EQ(body, (json{{"code", "boundary"}, {"message", "nothing to undo"}, {"detail", "cursor=0"}}));
}

TEST(Persistence, SessionsSurviveRestart) {
  const auto dir = scratch("persist");
  ServiceConfig config;
  config.session_dir = dir;
  std::string sid;
  json before;
  {
    Harness h(config);
    sid = h.session();
    h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
    auto p = h.service->generate(sid, GenerateMode::kImprove, "add comments");
    h.service->accept(sid, p["proposal_id"]);
    h.service->undo(sid);
    before = h.service->state(sid);
  }
  Harness again(config);
  EXPECT_EQ(again.service->state(sid), before);
  EXPECT_EQ(again.service->redo(sid)["history"]["record_count"], 2);
  fs::remove_all(dir);
}

TEST(Persistence, NoCredentialMaterialIsWritten) {
  const std::string secret = "sk-test-6f1d2c9e8b7a4455aa01";
  ::setenv("SCADSCOPE_TEST_SECRET", secret.c_str(), 1);
  const auto dir = scratch("creds");
  ServiceConfig config;
  config.session_dir = dir;
  config.provider = "http";
  config.renderer_backend = "stub";
  config.llm.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  config.llm.api_key_env = "SCADSCOPE_TEST_SECRET";
  config.llm.timeout_seconds = 2;
  auto service = Service::from_config(config);
  const auto sid = service->create_session()["session_id"].get<std::string>();
  auto res = service->set_code(sid, "cube(1);\n", Origin::kHuman);
  EXPECT_TRUE(res["committed"]);
  service->set_code(sid, "cube(2);\n", Origin::kHuman);
  service->undo(sid);
  std::string everything = service->state(sid).dump() + service->history(sid).dump() + json(config).dump();
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      everything += scadscope::testing::read_file(e.path());
      ++files;
    }
  EXPECT_GE(files, 2u);
  EXPECT_EQ(everything.find(secret), std::string::npos);
  EXPECT_EQ(everything.find("6f1d2c9e8b7a"), std::string::npos);
  EXPECT_NE(everything.find("SCADSCOPE_TEST_SECRET"), std::string::npos);
  ::unsetenv("SCADSCOPE_TEST_SECRET");
  fs::remove_all(dir);
}

// Random request interleavings over two sessions; every step must leave
// each session consistent and only fail with documented errors.
TEST(StateMachine, RandomInterleavingsStayConsistent) {
  const std::vector<std::string> programs = {
      "cube(1);", "sphere(2);\ncube(3);", fixture("helicopter.scad"), "cube(", "module m() { cube(1); }\nm();",
      "for (i = [0:2]) translate([i,0,0]) cube(1);", "cylinder(h=5, d=2);", ""};
  for (unsigned seed = 1; seed <= 4; ++seed) {
    Harness h;
    std::mt19937 rng(seed);
    std::vector<std::string> sids = {h.session(), h.session()};
    std::map<std::string, std::vector<std::string>> proposals;
    std::map<std::string, std::size_t> history_size;
    for (int step = 0; step < 250; ++step) {
      const auto& sid = sids[rng() % sids.size()];
      const int op = static_cast<int>(rng() % 12);
      try {
        switch (op) {
          case 0:
          case 1:
            h.service->set_code(sid, programs[rng() % programs.size()], rng() % 4 ? Origin::kHuman : Origin::kAi,
                                rng() % 5 == 0);
            break;
          case 2: h.service->undo(sid); break;
          case 3: h.service->redo(sid); break;
          case 4: h.service->restore(sid, 1 + static_cast<int>(rng() % 6)); break;
          case 5: {
            auto p = h.service->generate(sid, rng() % 2 ? GenerateMode::kCreate : GenerateMode::kImprove,
                                         rng() % 2 ? "a cube with size 4" : "add comments");
            proposals[sid].push_back(p["proposal_id"]);
            break;
          }
          case 6:
          case 7:
            if (!proposals[sid].empty()) {
              const auto pid = proposals[sid][rng() % proposals[sid].size()];
              if (op == 6)
                h.service->accept(sid, pid);
              else
                h.service->reject(sid, pid);
            }
            break;
          case 8: h.service->select(sid, std::string("root"), rng() % 3 == 0); break;
          case 9: h.service->render(sid, ViewSpec::thumbnail(six_views()[rng() % 6])); break;
          case 10: h.service->chat(sid, rng() % 2 ? "show the front view" : "what is this?"); break;
          case 11: h.service->hierarchy(sid); break;
        }
      } catch (const Error& e) {
        const auto c = e.code();
        EXPECT_TRUE(c == ErrorCode::kBoundary || c == ErrorCode::kNotFound || c == ErrorCode::kPrecondition ||
                    c == ErrorCode::kGeneration)
            << "op " << op << ": " << e.what();
      }
      for (const auto& s : sids) {
        ASSERT_NO_THROW(h.service->check_consistency(s)) << "seed " << seed << " step " << step;
        const auto n = h.service->history(s)["records"].size();
        EXPECT_GE(n, history_size[s]);
        history_size[s] = n;
      }
    }
    h.service->wait_idle();
  }
}

TEST(StateMachine, ConcurrentClientsStayConsistent) {
  Harness h;
  const auto sid = h.session();
  h.service->set_code(sid, fixture("helicopter.scad"), Origin::kHuman);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      std::mt19937 rng(100 + t);
      for (int i = 0; i < 40; ++i) {
        try {
          switch (rng() % 5) {
            case 0: h.service->set_code(sid, "cube(" + std::to_string(rng() % 5) + ");", Origin::kHuman); break;
            case 1: h.service->undo(sid); break;
            case 2: h.service->select(sid, std::string("root"), false); break;
            case 3: h.service->render(sid, ViewSpec::thumbnail(NamedView::kFront)); break;
            case 4: h.service->state(sid); break;
          }
        } catch (const Error&) {
        }
      }
    });
  for (auto& t : threads) t.join();
  h.service->wait_idle();
  EXPECT_NO_THROW(h.service->check_consistency(sid));
}

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    harness_ = std::make_unique<Harness>();
    mount_routes(server_, *harness_->service);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
    harness_->service->wait_idle();
  }

  json call(const std::string& method, const std::string& path, const json& body = nullptr, int expect = 200) {
    httplib::Result r = method == "GET"   ? client_->Get(path)
                        : method == "PUT" ? client_->Put(path, body.is_null() ? "" : body.dump(), "application/json")
                                          : client_->Post(path, body.is_null() ? "" : body.dump(), "application/json");
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << method << " " << path << ": " << r->body;
    EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
    return json::parse(r->body);
  }

  std::unique_ptr<Harness> harness_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpApi, FullFlow) {
  EXPECT_EQ(call("GET", "/v1/health")["status"], "ok");
  const std::string sid = call("POST", "/v1/sessions", nullptr, 201)["session_id"];
  const std::string base = "/v1/sessions/" + sid;
  auto set = call("PUT", base + "/code", {{"code", fixture("helicopter.scad")}});
  EXPECT_EQ(set["hierarchy"]["children"].size(), 5u);
  EXPECT_EQ(call("GET", base + "/code")["code"], fixture("helicopter.scad"));
  EXPECT_EQ(top_level_ids(call("GET", base + "/hierarchy")["hierarchy"]).size(), 5u);

  auto bundle = call("POST", base + "/select", {{"component_id", "root/main_propeller"}, {"want_description", true}});
  const std::string token = bundle["description_token"];
  json job;
  for (int i = 0; i < 300; ++i) {
    job = call("GET", base + "/descriptions/" + token);
    if (job["status"] != "pending") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_EQ(job["status"], "done");

  auto png = client_->Get(base + "/render?view=top&width=320&height=240");
  ASSERT_TRUE(png);
  EXPECT_EQ(png->status, 200);
  EXPECT_EQ(png->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(decode_png(png->body).width, 320);
  auto highlighted = client_->Post(base + "/render", json{{"view", "front"}, {"highlight", "root/body"}}.dump(),
                                   "application/json");
  ASSERT_TRUE(highlighted);
  EXPECT_EQ(highlighted->get_header_value("Content-Type"), "image/png");

  auto described = call("POST", base + "/describe", {{"mode", "model"}});
  EXPECT_FALSE(described["report"]["evaluation"].get<std::string>().empty());
  auto async = call("POST", base + "/describe", {{"mode", "general"}, {"async", true}}, 202);
  EXPECT_TRUE(async.contains("token"));

  auto proposal = call("POST", base + "/generate", {{"mode", "improve"}, {"text", "add comments"}});
  EXPECT_EQ(call("GET", base + "/history")["records"].size(), 1u);
  call("POST", base + "/proposals/" + proposal["proposal_id"].get<std::string>() + "/accept");
  auto hist = call("GET", base + "/history");
  EXPECT_EQ(hist["records"].size(), 2u);
  EXPECT_EQ(hist["records"][1]["origin"], "ai");
  EXPECT_FALSE(call("GET", base + "/history/changes?origin=ai")["changes"].empty());
  EXPECT_EQ(call("POST", base + "/undo")["code"], fixture("helicopter.scad"));
  call("POST", base + "/redo");
  EXPECT_EQ(call("POST", base + "/history/1/restore")["history"]["record_count"], 3);
  EXPECT_EQ(call("POST", base + "/chat", {{"text", "show the left side please"}})["route"]["view"], "left");
  EXPECT_FALSE(call("POST", base + "/summarize", {{"text", "One. Two."}})["summary"].get<std::string>().empty());
}

TEST_F(HttpApi, StructuredErrors) {
  auto missing = call("GET", "/v1/sessions/abc123", nullptr, 404);
  EXPECT_EQ(missing["code"], "not_found");
  EXPECT_TRUE(missing.contains("message"));
  EXPECT_TRUE(missing.contains("detail"));
  EXPECT_EQ(call("GET", "/v1/nowhere", nullptr, 404)["code"], "not_found");

  const std::string sid = call("POST", "/v1/sessions", nullptr, 201)["session_id"];
  const std::string base = "/v1/sessions/" + sid;
  auto bad = client_->Put(base + "/code", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["code"], "precondition");
  EXPECT_EQ(call("PUT", base + "/code", {{"text", "x"}}, 400)["code"], "precondition");
  EXPECT_EQ(call("POST", base + "/undo", nullptr, 409)["code"], "boundary");
  EXPECT_EQ(call("POST", base + "/proposals/p9/accept", nullptr, 404)["code"], "not_found");
  EXPECT_EQ(call("GET", base + "/render?view=sideways", nullptr, 400)["code"], "precondition");

  call("PUT", base + "/code", {{"code", "cube(1);\nsphere(;\n"}});
  auto failed = call("GET", base + "/render?view=top", nullptr, 422);
  EXPECT_EQ(failed["code"], "render_failed");
  ASSERT_FALSE(failed["error_log"].empty());
  EXPECT_EQ(failed["error_log"][0]["line"], 2);
}
