#include <gtest/gtest.h>

#include <deque>
#include <functional>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "scadscope/error.hpp"
#include "scadscope/orchestrator.hpp"
#include "test_util.hpp"

namespace scadscope {
namespace {

using testing::fixture;
using testing::shape_of;
using testing::tree_of;

// Replays canned replies and records the requests it saw.
class ScriptedProvider : public LlmProvider {
 public:
  explicit ScriptedProvider(std::deque<std::function<std::string()>> replies)
      : replies_(std::move(replies)) {}
  ChatResponse complete(const ChatRequest& request) override {
    requests.push_back(request);
    if (replies_.empty()) throw Error(ErrorCode::kTransport, "script exhausted", "retryable=false");
    auto next = std::move(replies_.front());
    replies_.pop_front();
    return {next(), "scripted"};
  }
  std::string name() const override { return "scripted"; }
  std::vector<ChatRequest> requests;

 private:
  std::deque<std::function<std::string()>> replies_;
};

std::function<std::string()> say(std::string text) {
  return [text] { return text; };
}

std::function<std::string()> fail_transport() {
  return []() -> std::string { throw Error(ErrorCode::kTransport, "down", "retryable=true"); };
}

ErrorCode code_of(const std::function<void()>& f, std::string* detail = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorCode::kIo;
}

const std::string kLandingGear = R"(module landing_gear() {
   // First vertical support leg
   cylinder(h=25, d=2);
   // 30 units forward
   translate([0, 30, 0])
   // Second vertical support leg
   cylinder(h=25, d=2);
   translate([0, 10, 0])
   // Horizontal connecting base
   cube([3, 60, 1], center=true);
}

landing_gear();
)";

// ---- mock provider -------------------------------------------------------

TEST(Mock, SummarizeTakesFirstSentence) {
  MockProvider mock;
  Orchestrator orch(mock);
  EXPECT_EQ(orch.summarize("The helicopter has a body. It also has two rotors.\n\nThe tail is long."),
            "The helicopter has a body.");
  EXPECT_EQ(orch.summarize("A single sentence about a cube."), "A single sentence about a cube.");
  EXPECT_EQ(orch.summarize("no punctuation at all"), "no punctuation at all");
  EXPECT_EQ(code_of([&] { orch.summarize("  \n"); }), ErrorCode::kPrecondition);
  EXPECT_EQ(mock.calls(), 3);
}

TEST(Mock, CreateSphere) {
  MockProvider mock;
  Orchestrator orch(mock);
  const auto result = orch.generate_code(GenerateMode::kCreate, "a sphere of radius 50", "");
  EXPECT_NE(result.code.find("sphere(50)"), std::string::npos) << result.code;
  EXPECT_TRUE(parse(result.code)->ok());
  EXPECT_EQ(result.attempts, 1);
  EXPECT_EQ(result.report.description, "a sphere of radius 50");
  ASSERT_EQ(result.report.code_changes.size(), 1u);
  EXPECT_EQ(result.report.code_changes[0].start_line, 1);
}

TEST(Mock, CreateSeveralShapes) {
  MockProvider mock;
  Orchestrator orch(mock);
  const auto result =
      orch.generate_code(GenerateMode::kCreate, "a cube of size 20 next to a cylinder with height 30 and radius 4", "");
  EXPECT_NE(result.code.find("cube(20)"), std::string::npos);
  EXPECT_NE(result.code.find("cylinder(h=30, r=4)"), std::string::npos);
  const auto tree = tree_of(result.code);
  EXPECT_EQ(std::count_if(tree.preorder().begin(), tree.preorder().end(),
                          [](const ComponentNode* n) { return n->kind == ComponentKind::kPrimitive; }),
            2);
}

TEST(Mock, ImproveAddCommentsKeepsTreeShape) {
  MockProvider mock;
  Orchestrator orch(mock);
  const auto result = orch.generate_code(GenerateMode::kImprove, "add comments", kLandingGear);
  ASSERT_TRUE(parse(result.code)->ok());
  EXPECT_NE(result.code, kLandingGear);
  EXPECT_NE(result.code.find("// Module landing_gear"), std::string::npos);
  EXPECT_EQ(shape_of(tree_of(result.code, testing::deep())), shape_of(tree_of(kLandingGear, testing::deep())));
  EXPECT_FALSE(result.report.evaluation.empty());
  EXPECT_FALSE(result.report.per_component.empty());
}

TEST(Mock, ImproveAddCommentsAcrossFixtures) {
  MockProvider mock;
  Orchestrator orch(mock);
  for (const auto& name : testing::fixture_names()) {
    const auto code = fixture(name);
    const auto result = orch.generate_code(GenerateMode::kImprove, "please add comments", code);
    EXPECT_EQ(shape_of(tree_of(result.code, testing::deep())), shape_of(tree_of(code, testing::deep())))
        << name;
  }
}

TEST(Mock, GeneratePreconditions) {
  MockProvider mock;
  Orchestrator orch(mock);
  EXPECT_EQ(code_of([&] { orch.generate_code(GenerateMode::kCreate, "   ", ""); }), ErrorCode::kPrecondition);
  EXPECT_EQ(code_of([&] { orch.generate_code(GenerateMode::kImprove, "tidy", "\n"); }), ErrorCode::kPrecondition);
  EXPECT_EQ(mock.calls(), 0);
}

TEST(Mock, ChatNamesTheCube) {
  MockProvider mock;
  Orchestrator orch(mock);
  const auto code = "cube(10);\n";
  const auto tree = tree_of(code);
  const auto result = orch.chat("what is this model?", code, &tree);
  EXPECT_EQ(result.route.kind, ChatRoute::Kind::kAnswer);
  EXPECT_NE(result.text.find("cube"), std::string::npos) << result.text;
  const auto empty = orch.chat("what is this model?", "", nullptr);
  EXPECT_NE(empty.text.find("empty"), std::string::npos);
}

TEST(Mock, CompareIdenticalVersions) {
  MockProvider mock;
  Orchestrator orch(mock);
  DescribeInput in;
  in.mode = DescribeMode::kCompare;
  in.code = in.previous_code = fixture("helicopter.scad");
  const auto out = orch.describe(in);
  EXPECT_NE(out.narration.find("no visible change"), std::string::npos) << out.narration;
  EXPECT_FALSE(out.report);
}

TEST(Mock, CompareChangedVersions) {
  MockProvider mock;
  Orchestrator orch(mock);
  DescribeInput in;
  in.mode = DescribeMode::kCompare;
  in.previous_code = "cube(1);\n";
  in.code = "cube(2);\n";
  in.images = {ImageAttachment{"image/png", "cur", "top"}};
  in.previous_images = {ImageAttachment{"image/png", "prev", "top"}};
  const auto out = orch.describe(in);
  EXPECT_NE(out.narration.find("Line 1: Cube's parameter (size) changed"), std::string::npos);

  ScriptedProvider p({say("Changed.")});
  Orchestrator scripted(p);
  scripted.describe(in);
  const auto& sent = p.requests.at(0).messages.front();
  ASSERT_EQ(sent.images.size(), 2u);
  EXPECT_EQ(sent.images[0].bytes, "prev");
  EXPECT_EQ(sent.images[1].bytes, "cur");
  EXPECT_NE(sent.text.find("the last 1 images"), std::string::npos);

  in.previous_images.clear();
  EXPECT_EQ(code_of([&] { orch.describe(in); }), ErrorCode::kPrecondition);
}

TEST(Mock, ComponentNarrationEchoesChildLabels) {
  MockProvider mock;
  Orchestrator orch(mock);
  const auto code = fixture("helicopter.scad");
  const auto tree = tree_of(code, testing::deep());
  const auto& prop = resolve_component(tree, "root/main_propeller");
  DescribeInput in;
  in.mode = DescribeMode::kComponent;
  in.code = code;
  in.component = component_context(tree, prop);
  const auto out = orch.describe(in);
  EXPECT_NE(out.narration.find(prop.label), std::string::npos);
  ASSERT_FALSE(prop.children.empty());
  for (const auto& c : prop.children) EXPECT_NE(out.narration.find(c.label), std::string::npos) << c.label;
  // Relation to the rest of the model: siblings are named.
  EXPECT_NE(out.narration.find("rear_propeller"), std::string::npos);
  EXPECT_NE(out.caveats.size(), 0u);  // no isolated renders supplied
  EXPECT_EQ(out.narration.find('#'), std::string::npos);
}

TEST(Mock, ModelModeOnHelicopterHasAllSections) {
  MockProvider mock;
  Orchestrator orch(mock);
  DescribeInput in;
  in.mode = DescribeMode::kModel;
  in.code = fixture("helicopter.scad");
  for (const char* v : {"top", "bottom", "front", "rear", "left", "right"})
    in.images.push_back({"image/png", std::string("png-") + v, v});
  const auto out = orch.describe(in);
  ASSERT_TRUE(out.report);
  EXPECT_FALSE(out.report->summary.empty());
  EXPECT_FALSE(out.report->description.empty());
  EXPECT_FALSE(out.report->evaluation.empty());
  EXPECT_EQ(out.report->per_component.size(), 5u);
  EXPECT_FALSE(out.report->code_changes.empty());
  EXPECT_TRUE(out.caveats.empty());
  EXPECT_EQ(out.narration, out.report->summary);
  EXPECT_EQ(mock.calls(), 3);  // images, code analysis, change list
}

TEST(Mock, ModelModeWithoutImagesIsCodeOnlyWithCaveat) {
  MockProvider mock;
  Orchestrator orch(mock);
  DescribeInput in;
  in.mode = DescribeMode::kModel;
  in.code = "cube(10);\n";
  in.previous_code = in.code;
  in.render_errors = {"top: renderer missing"};
  const auto out = orch.describe(in);
  ASSERT_TRUE(out.report);
  EXPECT_FALSE(out.report->summary.empty());
  ASSERT_EQ(out.report->caveats.size(), 2u);
  EXPECT_NE(out.report->caveats[0].find("renderer missing"), std::string::npos);
  EXPECT_NE(out.report->caveats[1].find("code only"), std::string::npos);
  EXPECT_TRUE(out.report->code_changes.empty());
  EXPECT_EQ(mock.calls(), 1);
}

TEST(Mock, GeneralNarrationIsPlainAndLeadsWithOneSentence) {
  MockProvider mock;
  Orchestrator orch(mock);
  DescribeInput in;
  in.mode = DescribeMode::kGeneral;
  in.code = fixture("helicopter.scad");
  const auto out = orch.describe(in);
  EXPECT_TRUE(out.narration.starts_with("The model is made of 5 parts"));
  EXPECT_EQ(out.narration.find('#'), std::string::npos);
  EXPECT_EQ(out.narration.find('*'), std::string::npos);
}

TEST(Mock, IsDeterministic) {
  MockProvider a, b;
  for (auto id : all_templates()) {
    ChatRequest req;
    req.template_id = id;
    req.context = {{"code", fixture("helicopter.scad")}, {"previous_code", "cube(1);"}, {"text", "a cube of size 3. More."}};
    EXPECT_EQ(a.complete(req).text, b.complete(req).text) << to_string(id);
  }
}

TEST(Mock, MatchCodeParts) {
  MockProvider mock;
  ChatRequest req;
  req.template_id = TemplateId::kMatchCodeParts;
  req.context = {{"code", fixture("helicopter.scad")}};
  const auto r = parse_report(mock.complete(req).text);
  ASSERT_EQ(r.per_component.size(), 5u);
  EXPECT_EQ(r.per_component[0].code, "body();");
}

// ---- track_changes retry and fallback -----------------------------------

TEST(Track, IdenticalTextsSkipTheProvider) {
  ScriptedProvider p({});
  Orchestrator orch(p);
  const auto out = orch.track_changes("cube(1);\n", "cube(1);\n", Origin::kHuman);
  EXPECT_TRUE(out.records.empty());
  EXPECT_FALSE(out.used_fallback);
  EXPECT_TRUE(p.requests.empty());
}

TEST(Track, ValidJsonIsUsed) {
  ScriptedProvider p({say(R"([{"startLine": 1, "endLine": 1, "description": "Resized the cube"}])")});
  Orchestrator orch(p);
  const auto out = orch.track_changes("cube(1);\n", "cube(2);\n", Origin::kAi);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0].description, "Resized the cube");
  EXPECT_EQ(out.records[0].origin, Origin::kAi);
  EXPECT_FALSE(out.used_fallback);
  ASSERT_EQ(p.requests.size(), 1u);
  EXPECT_EQ(p.requests[0].template_id, TemplateId::kTrackChanges);
  const auto& text = p.requests[0].messages.front().text;
  EXPECT_LT(text.find("cube(1);"), text.find("cube(2);"));
}

TEST(Track, MalformedOutputIsRetriedOnce) {
  ScriptedProvider p({say("Here you go: []"),
                      say(R"([{"startLine": 1, "endLine": 1, "description": "Resized"}])")});
  Orchestrator orch(p);
  const auto out = orch.track_changes("cube(1);\n", "cube(2);\n", Origin::kAi);
  EXPECT_FALSE(out.used_fallback);
  EXPECT_EQ(p.requests.size(), 2u);
  EXPECT_EQ(out.records[0].description, "Resized");
}

TEST(Track, FallsBackToLocalDiffAfterTwoFailures) {
  ScriptedProvider p({say("nope"), say(R"([{"startLine": 7, "endLine": 9, "description": "x"}])")});
  Orchestrator orch(p);
  const auto out = orch.track_changes("cube(1);\n", "cube(2);\n", Origin::kHuman);
  EXPECT_TRUE(out.used_fallback);
  EXPECT_FALSE(out.warning.empty());
  EXPECT_EQ(out.records, local_changes("cube(1);\n", "cube(2);\n", Origin::kHuman));
  EXPECT_EQ(p.requests.size(), 2u);
}

TEST(Track, TransportErrorFallsBackWithoutRetry) {
  ScriptedProvider p({fail_transport()});
  Orchestrator orch(p);
  const auto out = orch.track_changes("a;\n", "a;\nb;\n", Origin::kAi);
  EXPECT_TRUE(out.used_fallback);
  EXPECT_NE(out.warning.find("down"), std::string::npos);
  ASSERT_EQ(out.records.size(), 1u);
  EXPECT_EQ(out.records[0].start_line, 2);
  EXPECT_EQ(p.requests.size(), 1u);
}

// ---- generate: extraction and repair ------------------------------------

TEST(Generate, RepairRoundTripQuotesDiagnostics) {
  ScriptedProvider p({say("##Code##\n'''openscad'''\ncube(10;\n'''openscad'''"),
                      say("##Code##\n'''openscad'''\ncube(10);\n'''openscad'''"),
                      say("[]")});
  Orchestrator orch(p);
  const auto out = orch.generate_code(GenerateMode::kCreate, "a cube", "");
  EXPECT_EQ(out.code, "cube(10);\n");
  EXPECT_EQ(out.attempts, 2);
  ASSERT_GE(p.requests.size(), 2u);
  const auto& repair = p.requests[1].messages;
  ASSERT_EQ(repair.size(), 3u);
  EXPECT_EQ(repair[1].role, "assistant");
  EXPECT_NE(repair[2].text.find("line 1"), std::string::npos);
}

TEST(Generate, UnparseableTwiceIsGenerationErrorWithRaw) {
  const std::string raw = "'''openscad'''\ncube(;\n'''openscad'''";
  ScriptedProvider p({say(raw), say(raw)});
  Orchestrator orch(p);
  std::string detail;
  EXPECT_EQ(code_of([&] { orch.generate_code(GenerateMode::kCreate, "a cube", ""); }, &detail),
            ErrorCode::kGeneration);
  EXPECT_EQ(detail, raw);
}

TEST(Generate, NoCodeIsGenerationError) {
  ScriptedProvider p({say("I cannot do that."), say("Still no.")});
  Orchestrator orch(p);
  std::string detail;
  EXPECT_EQ(code_of([&] { orch.generate_code(GenerateMode::kCreate, "a cube", ""); }, &detail),
            ErrorCode::kGeneration);
  EXPECT_EQ(detail, "Still no.");
}

TEST(Generate, ExtractCode) {
  EXPECT_EQ(extract_code("x\n'''openscad'''\ncube(1);\n'''openscad'''\n", ""), "cube(1);\n");
  EXPECT_EQ(extract_code("```openscad\nsphere(2);\n```\nthen\n```\ncube(3);\n```", ""), "cube(3);\n");
  EXPECT_EQ(extract_code("```python\nprint(1)\n```", ""), std::nullopt);
  EXPECT_EQ(extract_code("'''openscad'''\ncube(1);\n'''openscad'''\n```\nsphere(1);\n```", ""),
            "sphere(1);\n");
  const std::string improve = R"(##Details for Codes' improvement##
"Code1", [Leg],[Comment it]
Original Code: cylinder(h=25, d=2);
Improved Code: cylinder(h=25, d=2);  // leg
)";
  EXPECT_EQ(extract_code(improve, "cube(1);\ncylinder(h=25, d=2);\n"),
            "cube(1);\ncylinder(h=25, d=2);  // leg\n");
  EXPECT_EQ(extract_code(improve, "cube(1);\n"), std::nullopt);
}

// ---- chat routing -------------------------------------------------------

TEST(Chat, CameraIntentRoutesToNamedView) {
  EXPECT_EQ(route_chat("show the model from the top view", nullptr).view, "top");
  EXPECT_EQ(route_chat("Can you show me the back side?", nullptr).view, "rear");
  EXPECT_EQ(route_chat("switch to the default view", nullptr).view, "default");
  EXPECT_EQ(route_chat("Show the left side please", nullptr).kind, ChatRoute::Kind::kView);
  EXPECT_EQ(route_chat("what is on top of the body?", nullptr).kind, ChatRoute::Kind::kAnswer);

  MockProvider mock;
  Orchestrator orch(mock);
  const auto out = orch.chat("show the model from the top view", "cube(1);", nullptr);
  EXPECT_EQ(out.route.kind, ChatRoute::Kind::kView);
  EXPECT_EQ(out.route.view, "top");
  EXPECT_EQ(mock.calls(), 0);
}

TEST(Chat, ComponentIntentRoutesToHighlight) {
  const auto tree = tree_of(fixture("helicopter.scad"));
  const auto route = route_chat("show the main propeller", &tree);
  EXPECT_EQ(route.kind, ChatRoute::Kind::kComponent);
  EXPECT_EQ(route.component_id, "root/main_propeller");
  EXPECT_EQ(route_chat("Show me the rear propeller.", &tree).component_id, "root/rear_propeller");
  EXPECT_EQ(route_chat("show the spaceship", &tree).kind, ChatRoute::Kind::kAnswer);
}

TEST(Chat, PromptCarriesQuestionAndCode) {
  ScriptedProvider p({say("It is a cube.")});
  Orchestrator orch(p);
  const auto out = orch.chat("how big is it?", "cube(3);", nullptr);
  EXPECT_EQ(out.text, "It is a cube.");
  ASSERT_EQ(p.requests.size(), 1u);
  EXPECT_EQ(p.requests[0].template_id, TemplateId::kChat);
  const auto& text = p.requests[0].messages.front().text;
  EXPECT_NE(text.find("**User's Question:** \"how big is it?\""), std::string::npos);
  EXPECT_NE(text.find("cube(3);"), std::string::npos);
  EXPECT_EQ(p.requests[0].messages.size(), 1u);
}

TEST(Build, CodeAppendedOnlyWhenTemplateLacksSlot) {
  const auto a = build_request(TemplateId::kGeneralDescribe, {}, "cube(1);", {}, {});
  EXPECT_NE(a.messages[0].text.find("'''openscad'''\ncube(1);\n'''openscad'''"), std::string::npos);
  const auto b = build_request(TemplateId::kAnalyzeCode, {{"code", "cube(1);"}}, "cube(1);", {}, {});
  EXPECT_EQ(b.messages[0].text.find("OpenSCAD code:"), std::string::npos);
  const auto c = build_request(TemplateId::kCreateModel, {{"text", "x"}}, "", {}, {});
  EXPECT_TRUE(c.messages[0].text.ends_with("*Template Ends*"));
}

// ---- HTTP provider against a local server -------------------------------

class LocalServer {
 public:
  explicit LocalServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server_.Post("/v1/chat/completions", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST(Http, Base64) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(Http, RequestShapeAndReply) {
  nlohmann::json seen;
  std::string auth;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"A cube."}}]})",
                    "application/json");
  });
  LlmProviderConfig config;
  config.endpoint = server.endpoint();
  config.api_key_env = "SCADSCOPE_TEST_KEY";
  HttpProvider provider(config, [](const std::string& name) -> std::optional<std::string> {
    return name == "SCADSCOPE_TEST_KEY" ? std::optional<std::string>("sk-test") : std::nullopt;
  });
  ChatRequest req;
  req.messages.push_back({"user", "describe", {ImageAttachment{"image/png", "foobar", "top"}}});
  req.context = {{"code", "secret context stays local"}};
  const auto reply = provider.complete(req);
  EXPECT_EQ(reply.text, "A cube.");
  EXPECT_EQ(auth, "Bearer sk-test");
  EXPECT_EQ(seen["model"], "gpt-4o-2024-08-06");
  EXPECT_EQ(seen["max_tokens"], 2048);
  const auto& content = seen["messages"][0]["content"];
  EXPECT_EQ(content[0]["text"], "describe");
  EXPECT_EQ(content[1]["image_url"]["url"], "data:image/png;base64,Zm9vYmFy");
  EXPECT_EQ(seen.dump().find("secret context"), std::string::npos);
}

TEST(Http, StatusErrorsCarryRetryMetadata) {
  int status = 500;
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.status = status;
    res.set_content("{}", "application/json");
  });
  LlmProviderConfig config;
  config.endpoint = server.endpoint();
  HttpProvider provider(config, [](const std::string&) { return std::optional<std::string>(); });
  ChatRequest req;
  req.messages.push_back({"user", "hi", {}});
  std::string detail;
  EXPECT_EQ(code_of([&] { provider.complete(req); }, &detail), ErrorCode::kTransport);
  EXPECT_NE(detail.find("retryable=true"), std::string::npos);
  status = 400;
  EXPECT_EQ(code_of([&] { provider.complete(req); }, &detail), ErrorCode::kTransport);
  EXPECT_NE(detail.find("retryable=false"), std::string::npos);
  status = 200;
  EXPECT_EQ(code_of([&] { provider.complete(req); }, &detail), ErrorCode::kTransport);
}

TEST(Http, UnreachableIsRetryableTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  LlmProviderConfig config;
  config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.timeout_seconds = 2;
  HttpProvider provider(config);
  ChatRequest req;
  req.messages.push_back({"user", "hi", {}});
  std::string detail;
  EXPECT_EQ(code_of([&] { provider.complete(req); }, &detail), ErrorCode::kTransport);
  EXPECT_NE(detail.find("retryable=true"), std::string::npos);
}

TEST(Http, ConfigRoundTripHasNoSecret) {
  LlmProviderConfig c;
  c.api_key_env = "MY_KEY_VAR";
  const nlohmann::json j = c;
  LlmProviderConfig back;
  from_json(j, back);
  EXPECT_EQ(back.api_key_env, "MY_KEY_VAR");
  EXPECT_EQ(back.model, "gpt-4o-2024-08-06");
  EXPECT_EQ(code_of([] {
              LlmProviderConfig x;
              from_json(nlohmann::json{{"max_output_tokens", 0}}, x);
            }),
            ErrorCode::kConfiguration);
  EXPECT_EQ(code_of([] { make_provider("carrier-pigeon", {}); }), ErrorCode::kConfiguration);
  EXPECT_EQ(make_provider("mock", {})->name(), "mock");
}

}  // namespace
}  // namespace scadscope
