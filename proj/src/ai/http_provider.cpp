#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <openssl/evp.h>

#include <cstdlib>
#include <regex>

#include "scadscope/error.hpp"
#include "scadscope/llm.hpp"

namespace scadscope {

void to_json(nlohmann::json& j, const LlmProviderConfig& c) {
  j = nlohmann::json{{"endpoint", c.endpoint},
                     {"model", c.model},
                     {"api_key_env", c.api_key_env},
                     {"max_output_tokens", c.max_output_tokens},
                     {"temperature", c.temperature},
                     {"timeout_seconds", c.timeout_seconds}};
}

void from_json(const nlohmann::json& j, LlmProviderConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::kConfiguration, "provider config must be an object");
  try {
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfiguration, "invalid provider config", e.what());
  }
  if (c.max_output_tokens <= 0 || c.timeout_seconds <= 0)
    throw Error(ErrorCode::kConfiguration, "provider limits must be positive");
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

nlohmann::json build_chat_body(const LlmProviderConfig& config, const ChatRequest& request) {
  auto messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    if (m.images.empty()) {
      messages.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    auto parts = nlohmann::json::array();
    if (!m.text.empty()) parts.push_back({{"type", "text"}, {"text", m.text}});
    for (const auto& img : m.images) {
      parts.push_back(
          {{"type", "image_url"},
           {"image_url", {{"url", "data:" + img.mime + ";base64," + base64_encode(img.bytes)}}}});
    }
    messages.push_back({{"role", m.role}, {"content", parts}});
  }
  return {{"model", config.model},
          {"messages", messages},
          {"max_tokens", config.max_output_tokens},
          {"temperature", config.temperature}};
}

std::string parse_chat_reply(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kTransport, "provider reply is not JSON", "retryable=false");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kTransport, "provider reply has no message content",
                std::string("retryable=false; ") + e.what());
  }
}

HttpProvider::HttpProvider(LlmProviderConfig config, EnvLookup env)
    : config_(std::move(config)), env_(std::move(env)) {
  if (!env_) {
    env_ = [](const std::string& name) -> std::optional<std::string> {
      const char* v = std::getenv(name.c_str());
      return v ? std::optional<std::string>(v) : std::nullopt;
    };
  }
}

ChatResponse HttpProvider::complete(const ChatRequest& request) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl))
    throw Error(ErrorCode::kConfiguration, "provider endpoint is not an http(s) URL", config_.endpoint);
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/";

  httplib::Client client(base);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  client.set_write_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (auto key = env_(config_.api_key_env); key && !key->empty())
    headers.emplace("Authorization", "Bearer " + *key);

  const auto body = build_chat_body(config_, request).dump();
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransport, "provider unreachable",
                "retryable=true; " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    const bool retryable = res->status == 429 || res->status >= 500;
    throw Error(ErrorCode::kTransport, "provider returned HTTP " + std::to_string(res->status),
                std::string("retryable=") + (retryable ? "true" : "false") + "; status=" +
                    std::to_string(res->status));
  }
  return {parse_chat_reply(res->body), config_.model};
}

std::unique_ptr<LlmProvider> make_provider(const std::string& kind, const LlmProviderConfig& config) {
  if (kind == "mock") return std::make_unique<MockProvider>();
  if (kind == "http") return std::make_unique<HttpProvider>(config);
  throw Error(ErrorCode::kConfiguration, "unknown provider kind '" + kind + "'");
}

}  // namespace scadscope
