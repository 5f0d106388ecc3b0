#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scadscope/prompts.hpp"

namespace scadscope {

struct ImageAttachment {
  std::string mime = "image/png";
  std::string bytes;
  std::string caption;  // e.g. the view name
};

struct ChatMessage {
  std::string role = "user";
  std::string text;
  std::vector<ImageAttachment> images;
};

struct ChatRequest {
  TemplateId template_id = TemplateId::kChat;
  std::vector<ChatMessage> messages;
  // Structured inputs behind the prompt (code, previous_code, text, n,
  // component, ...). Never sent over the wire; the mock answers from it.
  nlohmann::json context = nlohmann::json::object();
};

struct ChatResponse {
  std::string text;
  std::string model;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

struct LlmProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-2024-08-06";
  std::string api_key_env = "OPENAI_API_KEY";  // name of the variable, never its value
  int max_output_tokens = 2048;
  double temperature = 0.2;
  int timeout_seconds = 120;
};

void to_json(nlohmann::json& j, const LlmProviderConfig& config);
/// Missing keys keep their defaults. Throws Error(kConfiguration).
void from_json(const nlohmann::json& j, LlmProviderConfig& config);

/// OpenAI-compatible chat-completions body: text parts plus base64 data
/// URLs for images.
nlohmann::json build_chat_body(const LlmProviderConfig& config, const ChatRequest& request);

/// Extracts choices[0].message.content. Throws Error(kTransport).
std::string parse_chat_reply(std::string_view body);

class HttpProvider : public LlmProvider {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  /// `env` defaults to the process environment.
  explicit HttpProvider(LlmProviderConfig config, EnvLookup env = {});

  /// Transport failures raise Error(kTransport) with detail
  /// "retryable=true|false; ..." (5xx, 429 and connection errors are
  /// retryable).
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  LlmProviderConfig config_;
  EnvLookup env_;
};

/// Rule-based responses keyed on the template id, computed from
/// `ChatRequest::context` with the local parser and hierarchy. Pure apart
/// from the call counter.
class MockProvider : public LlmProvider {
 public:
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }
  int calls() const { return calls_.load(); }

 private:
  std::atomic<int> calls_{0};
};

/// "mock" or "http". Throws Error(kConfiguration) for other kinds.
std::unique_ptr<LlmProvider> make_provider(const std::string& kind,
                                           const LlmProviderConfig& config);

std::string base64_encode(std::string_view bytes);

}  // namespace scadscope
