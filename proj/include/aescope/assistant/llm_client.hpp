#pragma once

#include "aescope/core/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace aescope::assistant {

struct ChatMessage {
    std::string role;  // system | user | assistant | tool
    std::string content;
    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

void to_json(json& j, const ChatMessage& m);
void from_json(const json& j, ChatMessage& m);

struct LLMClientConfig {
    std::string backend = "mock";  // mock | live
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4";
    double temperature = 0.0;
    double timeout_s = 60.0;
    std::string api_key_env = "AESCOPE_LLM_KEY";
};

void from_json(const json& j, LLMClientConfig& c);

class LLMClient {
public:
    virtual ~LLMClient() = default;
    /// Reply text for the conversation. Throws Error(client_unreachable).
    virtual std::string complete(const std::vector<ChatMessage>& conversation) = 0;
};

/// Rule table over the conversation: a pure function of the messages, so its
/// replies are pinned by golden tests. Plan requests match the latest
/// non-repair user message; protocol extraction requests are answered with
/// regex matches and their character spans.
class MockLlmClient : public LLMClient {
public:
    std::string complete(const std::vector<ChatMessage>& conversation) override;
};

/// Chat-completions wire format over HTTP(S): {model, temperature, messages}
/// in, choices[0].message.content out. The bearer key comes from the
/// configured environment variable.
class ChatCompletionsClient : public LLMClient {
public:
    explicit ChatCompletionsClient(LLMClientConfig config);
    std::string complete(const std::vector<ChatMessage>& conversation) override;

private:
    LLMClientConfig config_;
};

/// Throws Error(invalid_config) for an unknown backend.
std::unique_ptr<LLMClient> make_client(const LLMClientConfig& config);

// Message prefixes shared by the assistant and the mock.
inline constexpr const char* kRepairPrefix = "REPAIR: ";
inline constexpr const char* kExtractionMarker = "TASK: extract band-excitation parameters";

}  // namespace aescope::assistant
