#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "aescope/assistant/llm_client.hpp"
#include "aescope/core/error.hpp"

#include <cstdlib>
#include <regex>

namespace aescope::assistant {

void to_json(json& j, const ChatMessage& m) { j = json{{"role", m.role}, {"content", m.content}}; }

void from_json(const json& j, ChatMessage& m) {
    m.role = j.at("role").get<std::string>();
    m.content = j.at("content").get<std::string>();
}

void from_json(const json& j, LLMClientConfig& c) {
    c.backend = j.value("backend", c.backend);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.model = j.value("model", c.model);
    c.temperature = j.value("temperature", c.temperature);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
}

ChatCompletionsClient::ChatCompletionsClient(LLMClientConfig config) : config_(std::move(config)) {}

std::string ChatCompletionsClient::complete(const std::vector<ChatMessage>& conversation) {
    static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.endpoint, m, url)) {
        throw Error(ErrorCode::invalid_config, "LLM endpoint is not an http(s) URL: " + config_.endpoint);
    }
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw Error(ErrorCode::invalid_config, "environment variable " + config_.api_key_env + " is not set");
    }

    httplib::Client cli(m[1].str());
    const auto secs = static_cast<time_t>(config_.timeout_s);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    cli.set_write_timeout(secs, 0);
    cli.set_bearer_token_auth(key);

    const json body{{"model", config_.model}, {"temperature", config_.temperature}, {"messages", conversation}};
    const std::string path = m[2].matched ? m[2].str() : "/";
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::client_unreachable,
                    "LLM endpoint " + config_.endpoint + " unreachable: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::client_unreachable,
                    "LLM endpoint returned HTTP " + std::to_string(res->status),
                    json{{"status", res->status}, {"body", res->body.substr(0, 2000)}});
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::unparseable_reply, std::string("LLM response is not a chat completion: ") + e.what());
    }
}

std::unique_ptr<LLMClient> make_client(const LLMClientConfig& config) {
    if (config.backend == "mock") return std::make_unique<MockLlmClient>();
    if (config.backend == "live") return std::make_unique<ChatCompletionsClient>(config);
    throw Error(ErrorCode::invalid_config, "unknown LLM backend '" + config.backend + "' (mock or live)");
}

}  // namespace aescope::assistant
