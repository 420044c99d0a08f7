#pragma once

#include "aescope/assistant/assistant.hpp"
#include "aescope/control/actor.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace aescope::gateway {

// Envelope error codes.
inline constexpr int kParseError = -32700;
inline constexpr int kInvalidParams = -32602;
inline constexpr int kUnknownMethod = -32601;
inline constexpr int kOpError = -32000;

/// Per-connection state. `send` delivers one serialized frame (no newline) to
/// the peer and must be callable from any thread.
class Session {
public:
    using Sender = std::function<void(std::string frame)>;

    explicit Session(Sender send) : send_(std::move(send)) {}

    void send(std::string frame) const {
        if (send_) send_(std::move(frame));
    }
    bool authenticated() const { return authed_.load(); }
    void set_authenticated() { authed_.store(true); }

    /// False when the id (its JSON text) is already in flight on this connection.
    bool begin_request(const std::string& id);
    void end_request(const std::string& id);

private:
    Sender send_;
    std::atomic<bool> authed_{false};
    std::mutex mu_;
    std::set<std::string> in_flight_;
};

struct ServiceConfig {
    /// Required bearer token; empty disables authentication.
    std::string token;
    assistant::LLMClientConfig llm;
    std::string guideline;  // empty: bundled guide
};

/// Envelope protocol over one instrument. Requests {id, method, params} get
/// exactly one response {id, ok, result | error{code, message, data}}; events
/// {event, data} go to every authenticated session.
class Service {
public:
    Service(std::shared_ptr<control::ControlApi> api, ServiceConfig config);
    ~Service();

    /// Handles one frame and returns the response frame. Never throws.
    std::string handle_frame(Session& session, std::string_view frame);
    json handle(Session& session, const json& request);

    /// Methods cheap enough to answer on the I/O thread (auth, cancel).
    static bool is_inline(std::string_view frame);

    void subscribe(const std::shared_ptr<Session>& session);
    void unsubscribe(const Session* session);

    std::vector<std::string> methods() const;
    control::InstrumentActor& actor() { return actor_; }

private:
    using Handler = std::function<json(Session&, const json& params)>;

    void broadcast(const std::string& event, const json& data);
    void register_methods();
    json run_plan(const json& params);

    std::shared_ptr<control::ControlApi> api_;
    ServiceConfig config_;
    std::map<std::string, Handler, std::less<>> handlers_;

    std::mutex subs_mu_;
    std::vector<std::weak_ptr<Session>> subscribers_;

    std::mutex plan_mu_;
    int plans_active_ = 0;
    std::atomic<bool> plan_cancel_{false};

    // Last member: destroyed first, so queued jobs drain while the rest is alive.
    control::InstrumentActor actor_;
};

/// Response envelopes.
json ok_response(const json& id, json result);
json error_response(const json& id, int code, const std::string& message, json data = nullptr);

/// Dataset summary {id, name, metadata, channels:{name:{shape, dtype, units}}};
/// with `include_data` each channel also carries its flattened values.
json dataset_json(const Dataset& ds, bool include_data);

}  // namespace aescope::gateway
