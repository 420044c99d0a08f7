#pragma once

#include "aescope/core/types.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace aescope::gateway {

/// Blocking newline-delimited JSON client. Events that arrive while waiting for
/// a response are kept in events().
class Client {
public:
    Client(const std::string& host, unsigned short port);
    ~Client();

    /// Sends {id, method, params} and returns the matching response envelope.
    json call(const std::string& method, const json& params = json::object());
    /// Like call() but throws Error (the server code, else step_failed) carrying the error object when ok is false.
    json result(const std::string& method, const json& params = json::object());

    /// Sends raw bytes followed by a newline and returns the next non-event frame.
    json send_raw(const std::string& frame);
    void send_line(const std::string& frame);
    json read_frame();

    const std::vector<json>& events() const { return events_; }
    void clear_events() { events_.clear(); }

private:
    json next_response();

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::int64_t next_id_ = 1;
    std::vector<json> events_;
};

}  // namespace aescope::gateway
