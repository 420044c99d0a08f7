#include "aescope/gateway/client.hpp"

#include "aescope/core/error.hpp"

#include <boost/asio.hpp>

namespace aescope::gateway {

namespace net = boost::asio;
using tcp = net::ip::tcp;

struct Client::Impl {
    net::io_context io;
    tcp::socket socket{io};
    std::string buffer;
};

Client::Client(const std::string& host, unsigned short port) : impl_(std::make_unique<Impl>()) {
    try {
        tcp::resolver resolver(impl_->io);
        net::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::client_unreachable, "cannot connect to " + host + ":" + std::to_string(port) + ": " + e.what());
    }
}

Client::~Client() = default;

void Client::send_line(const std::string& frame) {
    try {
        net::write(impl_->socket, net::buffer(frame + "\n"));
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::client_unreachable, std::string("write failed: ") + e.what());
    }
}

json Client::read_frame() {
    std::size_t n = 0;
    try {
        n = net::read_until(impl_->socket, net::dynamic_buffer(impl_->buffer), '\n');
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::client_unreachable, std::string("read failed: ") + e.what());
    }
    std::string line = impl_->buffer.substr(0, n - 1);
    impl_->buffer.erase(0, n);
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::unparseable_reply, std::string("server sent invalid JSON: ") + e.what());
    }
}

json Client::next_response() {
    for (;;) {
        json frame = read_frame();
        if (frame.is_object() && frame.contains("event") && !frame.contains("id")) {
            events_.push_back(std::move(frame));
            continue;
        }
        return frame;
    }
}

json Client::send_raw(const std::string& frame) {
    send_line(frame);
    return next_response();
}

json Client::call(const std::string& method, const json& params) {
    const std::int64_t id = next_id_++;
    send_line(json{{"id", id}, {"method", method}, {"params", params}}.dump());
    for (;;) {
        json response = next_response();
        if (response.value("id", json()) == json(id)) return response;
    }
}

json Client::result(const std::string& method, const json& params) {
    json response = call(method, params);
    if (response.value("ok", false)) return response["result"];
    const json& err = response["error"];
    ErrorCode code = ErrorCode::step_failed;
    if (err.contains("data") && err["data"].is_object() && err["data"].contains("code")) {
        try {
            code = error_code_from_string(err["data"]["code"].get<std::string>());
        } catch (const std::exception&) {
        }
    }
    throw Error(code, err.value("message", std::string("request failed")), err);
}

}  // namespace aescope::gateway
