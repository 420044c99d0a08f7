#include "aescope/gateway/server.hpp"

#include "aescope/core/error.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <condition_variable>
#include <deque>
#include <optional>
#include <thread>

namespace aescope::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

constexpr std::size_t kMaxFrame = 64u << 20;

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

struct Core {
    Service& service;
    ServerOptions options;
    net::io_context io;
    std::optional<net::thread_pool> pool;
    tcp::acceptor tcp_acceptor{io};
    tcp::acceptor ws_acceptor{io};
    net::signal_set signals{io};
    std::vector<std::thread> threads;
    unsigned short tcp_bound = 0;
    unsigned short ws_bound = 0;

    std::mutex mu;
    std::condition_variable cv;
    bool stop_requested = false;
    bool stopped = false;

    Core(Service& s, ServerOptions o) : service(s), options(std::move(o)) {}

    void dispatch(const std::shared_ptr<Session>& session, std::string frame) {
        if (Service::is_inline(frame)) {
            session->send(service.handle_frame(*session, frame));
            return;
        }
        net::post(*pool, [this, session, f = std::move(frame)] { session->send(service.handle_frame(*session, f)); });
    }

    void request_stop() {
        {
            std::lock_guard lock(mu);
            stop_requested = true;
        }
        cv.notify_all();
    }

    template <typename Connection>
    void accept(tcp::acceptor& acceptor) {
        acceptor.async_accept(net::make_strand(io), [this, &acceptor](beast::error_code ec, tcp::socket socket) {
            if (ec == net::error::operation_aborted) return;
            if (!ec) std::make_shared<Connection>(std::move(socket), *this)->start();
            accept<Connection>(acceptor);
        });
    }
};

class TcpConnection : public std::enable_shared_from_this<TcpConnection> {
public:
    TcpConnection(tcp::socket socket, Core& impl) : socket_(std::move(socket)), impl_(impl) {}

    void start() {
        std::weak_ptr<TcpConnection> weak = weak_from_this();
        session_ = std::make_shared<Session>([weak](std::string frame) {
            if (auto self = weak.lock()) self->enqueue(std::move(frame));
        });
        impl_.service.subscribe(session_);
        read();
    }

private:
    void read() {
        net::async_read_until(socket_, buffer_, '\n', [self = shared_from_this()](beast::error_code ec, std::size_t n) {
            if (ec == net::error::not_found) {
                // Line longer than the frame limit: answer once, then drop the connection.
                self->enqueue(error_response(nullptr, kParseError, "frame exceeds the size limit").dump());
                self->closing_ = true;
                return;
            }
            if (ec) {
                self->close();
                return;
            }
            std::string line(net::buffers_begin(self->buffer_.data()),
                             net::buffers_begin(self->buffer_.data()) + static_cast<std::ptrdiff_t>(n - 1));
            self->buffer_.consume(n);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!blank(line)) self->impl_.dispatch(self->session_, std::move(line));
            self->read();
        });
    }

    void enqueue(std::string frame) {
        net::post(socket_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
            if (self->closed_) return;
            self->out_.push_back(std::move(f) + "\n");
            if (self->out_.size() == 1) self->write();
        });
    }

    void write() {
        net::async_write(socket_, net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->close();
                return;
            }
            self->out_.pop_front();
            if (!self->out_.empty()) {
                self->write();
            } else if (self->closing_) {
                self->close();
            }
        });
    }

    void close() {
        if (closed_) return;
        closed_ = true;
        impl_.service.unsubscribe(session_.get());
        beast::error_code ignored;
        socket_.shutdown(tcp::socket::shutdown_both, ignored);
        socket_.close(ignored);
    }

    tcp::socket socket_;
    Core& impl_;
    net::streambuf buffer_{kMaxFrame};
    std::deque<std::string> out_;
    std::shared_ptr<Session> session_;
    bool closed_ = false;
    bool closing_ = false;
};

class WsConnection : public std::enable_shared_from_this<WsConnection> {
public:
    WsConnection(tcp::socket socket, Core& impl) : ws_(std::move(socket)), impl_(impl) {}

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.read_message_max(kMaxFrame);
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            std::weak_ptr<WsConnection> weak = self;
            self->session_ = std::make_shared<Session>([weak](std::string frame) {
                if (auto s = weak.lock()) s->enqueue(std::move(frame));
            });
            self->impl_.service.subscribe(self->session_);
            self->read();
        });
    }

private:
    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->impl_.service.unsubscribe(self->session_.get());
                return;
            }
            std::string frame = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            if (!blank(frame)) self->impl_.dispatch(self->session_, std::move(frame));
            self->read();
        });
    }

    void enqueue(std::string frame) {
        net::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
            if (self->closed_) return;
            self->out_.push_back(std::move(f));
            if (self->out_.size() == 1) self->write();
        });
    }

    void write() {
        ws_.text(true);
        ws_.async_write(net::buffer(out_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                return;
            }
            self->out_.pop_front();
            if (!self->out_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    Core& impl_;
    beast::flat_buffer buffer_;
    std::deque<std::string> out_;
    std::shared_ptr<Session> session_;
    bool closed_ = false;
};

void listen(tcp::acceptor& acceptor, const std::string& host, unsigned short port) {
    const tcp::endpoint endpoint(net::ip::make_address(host), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen();
}

}  // namespace

struct Server::Impl : Core {
    using Core::Core;
};

Server::Server(Service& service, ServerOptions options) : impl_(std::make_unique<Impl>(service, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
    auto& im = *impl_;
    try {
        listen(im.tcp_acceptor, im.options.host, im.options.tcp_port);
        im.tcp_bound = im.tcp_acceptor.local_endpoint().port();
        if (im.options.enable_ws) {
            listen(im.ws_acceptor, im.options.host, im.options.ws_port);
            im.ws_bound = im.ws_acceptor.local_endpoint().port();
        }
    } catch (const boost::system::system_error& e) {
        throw Error(ErrorCode::storage_failure, std::string("cannot listen on ") + im.options.host + ": " + e.what());
    }
    im.pool.emplace(static_cast<std::size_t>(std::max(1, im.options.workers)));
    im.accept<TcpConnection>(im.tcp_acceptor);
    if (im.options.enable_ws) im.accept<WsConnection>(im.ws_acceptor);
    im.signals.add(SIGINT);
    im.signals.add(SIGTERM);
    im.signals.async_wait([&im](beast::error_code ec, int) {
        if (!ec) im.request_stop();
    });
    for (int i = 0; i < std::max(1, im.options.io_threads); ++i) im.threads.emplace_back([&im] { im.io.run(); });
}

void Server::stop() {
    auto& im = *impl_;
    {
        std::lock_guard lock(im.mu);
        if (im.stopped) return;
        im.stopped = true;
        im.stop_requested = true;
    }
    im.cv.notify_all();
    im.io.stop();
    for (auto& t : im.threads) {
        if (t.joinable()) t.join();
    }
    beast::error_code ignored;
    im.tcp_acceptor.close(ignored);
    im.ws_acceptor.close(ignored);
    if (im.pool) im.pool->join();
}

void Server::wait() {
    {
        std::unique_lock lock(impl_->mu);
        impl_->cv.wait(lock, [this] { return impl_->stop_requested; });
    }
    stop();
}

unsigned short Server::tcp_port() const { return impl_->tcp_bound; }

unsigned short Server::ws_port() const { return impl_->ws_bound; }

}  // namespace aescope::gateway
