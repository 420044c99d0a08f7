#pragma once

#include "aescope/gateway/service.hpp"

#include <memory>
#include <string>

namespace aescope::gateway {

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short tcp_port = 7878;  // newline-delimited JSON; 0 picks a free port
    unsigned short ws_port = 7879;   // WebSocket, same payloads; 0 picks a free port
    bool enable_ws = true;
    int io_threads = 2;
    int workers = 4;  // threads running requests; auth and cancel run on I/O threads
};

/// TCP and WebSocket front ends for one Service.
class Server {
public:
    Server(Service& service, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds both listeners and starts the threads. Throws Error(storage_failure) on bind errors.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    /// Bound ports, known after start(); 0 before it or for a disabled listener.
    unsigned short tcp_port() const;
    unsigned short ws_port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace aescope::gateway
