#pragma once

#include "adapt/service/service.hpp"

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace adapt::service {

// HTTP status for an error code; 500 for unknown codes.
int status_for(const std::string& code);

// JSON/HTTP v1 facade over a Service.
class HttpServer {
public:
    // `bearer_token` empty disables auth.
    HttpServer(Service& service, std::string bearer_token);
    ~HttpServer();

    // Binds to host:port (port 0 picks a free port) and returns the bound
    // port. Throws ConfigError when the address is unavailable.
    int bind(const std::string& host, int port);
    // Serves until stop(); in-flight requests finish first.
    void listen();
    // Blocks until listen() is accepting connections.
    void wait_until_ready() const;
    void stop();

private:
    void install_routes();

    Service& service_;
    std::string bearer_token_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace adapt::service
