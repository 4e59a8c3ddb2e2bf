#include "adapt/service/http.hpp"

#include "adapt/common/errors.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace adapt::service {

using nlohmann::json;

int status_for(const std::string& code) {
    static const std::map<std::string, int> table = {
        {"validation", 400},   {"mode", 400},        {"budget_too_small", 400}, {"unauthorized", 401},
        {"not_found", 404},    {"conflict", 409},    {"sequence", 409},         {"precondition", 409},
        {"gateway_unavailable", 503}};
    auto it = table.find(code);
    return it == table.end() ? 500 : it->second;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::string& code, const std::string& message) {
    send_json(res, status_for(code), {{"error", message}, {"code", code}});
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
}

std::string required_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) throw ValidationError(std::string("missing string field '") + key + "'");
    return it->get<std::string>();
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Maps library errors onto {error, code} bodies.
httplib::Server::Handler guarded(Handler fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const json::exception& e) {
            send_error(res, "validation", e.what());
        } catch (const std::exception& e) {
            spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
            send_error(res, "internal", e.what());
        }
    };
}

}  // namespace

HttpServer::HttpServer(Service& service, std::string bearer_token)
    : service_(service), bearer_token_(std::move(bearer_token)), server_(std::make_unique<httplib::Server>()) {
    // SO_REUSEPORT would let a second server share a port that is already in use.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
    auto& s = *server_;
    s.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
        if (bearer_token_.empty() || !req.path.starts_with("/api/")) return httplib::Server::HandlerResponse::Unhandled;
        if (req.get_header_value("Authorization") == "Bearer " + bearer_token_) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        send_error(res, "unauthorized", "missing or invalid bearer token");
        return httplib::Server::HandlerResponse::Handled;
    });
    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        std::string code = res.status == 404 ? "not_found" : res.status == 405 ? "method_not_allowed" : "http";
        res.set_content(json{{"error", "request failed with status " + std::to_string(res.status)}, {"code", code}}.dump(),
                        "application/json");
    });

    s.Get("/healthz", guarded([this](const auto&, auto& res) {
        auto h = service_.health();
        send_json(res, h["status"] == "ok" ? 200 : 503, h);
    }));

    s.Post("/api/v1/chat", guarded([this](const auto& req, auto& res) {
        auto body = body_of(req);
        send_json(res, 200, service_.chat(required_string(body, "user_id"), required_string(body, "session_id"),
                                          required_string(body, "message")));
    }));

    s.Post("/api/v1/feedback", guarded([this](const auto& req, auto& res) {
        auto body = body_of(req);
        auto turn = body.find("turn_index");
        if (turn == body.end() || !turn->is_number_integer()) throw ValidationError("missing integer field 'turn_index'");
        std::optional<std::string> text;
        if (body.contains("text") && body["text"].is_string()) text = body["text"].template get<std::string>();
        service_.feedback(required_string(body, "user_id"), required_string(body, "session_id"),
                          turn->template get<int>(), parse_signal(required_string(body, "signal")), text);
        send_json(res, 202, {{"accepted", true}});
    }));

    s.Post(R"(/api/v1/sessions/([^/]+)/end)", guarded([this](const auto& req, auto& res) {
        if (!req.has_param("user_id")) throw ValidationError("missing query parameter 'user_id'");
        send_json(res, 200, service_.end_session(req.get_param_value("user_id"), req.matches[1]));
    }));

    s.Get(R"(/api/v1/users/([^/]+)/profile)", guarded([this](const auto& req, auto& res) {
        send_json(res, 200, service_.profile(req.matches[1]));
    }));

    s.Patch(R"(/api/v1/users/([^/]+)/profile)", guarded([this](const auto& req, auto& res) {
        send_json(res, 200, service_.patch_profile(req.matches[1], body_of(req)));
    }));

    s.Get(R"(/api/v1/users/([^/]+)/insights)", guarded([this](const auto& req, auto& res) {
        auto status = req.has_param("status") ? req.get_param_value("status") : std::string("active");
        send_json(res, 200, service_.insights(req.matches[1], status));
    }));

    s.Patch(R"(/api/v1/users/([^/]+)/insights/([^/]+))", guarded([this](const auto& req, auto& res) {
        send_json(res, 200, service_.patch_insight(req.matches[1], req.matches[2], body_of(req)));
    }));

    s.Delete(R"(/api/v1/users/([^/]+)/insights/([^/]+))", guarded([this](const auto& req, auto& res) {
        send_json(res, 200, service_.delete_insight(req.matches[1], req.matches[2]));
    }));

    if (service_.config().ui_root) {
        if (!s.set_mount_point("/ui", service_.config().ui_root->string())) {
            spdlog::warn("ui_root {} does not exist; /ui is not served", service_.config().ui_root->string());
        }
    }
}

int HttpServer::bind(const std::string& host, int port) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::wait_until_ready() const { server_->wait_until_ready(); }

void HttpServer::stop() {
    if (server_->is_running()) server_->stop();
}

}  // namespace adapt::service
