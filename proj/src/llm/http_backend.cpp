#include "adapt/llm/gateway.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace adapt::llm {

using nlohmann::json;

HttpChatBackend::HttpChatBackend(std::string endpoint, std::string api_key, WireFormat format)
    : api_key_(std::move(api_key)), format_(format) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint needs a scheme: " + endpoint);
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = endpoint;
        path_ = "/";
    } else {
        scheme_host_port_ = endpoint.substr(0, path_start);
        path_ = endpoint.substr(path_start);
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint.rfind("https://", 0) == 0) {
        throw ConfigError("https endpoints need a build with OpenSSL");
    }
#endif
}

json HttpChatBackend::encode(const ChatRequest& request, const std::string& model,
                             WireFormat format) {
    json messages = json::array();
    std::string system;
    for (const auto& m : request.messages) {
        if (format == WireFormat::anthropic_messages && m.speaker == Speaker::system) {
            system = m.text;
            continue;
        }
        messages.push_back({{"role", to_string(m.speaker)}, {"content", m.text}});
    }
    json body{{"model", model},
              {"messages", messages},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
    if (!system.empty()) body["system"] = system;
    return body;
}

std::string HttpChatBackend::decode(const std::string& body, WireFormat format) {
    json reply = json::parse(body, nullptr, false);
    if (reply.is_discarded()) throw TransientBackendError("reply body is not JSON");
    try {
        switch (format) {
            case WireFormat::neutral:
                return reply.at("text").get<std::string>();
            case WireFormat::openai_chat:
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            case WireFormat::anthropic_messages: {
                std::string text;
                for (const auto& block : reply.at("content")) {
                    if (block.value("type", "") == "text") text += block.at("text").get<std::string>();
                }
                return text;
            }
        }
    } catch (const json::exception& e) {
        throw TransientBackendError(std::string("unexpected reply shape: ") + e.what());
    }
    return {};
}

std::string HttpChatBackend::send(const ChatRequest& request, const std::string& model,
                                  int timeout_ms) {
    httplib::Client client(scheme_host_port_);
    auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    switch (format_) {
        case WireFormat::anthropic_messages:
            headers.emplace("x-api-key", api_key_);
            headers.emplace("anthropic-version", "2023-06-01");
            break;
        default:
            headers.emplace("Authorization", "Bearer " + api_key_);
            break;
    }
    auto body = encode(request, model, format_).dump();
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) throw TransientBackendError("connection failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
        throw TransientBackendError("HTTP " + std::to_string(res->status));
    }
    if (res->status >= 400) {
        throw GatewayUnavailableError("model endpoint rejected request: HTTP " +
                                      std::to_string(res->status));
    }
    return decode(res->body, format_);
}

}  // namespace adapt::llm
