#pragma once

#include "adapt/common/errors.hpp"

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace adapt::llm {

// Which component is calling. Each role may be routed to a different model.
enum class Role { responder, learner, judge, synthesizer, summarizer };
inline constexpr std::size_t kRoleCount = 5;

enum class Speaker { system, user, assistant };

struct Message {
    Speaker speaker = Speaker::user;
    std::string text;

    bool operator==(const Message&) const = default;
};

struct ChatRequest {
    Role role = Role::responder;
    std::vector<Message> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
};

std::string to_string(Role role);
Role parse_role(const std::string& name);
std::string to_string(Speaker speaker);

// Throws ValidationError: messages non-empty, only the first may be system,
// temperature >= 0, max_tokens > 0.
void validate(const ChatRequest& request);

// Text of the last user message, or "" when there is none.
std::string last_user_text(const ChatRequest& request);

// Retryable backend failure (timeouts, 429, 5xx, injected faults).
class TransientBackendError : public Error {
public:
    explicit TransientBackendError(const std::string& message) : Error("transient", message) {}
};

// ---------------------------------------------------------------------------
// Token counting
// ---------------------------------------------------------------------------

using TokenCounter = std::function<std::size_t(std::string_view)>;

// ceil(code points / 4).
std::size_t heuristic_token_count(std::string_view text);

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string send(const ChatRequest& request, const std::string& model,
                             int timeout_ms) = 0;
};

// Substring or regex matcher evaluated against the whole request text
// (message texts joined with newlines).
class Matcher {
public:
    static Matcher substring(std::string needle);
    static Matcher regex(const std::string& pattern);

    bool matches(const std::string& haystack) const;
    const std::string& pattern() const { return pattern_; }

private:
    std::string pattern_;
    std::optional<std::regex> regex_;
};

using ScriptHandler = std::function<std::string(const ChatRequest&)>;

// Deterministic offline backend. Rules are tried in registration order and
// the first match wins. Response templates may contain `{last}`, replaced with
// the request's last user message.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(std::string default_response = "GENERIC");

    void add_rule(Matcher matcher, std::string response_template,
                  std::optional<Role> role = std::nullopt);
    void add_handler(Matcher matcher, ScriptHandler handler,
                     std::optional<Role> role = std::nullopt);
    void set_default(std::string response);

    // The next `n` calls throw TransientBackendError before any rule runs.
    void inject_failures(int n);

    std::string send(const ChatRequest& request, const std::string& model,
                     int timeout_ms) override;

    static std::string request_text(const ChatRequest& request);

private:
    struct Rule {
        Matcher matcher;
        std::optional<Role> role;
        std::string response_template;
        ScriptHandler handler;
    };

    mutable std::shared_mutex mu_;
    std::vector<Rule> rules_;
    std::string default_response_;
    std::atomic<int> pending_failures_{0};
};

enum class BackendKind { http_chat, scripted };

// HTTP wire formats. `neutral` is {model, messages[{role, content}],
// temperature, max_tokens} -> {text}; the others adapt common providers.
enum class WireFormat { neutral, openai_chat, anthropic_messages };

struct BackendConfig {
    BackendKind kind = BackendKind::scripted;
    std::map<Role, std::string> models;
    std::string default_model = "default";
    std::string endpoint;
    // Name of the environment variable holding the API key.
    std::string auth_env;
    WireFormat wire_format = WireFormat::neutral;
    int timeout_ms = 60000;
    int max_retries = 2;
    int backoff_ms = 250;
    std::optional<std::filesystem::path> audit_log;
    std::string scripted_default = "GENERIC";

    const std::string& model_for(Role role) const;
};

void to_json(nlohmann::json& j, const BackendConfig& v);
void from_json(const nlohmann::json& j, BackendConfig& v);

class HttpChatBackend final : public Backend {
public:
    HttpChatBackend(std::string endpoint, std::string api_key, WireFormat format);

    std::string send(const ChatRequest& request, const std::string& model,
                     int timeout_ms) override;

    // Request body / reply decoding for the configured wire format. Exposed for tests.
    static nlohmann::json encode(const ChatRequest& request, const std::string& model,
                                 WireFormat format);
    static std::string decode(const std::string& body, WireFormat format);

private:
    std::string scheme_host_port_;
    std::string path_;
    std::string api_key_;
    WireFormat format_;
};

// ---------------------------------------------------------------------------
// Gateway: the only place model calls happen.
// ---------------------------------------------------------------------------

class Gateway {
public:
    // Builds the backend named by `config`. http_chat requires an endpoint and
    // an auth variable that is set; otherwise ConfigError.
    explicit Gateway(BackendConfig config);
    // Uses a caller-supplied backend (tests, fakes).
    Gateway(BackendConfig config, std::shared_ptr<Backend> backend);

    // Retries transient failures up to max_retries with exponential backoff,
    // bounded by timeout_ms overall. Throws GatewayUnavailableError when exhausted.
    std::string complete(const ChatRequest& request) const;

    // Scripted backend only; ModeError otherwise.
    void register_script(Matcher matcher, std::string response_template,
                         std::optional<Role> role = std::nullopt);
    void register_handler(Matcher matcher, ScriptHandler handler,
                          std::optional<Role> role = std::nullopt);
    ScriptedBackend& scripted();

    std::size_t count_tokens(std::string_view text) const;
    void set_token_counter(TokenCounter counter);
    TokenCounter token_counter() const;

    // Number of complete() calls made for a role.
    std::size_t calls(Role role) const;

    const BackendConfig& config() const { return config_; }

private:
    void audit(const ChatRequest& request, const std::string& model, const std::string& outcome) const;

    BackendConfig config_;
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ScriptedBackend> scripted_;
    std::string api_key_;
    TokenCounter counter_;
    mutable std::array<std::atomic<std::size_t>, kRoleCount> calls_{};
    mutable std::mutex audit_mu_;
};

}  // namespace adapt::llm
