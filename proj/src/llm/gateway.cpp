#include "adapt/llm/gateway.hpp"

#include "adapt/common/util.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adapt::llm {

using nlohmann::json;

namespace {

constexpr std::pair<Role, const char*> kRoles[] = {{Role::responder, "responder"},
                                                   {Role::learner, "learner"},
                                                   {Role::judge, "judge"},
                                                   {Role::synthesizer, "synthesizer"},
                                                   {Role::summarizer, "summarizer"}};

std::size_t role_index(Role role) { return static_cast<std::size_t>(role); }

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
        s.replace(pos, from.size(), to);
    }
}

}  // namespace

std::string to_string(Role role) {
    for (const auto& [r, name] : kRoles) {
        if (r == role) return name;
    }
    return "unknown";
}

Role parse_role(const std::string& name) {
    for (const auto& [r, n] : kRoles) {
        if (name == n) return r;
    }
    throw ValidationError("unknown role '" + name + "'");
}

std::string to_string(Speaker speaker) {
    switch (speaker) {
        case Speaker::system: return "system";
        case Speaker::user: return "user";
        case Speaker::assistant: return "assistant";
    }
    return "user";
}

void validate(const ChatRequest& request) {
    if (request.messages.empty()) throw ValidationError("chat request has no messages");
    for (std::size_t i = 1; i < request.messages.size(); ++i) {
        if (request.messages[i].speaker == Speaker::system) {
            throw ValidationError("only the first message may be a system message");
        }
    }
    if (!(request.temperature >= 0.0)) throw ValidationError("temperature must be >= 0");
    if (request.max_tokens <= 0) throw ValidationError("max_tokens must be positive");
}

std::string last_user_text(const ChatRequest& request) {
    for (auto it = request.messages.rbegin(); it != request.messages.rend(); ++it) {
        if (it->speaker == Speaker::user) return it->text;
    }
    return {};
}

std::size_t heuristic_token_count(std::string_view text) {
    return (utf8_length(text) + 3) / 4;
}

// --- scripted ----------------------------------------------------------------

Matcher Matcher::substring(std::string needle) {
    Matcher m;
    m.pattern_ = std::move(needle);
    return m;
}

Matcher Matcher::regex(const std::string& pattern) {
    Matcher m;
    m.pattern_ = pattern;
    m.regex_.emplace(pattern, std::regex::ECMAScript);
    return m;
}

bool Matcher::matches(const std::string& haystack) const {
    if (regex_) return std::regex_search(haystack, *regex_);
    return haystack.find(pattern_) != std::string::npos;
}

ScriptedBackend::ScriptedBackend(std::string default_response)
    : default_response_(std::move(default_response)) {}

void ScriptedBackend::add_rule(Matcher matcher, std::string response_template,
                               std::optional<Role> role) {
    std::unique_lock lock(mu_);
    rules_.push_back(Rule{std::move(matcher), role, std::move(response_template), {}});
}

void ScriptedBackend::add_handler(Matcher matcher, ScriptHandler handler, std::optional<Role> role) {
    std::unique_lock lock(mu_);
    rules_.push_back(Rule{std::move(matcher), role, {}, std::move(handler)});
}

void ScriptedBackend::set_default(std::string response) {
    std::unique_lock lock(mu_);
    default_response_ = std::move(response);
}

void ScriptedBackend::inject_failures(int n) { pending_failures_.store(n); }

std::string ScriptedBackend::request_text(const ChatRequest& request) {
    std::string text;
    for (const auto& m : request.messages) {
        if (!text.empty()) text += '\n';
        text += m.text;
    }
    return text;
}

std::string ScriptedBackend::send(const ChatRequest& request, const std::string&, int) {
    for (int left = pending_failures_.load(); left > 0; left = pending_failures_.load()) {
        if (pending_failures_.compare_exchange_weak(left, left - 1)) {
            throw TransientBackendError("scripted failure");
        }
    }
    const std::string haystack = request_text(request);
    std::shared_lock lock(mu_);
    for (const auto& rule : rules_) {
        if (rule.role && *rule.role != request.role) continue;
        if (!rule.matcher.matches(haystack)) continue;
        if (rule.handler) return rule.handler(request);
        std::string out = rule.response_template;
        replace_all(out, "{last}", last_user_text(request));
        return out;
    }
    return default_response_;
}

// --- config ------------------------------------------------------------------

const std::string& BackendConfig::model_for(Role role) const {
    auto it = models.find(role);
    return it == models.end() ? default_model : it->second;
}

void to_json(json& j, const BackendConfig& v) {
    json models = json::object();
    for (const auto& [role, name] : v.models) models[to_string(role)] = name;
    const char* wire = v.wire_format == WireFormat::neutral       ? "neutral"
                       : v.wire_format == WireFormat::openai_chat ? "openai_chat"
                                                                  : "anthropic_messages";
    j = json{{"kind", v.kind == BackendKind::scripted ? "scripted" : "http_chat"},
             {"models", models},
             {"default_model", v.default_model},
             {"endpoint", v.endpoint},
             {"auth_env", v.auth_env},
             {"wire_format", wire},
             {"timeout_ms", v.timeout_ms},
             {"max_retries", v.max_retries},
             {"backoff_ms", v.backoff_ms},
             {"scripted_default", v.scripted_default}};
    if (v.audit_log) j["audit_log"] = v.audit_log->string();
}

void from_json(const json& j, BackendConfig& v) {
    auto kind = j.value("kind", std::string("scripted"));
    if (kind == "scripted") {
        v.kind = BackendKind::scripted;
    } else if (kind == "http_chat") {
        v.kind = BackendKind::http_chat;
    } else {
        throw ConfigError("unknown backend kind '" + kind + "'");
    }
    v.models.clear();
    if (j.contains("models")) {
        for (const auto& [role, name] : j.at("models").items()) {
            v.models[parse_role(role)] = name.get<std::string>();
        }
    }
    v.default_model = j.value("default_model", v.default_model);
    v.endpoint = j.value("endpoint", std::string{});
    v.auth_env = j.value("auth_env", std::string{});
    auto wire = j.value("wire_format", std::string("neutral"));
    if (wire == "neutral") {
        v.wire_format = WireFormat::neutral;
    } else if (wire == "openai_chat") {
        v.wire_format = WireFormat::openai_chat;
    } else if (wire == "anthropic_messages") {
        v.wire_format = WireFormat::anthropic_messages;
    } else {
        throw ConfigError("unknown wire format '" + wire + "'");
    }
    v.timeout_ms = j.value("timeout_ms", v.timeout_ms);
    v.max_retries = j.value("max_retries", v.max_retries);
    v.backoff_ms = j.value("backoff_ms", v.backoff_ms);
    v.scripted_default = j.value("scripted_default", v.scripted_default);
    if (j.contains("audit_log") && !j.at("audit_log").is_null()) {
        v.audit_log = j.at("audit_log").get<std::string>();
    }
}

// --- gateway -----------------------------------------------------------------

Gateway::Gateway(BackendConfig config) : config_(std::move(config)), counter_(heuristic_token_count) {
    if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (config_.timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
    if (config_.kind == BackendKind::scripted) {
        scripted_ = std::make_shared<ScriptedBackend>(config_.scripted_default);
        backend_ = scripted_;
        return;
    }
    if (config_.endpoint.empty()) throw ConfigError("http_chat backend requires an endpoint");
    if (config_.auth_env.empty()) throw ConfigError("http_chat backend requires auth_env");
    const char* key = std::getenv(config_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + config_.auth_env + " is not set");
    }
    api_key_ = key;
    backend_ = std::make_shared<HttpChatBackend>(config_.endpoint, api_key_, config_.wire_format);
}

Gateway::Gateway(BackendConfig config, std::shared_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)), counter_(heuristic_token_count) {
    scripted_ = std::dynamic_pointer_cast<ScriptedBackend>(backend_);
    if (!backend_) throw ConfigError("gateway requires a backend");
}

std::string Gateway::complete(const ChatRequest& request) const {
    validate(request);
    calls_[role_index(request.role)].fetch_add(1);
    const std::string& model = config_.model_for(request.role);

    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::milliseconds(config_.timeout_ms);
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        auto remaining =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
        if (remaining <= 0) break;
        try {
            std::string text = backend_->send(request, model, static_cast<int>(remaining));
            audit(request, model, text);
            return text;
        } catch (const TransientBackendError& e) {
            last_error = e.what();
            spdlog::debug("{} call attempt {} failed: {}", to_string(request.role), attempt + 1,
                          last_error);
        }
        if (attempt == config_.max_retries) break;
        auto delay = std::chrono::milliseconds(static_cast<long long>(config_.backoff_ms) << attempt);
        if (clock::now() + delay >= deadline) break;
        std::this_thread::sleep_for(delay);
    }
    audit(request, model, "error: " + last_error);
    throw GatewayUnavailableError("model gateway unavailable for role " + to_string(request.role) +
                                  ": " + last_error);
}

void Gateway::register_script(Matcher matcher, std::string response_template,
                              std::optional<Role> role) {
    scripted().add_rule(std::move(matcher), std::move(response_template), role);
}

void Gateway::register_handler(Matcher matcher, ScriptHandler handler, std::optional<Role> role) {
    scripted().add_handler(std::move(matcher), std::move(handler), role);
}

ScriptedBackend& Gateway::scripted() {
    if (!scripted_) throw ModeError("scripts can only be registered on the scripted backend");
    return *scripted_;
}

std::size_t Gateway::count_tokens(std::string_view text) const { return counter_(text); }

void Gateway::set_token_counter(TokenCounter counter) { counter_ = std::move(counter); }

TokenCounter Gateway::token_counter() const { return counter_; }

std::size_t Gateway::calls(Role role) const { return calls_[role_index(role)].load(); }

void Gateway::audit(const ChatRequest& request, const std::string& model,
                    const std::string& outcome) const {
    if (!config_.audit_log) return;
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.speaker)}, {"content", m.text}});
    }
    std::string line = json{{"ts", now_ms()},
                            {"role", to_string(request.role)},
                            {"model", model},
                            {"messages", messages},
                            {"response", outcome}}
                           .dump();
    if (!api_key_.empty()) replace_all(line, api_key_, "[REDACTED]");
    std::lock_guard lock(audit_mu_);
    std::ofstream out(*config_.audit_log, std::ios::app);
    out << line << '\n';
}

}  // namespace adapt::llm
