#include "adapt/service/config.hpp"

#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"

#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

namespace adapt::service {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<std::string> process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
}

ServiceConfig parse_service_config(std::string_view json_text) {
    static const std::set<std::string> known = {
        "data_root", "host", "port", "backend", "total_tokens", "workers", "bearer_token_env",
        "include_trace", "ui_root", "eval"};
    ServiceConfig c;
    try {
        auto j = json::parse(json_text);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (known.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
        }
        c.data_root = j.value("data_root", c.data_root.string());
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        if (j.contains("backend")) c.backend = j.at("backend").get<llm::BackendConfig>();
        c.total_tokens = j.value("total_tokens", c.total_tokens);
        c.workers = j.value("workers", c.workers);
        c.bearer_token_env = j.value("bearer_token_env", c.bearer_token_env);
        c.include_trace = j.value("include_trace", c.include_trace);
        if (j.contains("ui_root") && !j.at("ui_root").is_null()) c.ui_root = j.at("ui_root").get<std::string>();
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            if (e.contains("unit")) c.report.unit = eval::parse_sample_unit(e.at("unit").get<std::string>());
            if (e.contains("perfect_unit")) {
                c.report.perfect_unit = eval::parse_sample_unit(e.at("perfect_unit").get<std::string>());
            }
            c.eval_parallelism = e.value("parallelism", c.eval_parallelism);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
    return c;
}

ServiceConfig load_service_config(const std::optional<fs::path>& path, const EnvLookup& env) {
    ServiceConfig c;
    if (path) {
        std::string text;
        try {
            text = read_file(*path);
        } catch (const Error& e) {
            throw ConfigError("cannot read config " + path->string() + ": " + e.what());
        }
        c = parse_service_config(text);
    }
    if (auto v = env("ADAPT_DATA_ROOT"); v && !v->empty()) c.data_root = *v;
    if (auto v = env("ADAPT_HOST"); v && !v->empty()) c.host = *v;
    if (auto v = env("ADAPT_PORT"); v && !v->empty()) {
        try {
            c.port = std::stoi(*v);
        } catch (const std::exception&) {
            throw ConfigError("ADAPT_PORT is not a number: " + *v);
        }
    }
    return c;
}

void validate(const ServiceConfig& c) {
    if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range: " + std::to_string(c.port));
    if (c.total_tokens < 100) throw ConfigError("total_tokens must be at least 100");
    if (c.data_root.empty()) throw ConfigError("data_root is empty");
    std::error_code ec;
    fs::create_directories(c.data_root, ec);
    auto probe = c.data_root / ".write_probe";
    try {
        write_file_atomic(probe, "ok");
        fs::remove(probe, ec);
    } catch (const Error& e) {
        throw ConfigError("data_root " + c.data_root.string() + " is not writable: " + e.what());
    }
}

}  // namespace adapt::service
