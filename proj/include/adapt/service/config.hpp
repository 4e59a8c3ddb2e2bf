#pragma once

#include "adapt/eval/report.hpp"
#include "adapt/llm/gateway.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace adapt::service {

struct ServiceConfig {
    std::filesystem::path data_root = "data";
    std::string host = "127.0.0.1";
    int port = 8080;
    llm::BackendConfig backend;
    std::size_t total_tokens = 8000;
    std::size_t workers = 1;
    // Name of the environment variable holding the bearer token; no auth when
    // the variable is unset or empty.
    std::string bearer_token_env = "ADAPT_BEARER_TOKEN";
    // Privacy switch: when false, chat replies carry no trace.
    bool include_trace = true;
    // Static files served under /ui/ when set.
    std::optional<std::filesystem::path> ui_root;
    // Evaluation switches.
    eval::ReportConfig report;
    std::size_t eval_parallelism = 4;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// Defaults, then the JSON file (when given), then ADAPT_DATA_ROOT, ADAPT_HOST
// and ADAPT_PORT. Throws ConfigError on unreadable files, unknown keys or
// invalid values.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& path,
                                  const EnvLookup& env = process_env);
ServiceConfig parse_service_config(std::string_view json_text);

// Throws ConfigError: port out of range, zero budget, data root not writable.
void validate(const ServiceConfig& config);

}  // namespace adapt::service
