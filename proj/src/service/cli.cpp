#include "adapt/service/cli.hpp"

#include "adapt/bench/dataset.hpp"
#include "adapt/common/errors.hpp"
#include "adapt/common/util.hpp"
#include "adapt/eval/report.hpp"
#include "adapt/eval/runner.hpp"
#include "adapt/service/http.hpp"
#include "adapt/service/service.hpp"

#include <atomic>
#include <csignal>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace adapt::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
    g_stop = false;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
}

struct GlobalOptions {
    std::string config_path;
    std::string data_root;
    bool verbose = false;
};

ServiceConfig resolve_config(const GlobalOptions& g) {
    auto c = load_service_config(g.config_path.empty() ? std::nullopt : std::optional<fs::path>(g.config_path));
    if (!g.data_root.empty()) c.data_root = g.data_root;
    return c;
}

fs::path run_dir(const ServiceConfig& c, const std::string& run_id) {
    memory::validate_path_component(run_id, "run id");
    return c.data_root / "eval" / run_id;
}

int cmd_chat(const ServiceConfig& config, const std::string& user, std::string session, std::istream& in,
             std::ostream& out) {
    Service service(config);
    if (session.empty()) session = "cli-" + std::to_string(now_ms());
    for (std::string line; std::getline(in, line);) {
        line = trim(line);
        if (line.empty()) continue;
        if (line == "/end" || line == "/quit") break;
        try {
            auto reply = service.chat(user, session, line);
            out << reply["response"].get<std::string>() << "\n";
        } catch (const GatewayUnavailableError& e) {
            out << "[error] " << e.what() << "\n";
        }
    }
    if (!service.store().load_session(user, session).empty()) {
        service.end_session(user, session);
        service.drain_queue();
        out << "[session " << session << " ended; "
            << service.store().query_insights(user, {}).size() << " active insights]\n";
    }
    return kExitOk;
}

int cmd_serve(const ServiceConfig& config, const std::string& host, int port, std::ostream& out) {
    Service service(config);
    auto token = process_env(config.bearer_token_env).value_or("");
    HttpServer server(service, token);
    int bound = server.bind(host.empty() ? config.host : host, port < 0 ? config.port : port);
    service.start_workers();
    install_signal_handlers();
    std::thread listener([&server] { server.listen(); });
    server.wait_until_ready();
    out << "listening on " << (host.empty() ? config.host : host) << ":" << bound << std::endl;
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    listener.join();
    service.stop_workers();
    return kExitOk;
}

int cmd_worker(const ServiceConfig& config, bool once, std::ostream& out) {
    Service service(config);
    if (once) {
        out << "processed " << service.drain_queue() << " jobs\n";
        return kExitOk;
    }
    install_signal_handlers();
    service.start_workers();
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop_workers();
    return kExitOk;
}

int cmd_bench_generate(const ServiceConfig& config, std::uint64_t seed, std::size_t n, std::size_t k,
                       std::string out_path, const std::string& pool_path, std::ostream& out) {
    auto pool = pool_path.empty() ? bench::build_trait_pool() : bench::load_trait_pool(pool_path);
    auto gateway = make_gateway(config);
    auto dataset = bench::generate_dataset(seed, n, k, pool, *gateway, config.eval_parallelism);
    if (out_path.empty()) {
        out_path = (config.data_root / "bench" /
                    ("dataset_seed" + std::to_string(seed) + "_n" + std::to_string(n) + ".json"))
                       .string();
    }
    bench::save_dataset(dataset, out_path);
    out << "wrote " << dataset.personas.size() << " trajectories to " << out_path << "\n";
    return kExitOk;
}

int cmd_bench_run(const ServiceConfig& config, const std::string& run_id, const std::string& dataset_path,
                  std::ostream& out) {
    auto dir = run_dir(config, run_id);
    auto dataset = bench::load_dataset(dataset_path);
    auto gateway = make_gateway(config);
    eval::RunConfig rc;
    rc.work_root = dir / "work";
    rc.orchestrator.context_tokens = config.total_tokens;
    rc.parallelism = config.eval_parallelism;

    std::vector<std::string> lines;
    for (auto condition : {eval::Condition::baseline, eval::Condition::personalized}) {
        auto transcripts = eval::run_condition(dataset, condition, *gateway, rc);
        std::size_t failed = 0;
        for (const auto& t : transcripts) {
            for (const auto& turn : t.turns) failed += turn.failed ? 1 : 0;
            lines.push_back(eval::transcript_to_json(t));
        }
        out << eval::to_string(condition) << ": " << transcripts.size() << " transcripts, " << failed
            << " failed turns\n";
    }
    eval::save_jsonl(dir / "transcripts.jsonl", lines);
    write_file_atomic(dir / "run.json",
                      json{{"dataset", fs::absolute(dataset_path).string()}, {"run_id", run_id}}.dump(2));
    return kExitOk;
}

int cmd_bench_judge(const ServiceConfig& config, const std::string& run_id, std::ostream& out) {
    auto dir = run_dir(config, run_id);
    auto meta = json::parse(read_file(dir / "run.json"));
    auto dataset = bench::load_dataset(meta.at("dataset").get<std::string>());
    std::vector<eval::Transcript> base, pers;
    for (const auto& line : eval::load_jsonl(dir / "transcripts.jsonl")) {
        auto t = eval::transcript_from_json(line);
        (t.condition == eval::Condition::baseline ? base : pers).push_back(std::move(t));
    }
    auto gateway = make_gateway(config);
    auto jb = eval::judge_transcripts(dataset, base, *gateway, config.eval_parallelism);
    auto jp = eval::judge_transcripts(dataset, pers, *gateway, config.eval_parallelism);
    auto all = jb.assessments;
    all.insert(all.end(), jp.assessments.begin(), jp.assessments.end());
    eval::save_assessments(dir / "assessments.jsonl", all);
    write_file_atomic(dir / "judge.json",
                      json{{"failed_turns", {{"baseline", jb.failed_turns}, {"personalized", jp.failed_turns}}}}.dump(2));
    out << "judged " << all.size() << " turns (" << jb.failed_turns + jp.failed_turns << " failed)\n";
    return kExitOk;
}

int cmd_bench_report(const ServiceConfig& config, const std::string& run_id, const std::string& unit,
                     const std::string& perfect_unit, std::ostream& out) {
    auto dir = run_dir(config, run_id);
    auto all = eval::load_assessments(dir / "assessments.jsonl");
    std::vector<eval::JudgeAssessment> base, pers;
    for (auto& a : all) (a.condition == eval::Condition::baseline ? base : pers).push_back(std::move(a));
    std::size_t failed_base = 0, failed_pers = 0;
    if (fs::exists(dir / "judge.json")) {
        auto meta = json::parse(read_file(dir / "judge.json"));
        failed_base = meta["failed_turns"].value("baseline", std::size_t{0});
        failed_pers = meta["failed_turns"].value("personalized", std::size_t{0});
    }
    auto rc = config.report;
    if (!unit.empty()) rc.unit = eval::parse_sample_unit(unit);
    if (!perfect_unit.empty()) rc.perfect_unit = eval::parse_sample_unit(perfect_unit);
    auto report = eval::build_report(base, pers, rc, failed_base, failed_pers);
    write_file_atomic(dir / "report.json", eval::report_to_json(report));
    out << eval::render_table(report);
    return kExitOk;
}

int cmd_memory_list(const ServiceConfig& config, const std::string& user, const std::string& status,
                    std::ostream& out) {
    Service service(config);
    for (const auto& i : service.insights(user, status)) {
        out << i["insight_id"].get<std::string>() << "  " << std::setw(10) << std::left
            << i["kind"].get<std::string>() << std::fixed << std::setprecision(2)
            << i["confidence"].get<double>() << "  " << i["content"].get<std::string>();
        if (status != "active") out << "  [" << i["status"].get<std::string>() << "]";
        out << "\n";
    }
    return kExitOk;
}

int cmd_memory_show(const ServiceConfig& config, const std::string& user, const std::string& insight,
                    std::ostream& out) {
    Service service(config);
    if (insight.empty()) {
        out << service.profile(user).dump(2) << "\n";
        return kExitOk;
    }
    auto record = service.store().get_insight(user, insight);
    if (!record) throw NotFoundError("insight " + insight + " of user " + user);
    out << insight_to_json(*record).dump(2) << "\n";
    return kExitOk;
}

int cmd_memory_delete(const ServiceConfig& config, const std::string& user, const std::string& insight,
                      std::ostream& out) {
    Service service(config);
    service.delete_insight(user, insight);
    out << "deleted " << insight << "\n";
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Personal assistant memory service and benchmark tools", "adaptctl"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--data-root", g.data_root, "Data directory (overrides the config)");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");

    std::string user, session, insight, status = "active", host, run_id, dataset_path, out_path, pool_path;
    std::string unit, perfect_unit;
    int port = -1;
    bool once = false;
    std::uint64_t seed = 7;
    std::size_t n = 150, k = 5;

    auto* chat = app.add_subcommand("chat", "Interactive session on stdin");
    chat->add_option("--user", user, "User id")->required();
    chat->add_option("--session", session, "Session id (default: new)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--port", port, "Listen port (0 picks a free one)");

    auto* worker = app.add_subcommand("worker", "Run background learning workers");
    worker->add_flag("--once", once, "Drain ready jobs and exit");

    auto* bench = app.add_subcommand("bench", "Benchmark generation, runs, judging and reports");
    bench->require_subcommand(1);
    auto* generate = bench->add_subcommand("generate", "Sample personas and synthesize trajectories");
    generate->add_option("--seed", seed, "Sampling seed");
    generate->add_option("--n", n, "Number of personas");
    generate->add_option("--k", k, "Traits per persona");
    generate->add_option("--out", out_path, "Output file");
    generate->add_option("--pool", pool_path, "Trait pool JSON (default: built in)");
    auto* run = bench->add_subcommand("run", "Answer every trajectory under both conditions");
    run->add_option("--run", run_id, "Run id")->required();
    run->add_option("--dataset", dataset_path, "Dataset file")->required();
    auto* judge = bench->add_subcommand("judge", "Judge the evaluation turns of a run");
    judge->add_option("--run", run_id, "Run id")->required();
    auto* report = bench->add_subcommand("report", "Metrics and significance tests for a judged run");
    report->add_option("--run", run_id, "Run id")->required();
    report->add_option("--unit", unit, "persona_mean or per_turn");
    report->add_option("--perfect-unit", perfect_unit, "persona_mean or per_turn");

    auto* memory = app.add_subcommand("memory", "Inspect and edit stored memory");
    memory->require_subcommand(1);
    auto* list = memory->add_subcommand("list", "List insights");
    list->add_option("--user", user, "User id")->required();
    list->add_option("--status", status, "active, superseded, deleted or all");
    auto* show = memory->add_subcommand("show", "Show the profile or one insight");
    show->add_option("--user", user, "User id")->required();
    show->add_option("--insight", insight, "Insight id");
    auto* del = memory->add_subcommand("delete", "Soft-delete an insight");
    del->add_option("--user", user, "User id")->required();
    del->add_option("--insight", insight, "Insight id")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    if (g.verbose) spdlog::set_level(spdlog::level::debug);
    try {
        auto config = resolve_config(g);
        if (*chat) return cmd_chat(config, user, session, in, out);
        if (*serve) return cmd_serve(config, host, port, out);
        if (*worker) return cmd_worker(config, once, out);
        if (*generate) return cmd_bench_generate(config, seed, n, k, out_path, pool_path, out);
        if (*run) return cmd_bench_run(config, run_id, dataset_path, out);
        if (*judge) return cmd_bench_judge(config, run_id, out);
        if (*report) return cmd_bench_report(config, run_id, unit, perfect_unit, out);
        if (*list) return cmd_memory_list(config, user, status, out);
        if (*show) return cmd_memory_show(config, user, insight, out);
        if (*del) return cmd_memory_delete(config, user, insight, out);
    } catch (const Error& e) {
        err << "error [" << e.code() << "]: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    err << app.help();
    return kExitUsage;
}

}  // namespace adapt::service
