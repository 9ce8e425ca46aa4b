#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dualmode/config.hpp"
#include "dualmode/eval_harness.hpp"
#include "dualmode/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualmode;

// Exit codes: 0 ok, 2 config/usage, 3 dataset, 4 backend.
namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDatasetError = 3;
constexpr int kBackendError = 4;

struct BackendStack {
    std::unique_ptr<Backend> base;
    std::unique_ptr<CachingBackend> cache;
    Backend* active = nullptr;
};

BackendStack make_backend(const Config& cfg) {
    BackendStack stack;
    if (!cfg.script_path.empty()) {
        stack.base = std::make_unique<ScriptedBackend>(ScriptedBackend::load(cfg.script_path));
        if (!cfg.cache_dir.empty())
            stack.cache = std::make_unique<CachingBackend>(*stack.base, cfg.cache_dir);
    } else if (!cfg.endpoint.empty()) {
        HttpBackendConfig http;
        http.endpoint = cfg.endpoint;
        http.default_model = cfg.model;
        http.credentials_env = cfg.credentials_env;
        http.timeout_s = cfg.timeout_s;
        http.retry.attempts = cfg.retry_attempts;
        http.retry.initial_backoff = std::chrono::nanoseconds(
            static_cast<int64_t>(cfg.retry_initial_backoff_s * 1e9));
        http.rate_limit_requests = cfg.rate_limit_requests;
        http.rate_limit_window_s = cfg.rate_limit_window_s;
        stack.base = std::make_unique<HttpBackend>(std::move(http));
        // completions are always cached for live endpoints; on disk when a
        // cache dir is configured
        stack.cache = std::make_unique<CachingBackend>(*stack.base, cfg.cache_dir);
    } else {
        throw ConfigError("no backend configured: pass --script or --endpoint");
    }
    stack.active = stack.cache ? static_cast<Backend*>(stack.cache.get()) : stack.base.get();
    return stack;
}

RunOptions make_run_options(const Config& cfg, const PromptTemplates& templates) {
    RunOptions opts;
    opts.mode.model = cfg.model;
    opts.mode.k = cfg.method.k;
    opts.mode.sampling_temperature = cfg.sampling_temperature;
    opts.mode.deterministic_temperature = cfg.deterministic_temperature;
    opts.mode.max_tokens = cfg.max_tokens;
    opts.mode.state_repr = cfg.state_repr;
    opts.mode.templates = &templates;
    opts.lexicons = cfg.lexicons;
    opts.aliases = cfg.aliases();
    opts.workers = cfg.workers;
    opts.dataset_name = cfg.dataset.name.empty() ? fs::path(cfg.dataset.path).stem().string()
                                                 : cfg.dataset.name;
    opts.sample_seed = cfg.dataset.seed;
    opts.config_snapshot = cfg.snapshot();
    return opts;
}

int cmd_analyze(const Config& cfg, const std::string& question, const std::string& context,
                const std::string& hint_name, const std::string& effectiveness_path,
                const std::string& class_label) {
    if (text::trim(question).empty()) {
        std::cerr << "analyze: --question must be non-empty\n";
        return kConfigError;
    }
    auto hint = hint_from_string(hint_name);
    if (!hint) {
        std::cerr << "analyze: unknown hint \"" << hint_name << "\"\n";
        return kConfigError;
    }
    ProblemInstance p;
    p.id = "cli";
    p.context = context;
    p.question = question;
    const AnalysisVector v = analyze(p, cfg.lexicons);
    const ComplexityScores s = complexity_scores(p, cfg.coefficients, cfg.lexicons);
    const Mode mode = select_mode(v, *hint, cfg.method.forced_mode);
    std::printf("a_math: %s\n", v.a_math ? "true" : "false");
    std::printf("a_spatial: %s\n", v.a_spatial ? "true" : "false");
    std::printf("a_multihop: %s\n", v.a_multihop ? "true" : "false");
    std::printf("a_tracking: %s\n", v.a_tracking ? "true" : "false");
    std::printf("phi_comp: %g (n_ops=%d, n_nums=%d, i_math=%d)\n", s.phi_comp, s.n_ops, s.n_nums,
                s.i_math);
    std::printf("phi_state: %g (m_entities=%d, k_transitions=%d, i_spatial=%d)\n", s.phi_state,
                s.m_entities, s.k_transitions, s.i_spatial);
    std::printf("phi_logic: %g (d_chain=%d, n_facts=%d, i_causal=%d)\n", s.phi_logic, s.d_chain,
                s.n_facts, s.i_causal);
    std::printf("mode: %s\n", to_string(mode).c_str());
    if (!effectiveness_path.empty()) {
        if (class_label.empty()) {
            std::cerr << "analyze: --effectiveness needs --class\n";
            return kConfigError;
        }
        try {
            const EffectivenessTable table = EffectivenessTable::load(effectiveness_path);
            std::printf("optimal_mode_empirical(%s): %s\n", class_label.c_str(),
                        to_string(optimal_mode_empirical(class_label, table)).c_str());
        } catch (const std::runtime_error& e) {
            std::cerr << "analyze: " << e.what() << '\n';
            return kConfigError;
        }
    }
    return kOk;
}

int cmd_run(const Config& cfg, const std::string& out_path, std::string items_path) {
    if (cfg.dataset.path.empty()) throw ConfigError("run: --dataset is required");
    const std::vector<ProblemInstance> problems = load_dataset(cfg.dataset);
    BackendStack backend = make_backend(cfg);
    const PromptTemplates templates = cfg.templates();
    const RunOptions opts = make_run_options(cfg, templates);

    const RunResult result = run_method(cfg.method, problems, *backend.active, opts);

    const json report = run_result_to_json(result, cfg.stats);
    {
        std::ofstream out(out_path);
        if (!out) throw ConfigError("run: cannot write " + out_path);
        out << report.dump(2) << '\n';
    }
    if (items_path.empty()) {
        fs::path p(out_path);
        p.replace_extension();
        items_path = p.string() + "_items.jsonl";
    }
    {
        std::ofstream out(items_path);
        if (!out) throw ConfigError("run: cannot write " + items_path);
        out << item_records_jsonl(result);
    }
    std::cout << format_summary(summarize({result}, cfg.stats));
    std::cout << "report: " << out_path << "\nitems: " << items_path << "\n";
    return kOk;
}

std::vector<RunResult> load_runs(const std::vector<std::string>& paths) {
    std::vector<RunResult> runs;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open run file " + path);
        try {
            runs.push_back(run_result_from_json(json::parse(in)));
        } catch (const json::exception& e) {
            throw ConfigError("run file " + path + ": " + e.what());
        }
    }
    return runs;
}

int cmd_stats(const Config& cfg, const std::vector<std::string>& paths) {
    const std::vector<RunResult> runs = load_runs(paths);
    std::cout << format_summary(summarize(runs, cfg.stats));
    return kOk;
}

int cmd_report(const std::vector<std::string>& paths) {
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open run file " + path);
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("run file " + path + ": " + e.what());
        }
        std::printf("%s: %s on %s, n=%d, accuracy=%.3f", path.c_str(),
                    doc.value("method", "?").c_str(), doc.value("dataset", "?").c_str(),
                    doc.value("n", 0), doc.value("accuracy", 0.0));
        if (doc.contains("ci95"))
            std::printf(", ci95=[%.3f, %.3f]", doc["ci95"][0].get<double>(),
                        doc["ci95"][1].get<double>());
        std::printf(", mean latency %.3fs, %d generations\n", doc.value("mean_latency_s", 0.0),
                    doc.value("total_generations", 0));
        if (doc.contains("mode_counts")) {
            std::printf("  modes:");
            for (const auto& [mode, count] : doc["mode_counts"].items()) {
                std::printf(" %s=%d", mode.c_str(), count.get<int>());
                if (doc.contains("mode_accuracy") && doc["mode_accuracy"].contains(mode))
                    std::printf(" (acc %.3f)", doc["mode_accuracy"][mode].get<double>());
            }
            std::printf("\n");
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual-mode reasoning orchestrator and evaluation harness"};
    app.require_subcommand(1);
    app.fallthrough();  // --config may appear after the subcommand

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override it)");

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "print indicators, complexity scores and the routed mode");
    std::string question, context, hint_name = "none", effectiveness_path, class_label;
    analyze_cmd->add_option("--question", question, "problem question")->required();
    analyze_cmd->add_option("--context", context, "problem context");
    analyze_cmd->add_option("--hint", hint_name, "dataset hint: none|gsm8k|strategyqa|babi");
    analyze_cmd->add_option("--effectiveness", effectiveness_path,
                            "effectiveness table JSON for the empirical-argmax diagnostic");
    analyze_cmd->add_option("--class", class_label, "problem-class label in the table");

    // run
    auto* run_cmd = app.add_subcommand("run", "evaluate a method over a dataset");
    std::string dataset_path, dataset_name, answer_kind_name, method_name, forced_mode_name;
    std::string state_repr_name, script_path, endpoint, model, cache_dir, out_path = "report.json";
    std::string items_path;
    int sample_n = 0, k = 5, workers = 4;
    uint64_t seed = 1;
    run_cmd->add_option("--dataset", dataset_path, "JSONL dataset path");
    run_cmd->add_option("--name", dataset_name, "dataset name (gsm8k|strategyqa|babi|custom)");
    run_cmd->add_option("--sample-n", sample_n, "seeded sample size (0 = all)");
    run_cmd->add_option("--seed", seed, "sampling seed");
    run_cmd->add_option("--answer-kind", answer_kind_name, "numeric|yes_no|string (generic datasets)");
    run_cmd->add_option("--method", method_name, "direct|cot|structured_cot|self_consistency|cos");
    run_cmd->add_option("--k", k, "samples for self_consistency / cos computational mode");
    run_cmd->add_option("--forced-mode", forced_mode_name, "bypass routing: computational|symbolic|hybrid");
    run_cmd->add_option("--state-repr", state_repr_name, "symbolic state representation: json|text|none");
    run_cmd->add_option("--script", script_path, "scripted backend JSONL file");
    run_cmd->add_option("--endpoint", endpoint, "OpenAI-compatible chat-completions URL");
    run_cmd->add_option("--model", model, "model name sent to the endpoint");
    run_cmd->add_option("--cache-dir", cache_dir, "persistent completion cache directory");
    run_cmd->add_option("--out", out_path, "report JSON path");
    run_cmd->add_option("--items-out", items_path, "per-item JSONL path");
    run_cmd->add_option("--workers", workers, "parallel evaluation workers");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "confidence intervals and pairwise permutation tests");
    std::vector<std::string> stats_files;
    stats_cmd->add_option("files", stats_files, "run report JSON files")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "re-render saved run reports");
    std::vector<std::string> report_files;
    report_cmd->add_option("files", report_files, "run report JSON files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        Config cfg;
        if (!config_path.empty()) cfg.apply_file(config_path);

        if (run_cmd->parsed()) {
            if (run_cmd->count("--dataset")) cfg.dataset.path = dataset_path;
            if (run_cmd->count("--name")) cfg.dataset.name = dataset_name;
            if (run_cmd->count("--sample-n")) cfg.dataset.sample_n = sample_n;
            if (run_cmd->count("--seed")) cfg.dataset.seed = seed;
            if (run_cmd->count("--answer-kind")) {
                auto kind = answer_kind_from_string(answer_kind_name);
                if (!kind) throw ConfigError("unknown --answer-kind " + answer_kind_name);
                cfg.dataset.default_kind = *kind;
            }
            if (run_cmd->count("--method")) {
                auto kind = method_from_string(method_name);
                if (!kind) throw ConfigError("unknown --method " + method_name);
                cfg.method.kind = *kind;
            }
            if (run_cmd->count("--k")) cfg.method.k = k;
            if (run_cmd->count("--forced-mode")) {
                auto mode = mode_from_string(forced_mode_name);
                if (!mode) throw ConfigError("unknown --forced-mode " + forced_mode_name);
                cfg.method.forced_mode = *mode;
            }
            if (run_cmd->count("--state-repr")) {
                auto repr = state_repr_from_string(state_repr_name);
                if (!repr) throw ConfigError("unknown --state-repr " + state_repr_name);
                cfg.state_repr = *repr;
            }
            if (run_cmd->count("--script")) cfg.script_path = script_path;
            if (run_cmd->count("--endpoint")) cfg.endpoint = endpoint;
            if (run_cmd->count("--model")) cfg.model = model;
            if (run_cmd->count("--cache-dir")) cfg.cache_dir = cache_dir;
            if (run_cmd->count("--workers")) cfg.workers = workers;
            if (cfg.method.k < 1) throw ConfigError("--k must be >= 1");
            return cmd_run(cfg, out_path, items_path);
        }
        if (analyze_cmd->parsed())
            return cmd_analyze(cfg, question, context, hint_name, effectiveness_path, class_label);
        if (stats_cmd->parsed()) return cmd_stats(cfg, stats_files);
        if (report_cmd->parsed()) return cmd_report(report_files);
        std::cerr << app.help();
        return kConfigError;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DatasetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDatasetError;
    } catch (const ScriptError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBackendError;
    } catch (const BackendError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBackendError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
