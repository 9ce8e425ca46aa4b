#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dualmode/answer_extraction.hpp"
#include "dualmode/eval_harness.hpp"
#include "dualmode/mode_router.hpp"
#include "dualmode/model_backend.hpp"
#include "dualmode/problem_analysis.hpp"
#include "dualmode/reasoning_modes.hpp"

namespace dualmode {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Effective configuration for a run. Precedence: command-line flags override
// the config file, which overrides these built-in defaults (k=5,
// temperatures 0.0/0.7, max_tokens=2048, B=1000, n_perm=10000).
struct Config {
    // backend
    std::string script_path;
    std::string endpoint;
    std::string model;
    std::string credentials_env = "OPENAI_API_KEY";
    std::string cache_dir;
    double timeout_s = 120.0;
    int retry_attempts = 3;
    double retry_initial_backoff_s = 1.0;
    int rate_limit_requests = 60;
    double rate_limit_window_s = 60.0;

    // dataset
    DatasetSpec dataset;

    // method
    MethodSpec method;
    StateRepr state_repr = StateRepr::json;

    // mode execution
    double sampling_temperature = 0.7;
    double deterministic_temperature = 0.0;
    int max_tokens = 2048;
    std::string templates_dir;

    // analysis
    CoefficientSet coefficients;
    AnalyzerLexicons lexicons = AnalyzerLexicons::defaults();

    // matching
    std::string aliases_path;

    // statistics
    StatsOptions stats;

    // execution-only knobs, excluded from report snapshots
    int workers = 4;

    // Overlay values from a JSON config file onto this config.
    void apply_file(const std::string& path);
    void apply_json(const nlohmann::json& doc);

    // Semantic settings only; re-running from this snapshot reproduces the
    // same report under a scripted backend.
    nlohmann::json snapshot() const;

    AliasTable aliases() const;
    PromptTemplates templates() const;
};

}  // namespace dualmode
