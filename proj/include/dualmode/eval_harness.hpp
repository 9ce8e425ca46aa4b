#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualmode/answer_extraction.hpp"
#include "dualmode/mode_router.hpp"
#include "dualmode/model_backend.hpp"
#include "dualmode/problem_analysis.hpp"
#include "dualmode/reasoning_modes.hpp"
#include "dualmode/types.hpp"

namespace dualmode {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSONL benchmark source. `name` selects the field mapping: gsm8k
// {question, answer-with-####-marker}, strategyqa {question, answer: bool},
// babi {story, question, answer}; anything else reads generic records
// {context?, question, answer, id?, answer_kind?, hint?}. sample_n = 0 keeps
// the file order; otherwise a seeded shuffle picks the first sample_n items.
struct DatasetSpec {
    std::string name;
    std::string path;
    int sample_n = 0;
    uint64_t seed = 1;
    AnswerKind default_kind = AnswerKind::text;
};

std::vector<ProblemInstance> load_dataset(const DatasetSpec& spec);

enum class MethodKind { direct, cot, structured_cot, self_consistency, cos };
std::string to_string(MethodKind kind);
std::optional<MethodKind> method_from_string(std::string_view name);

struct MethodSpec {
    MethodKind kind = MethodKind::cos;
    int k = 5;                       // samples for self_consistency / cos-computational
    std::optional<Mode> forced_mode;  // misrouting ablation; cos only
};

struct ItemRecord {
    std::string id;
    std::optional<Mode> mode;  // cos only
    std::string prediction;
    bool correct = false;
    double latency_s = 0.0;
    bool extraction_failed = false;
    int generations = 0;
};

struct RunResult {
    std::string method;
    std::string dataset;
    uint64_t sample_seed = 1;
    std::vector<ItemRecord> items;  // sorted by id
    double accuracy = 0.0;
    std::string started_at;
    std::string finished_at;
    nlohmann::json config_snapshot;  // effective semantic config
};

struct RunOptions {
    ModeOptions mode;
    AnalyzerLexicons lexicons = AnalyzerLexicons::defaults();
    AliasTable aliases = AliasTable::defaults();
    int workers = 4;
    std::string dataset_name;
    uint64_t sample_seed = 1;
    nlohmann::json config_snapshot = nlohmann::json::object();
};

// The per-item protocol: build the method's prompt(s), generate, extract,
// normalize, score against gold. Backend failures mark the item incorrect
// with extraction_failed instead of aborting. Items may be evaluated by a
// bounded worker pool; records are sorted by id before reporting.
RunResult run_method(const MethodSpec& method, const std::vector<ProblemInstance>& problems,
                     Backend& backend, const RunOptions& opts);

// The exact prompt a baseline method sends for a problem (cos builds its own
// prompts per mode). Exposed so replay scripts can be generated.
std::string build_baseline_prompt(MethodKind kind, const ProblemInstance& problem,
                                  const PromptTemplates& templates = PromptTemplates::defaults());

// Percentile bootstrap over B resamples with replacement; seeded. Throws
// std::invalid_argument on empty input.
std::pair<double, double> bootstrap_ci(const std::vector<uint8_t>& correct, int B = 1000,
                                       double level = 0.95, uint64_t seed = 1);

// Two-sided paired sign-flip permutation test on mean(a) - mean(b) with
// (count+1)/(n_perm+1) smoothing; seeded. Throws std::invalid_argument on
// length mismatch or empty input.
double permutation_test(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b,
                        int n_perm = 10000, uint64_t seed = 1);

struct StatsOptions {
    int bootstrap_b = 1000;
    double bootstrap_level = 0.95;
    int n_permutations = 10000;
    uint64_t seed = 1;
};

struct MethodRow {
    std::string method;
    std::string dataset;
    int n = 0;
    double accuracy = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_latency_s = 0.0;
    int total_generations = 0;
    std::vector<std::pair<std::string, std::pair<int, double>>> mode_rows;  // mode -> (count, acc)
};

struct PairRow {
    std::string method_a;
    std::string method_b;
    std::string dataset;
    double p_value = 1.0;
};

struct SummaryReport {
    std::vector<MethodRow> rows;
    std::vector<PairRow> pairs;
    std::vector<std::string> warnings;
};

// Per-run accuracy/CI/latency rows plus pairwise permutation tests for runs
// that share a dataset (same name and item ids); unpaired combinations are
// skipped with a warning.
SummaryReport summarize(const std::vector<RunResult>& runs, const StatsOptions& stats);

std::string format_summary(const SummaryReport& report);

nlohmann::json run_result_to_json(const RunResult& run, const StatsOptions& stats);
RunResult run_result_from_json(const nlohmann::json& doc);
std::string item_records_jsonl(const RunResult& run);

}  // namespace dualmode
