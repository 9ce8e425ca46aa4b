#include "dualmode/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "dualmode/rng.hpp"
#include "dualmode/text.hpp"

namespace dualmode {

using nlohmann::json;

// --- dataset loading ----------------------------------------------------

namespace {

DatasetHint hint_for_name(const std::string& name) {
    const std::string lowered = text::lower(name);
    if (lowered == "gsm8k") return DatasetHint::gsm8k;
    if (lowered == "strategyqa") return DatasetHint::strategyqa;
    if (lowered == "babi" || lowered == "babi1" || lowered == "qa1") return DatasetHint::babi;
    return DatasetHint::none;
}

std::string require_string(const json& record, const char* field, int line_no) {
    if (!record.contains(field) || !record[field].is_string())
        throw DatasetError("dataset: line " + std::to_string(line_no) + ": missing string field \"" +
                           std::string(field) + "\"");
    return record[field].get<std::string>();
}

std::string default_id(int line_no) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", line_no);
    return buf;
}

ProblemInstance parse_record(const DatasetSpec& spec, DatasetHint named, const json& record,
                             int line_no) {
    ProblemInstance p;
    p.id = record.contains("id") && record["id"].is_string() ? record["id"].get<std::string>()
                                                             : default_id(line_no);
    switch (named) {
        case DatasetHint::gsm8k: {
            p.question = require_string(record, "question", line_no);
            std::string answer = require_string(record, "answer", line_no);
            const size_t marker = answer.rfind("####");
            p.gold_answer = text::trim(marker == std::string::npos
                                           ? std::string_view(answer)
                                           : std::string_view(answer).substr(marker + 4));
            p.answer_kind = AnswerKind::numeric;
            p.hint = DatasetHint::gsm8k;
            break;
        }
        case DatasetHint::strategyqa: {
            p.question = require_string(record, "question", line_no);
            if (!record.contains("answer") || !record["answer"].is_boolean())
                throw DatasetError("dataset: line " + std::to_string(line_no) +
                                   ": missing boolean field \"answer\"");
            p.gold_answer = record["answer"].get<bool>() ? "yes" : "no";
            p.answer_kind = AnswerKind::yes_no;
            p.hint = DatasetHint::strategyqa;
            break;
        }
        case DatasetHint::babi: {
            p.context = require_string(record, "story", line_no);
            p.question = require_string(record, "question", line_no);
            p.gold_answer = require_string(record, "answer", line_no);
            p.answer_kind = AnswerKind::text;
            p.hint = DatasetHint::babi;
            break;
        }
        case DatasetHint::none: {
            if (record.contains("context") && record["context"].is_string())
                p.context = record["context"].get<std::string>();
            p.question = require_string(record, "question", line_no);
            p.gold_answer = require_string(record, "answer", line_no);
            p.answer_kind = spec.default_kind;
            if (record.contains("answer_kind")) {
                auto kind = answer_kind_from_string(record["answer_kind"].get<std::string>());
                if (!kind)
                    throw DatasetError("dataset: line " + std::to_string(line_no) +
                                       ": unknown answer_kind");
                p.answer_kind = *kind;
            }
            if (record.contains("hint")) {
                auto hint = hint_from_string(record["hint"].get<std::string>());
                if (!hint)
                    throw DatasetError("dataset: line " + std::to_string(line_no) +
                                       ": unknown hint");
                p.hint = *hint;
            }
            break;
        }
    }
    if (text::trim(p.question).empty())
        throw DatasetError("dataset: line " + std::to_string(line_no) + ": empty question");
    return p;
}

}  // namespace

std::vector<ProblemInstance> load_dataset(const DatasetSpec& spec) {
    std::ifstream in(spec.path);
    if (!in) throw DatasetError("dataset: cannot open " + spec.path);
    const DatasetHint named = hint_for_name(spec.name);
    std::vector<ProblemInstance> all;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw DatasetError("dataset: line " + std::to_string(line_no) + ": " + e.what());
        }
        all.push_back(parse_record(spec, named, record, line_no));
    }
    if (spec.sample_n == 0) return all;
    if (spec.sample_n < 0 || static_cast<size_t>(spec.sample_n) > all.size())
        throw DatasetError("dataset: sample_n " + std::to_string(spec.sample_n) +
                           " exceeds dataset size " + std::to_string(all.size()));
    SplitMix64 rng(spec.seed);
    rng.shuffle(all);
    all.resize(spec.sample_n);
    return all;
}

// --- methods -------------------------------------------------------------

std::string to_string(MethodKind kind) {
    switch (kind) {
        case MethodKind::direct: return "direct";
        case MethodKind::cot: return "cot";
        case MethodKind::structured_cot: return "structured_cot";
        case MethodKind::self_consistency: return "self_consistency";
        case MethodKind::cos: return "cos";
    }
    return "?";
}

std::optional<MethodKind> method_from_string(std::string_view name) {
    if (name == "direct") return MethodKind::direct;
    if (name == "cot") return MethodKind::cot;
    if (name == "structured_cot") return MethodKind::structured_cot;
    if (name == "self_consistency") return MethodKind::self_consistency;
    if (name == "cos") return MethodKind::cos;
    return std::nullopt;
}

std::string build_baseline_prompt(MethodKind kind, const ProblemInstance& p,
                                  const PromptTemplates& t) {
    const std::string block =
        p.context.empty() ? "" : render_template(t.plain_context, {{"context", p.context}});
    const std::map<std::string, std::string> vars = {{"context_block", block},
                                                     {"question", p.question}};
    switch (kind) {
        case MethodKind::direct: return render_template(t.direct, vars);
        case MethodKind::cot:
        case MethodKind::self_consistency: return render_template(t.cot, vars);
        case MethodKind::structured_cot: return render_template(t.structured_cot, vars);
        case MethodKind::cos: break;
    }
    throw std::invalid_argument("build_baseline_prompt: cos builds prompts per mode");
}

namespace {

// Fallback extraction when no FINAL_ANSWER line is present, by answer kind.
std::string fallback_extract(const std::string& completion, AnswerKind kind) {
    switch (kind) {
        case AnswerKind::numeric: {
            if (auto num = extract_last_number(completion)) return *num;
            return "";
        }
        case AnswerKind::yes_no: {
            const std::vector<std::string> words = text::tokens(completion);
            for (auto it = words.rbegin(); it != words.rend(); ++it) {
                const std::string w = text::lower(*it);
                if (w == "yes" || w == "no") return w;
            }
            return "";
        }
        case AnswerKind::text: return text::trim(completion);
    }
    return "";
}

void run_single_pass(const ProblemInstance& p, Backend& backend, const RunOptions& opts,
                     MethodKind kind, ItemRecord& rec) {
    const std::string prompt = build_baseline_prompt(kind, p, *opts.mode.templates);
    GenerationResult g = backend.generate({opts.mode.model, prompt,
                                           opts.mode.deterministic_temperature,
                                           opts.mode.max_tokens, 0});
    rec.generations = 1;
    rec.latency_s = g.original_latency_s;
    if (auto marker = extract_final(g.text))
        rec.prediction = *marker;
    else
        rec.prediction = fallback_extract(g.text, p.answer_kind);
    rec.extraction_failed = rec.prediction.empty();
}

void run_self_consistency(const ProblemInstance& p, Backend& backend, const RunOptions& opts,
                          int k, ItemRecord& rec) {
    const std::string prompt =
        build_baseline_prompt(MethodKind::self_consistency, p, *opts.mode.templates);
    std::vector<CandidateAnswer> answers;
    for (int i = 0; i < k; ++i) {
        GenerationResult g = backend.generate({opts.mode.model, prompt,
                                               opts.mode.sampling_temperature,
                                               opts.mode.max_tokens, i});
        ++rec.generations;
        rec.latency_s += g.original_latency_s;
        std::optional<std::string> extracted = extract_final(g.text);
        if (!extracted) {
            std::string fb = fallback_extract(g.text, p.answer_kind);
            if (!fb.empty()) extracted = std::move(fb);
        }
        if (extracted) answers.push_back(CandidateAnswer::from_raw(std::move(*extracted)));
    }
    if (answers.empty()) {
        rec.extraction_failed = true;
        return;
    }
    rec.prediction = aggregate_answers(answers).raw;
}

void run_cos(const ProblemInstance& p, Backend& backend, const RunOptions& opts,
             const MethodSpec& method, ItemRecord& rec) {
    const AnalysisVector analysis = analyze(p, opts.lexicons);
    const Mode mode = select_mode(analysis, p.hint, method.forced_mode);
    rec.mode = mode;
    ModeOptions mode_opts = opts.mode;
    mode_opts.k = method.k;
    ModeOutcome outcome;
    switch (mode) {
        case Mode::computational: outcome = run_computational(p, backend, mode_opts); break;
        case Mode::symbolic: outcome = run_symbolic(p, backend, mode_opts); break;
        case Mode::hybrid: outcome = run_hybrid(p, backend, mode_opts); break;
    }
    rec.prediction = outcome.answer.raw;
    rec.extraction_failed = outcome.extraction_failed;
    rec.generations = outcome.generations;
    rec.latency_s = outcome.latency_s;
}

std::string iso_timestamp_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace

RunResult run_method(const MethodSpec& method, const std::vector<ProblemInstance>& problems,
                     Backend& backend, const RunOptions& opts) {
    RunResult result;
    result.method = to_string(method.kind);
    result.dataset = opts.dataset_name;
    result.sample_seed = opts.sample_seed;
    result.config_snapshot = opts.config_snapshot;
    // Replay runs pin their timestamps so reports reproduce byte-identically.
    result.started_at = backend.deterministic() ? "1970-01-01T00:00:00Z" : iso_timestamp_now();

    result.items.resize(problems.size());
    auto evaluate_item = [&](size_t i) {
        const ProblemInstance& p = problems[i];
        ItemRecord rec;
        rec.id = p.id;
        try {
            switch (method.kind) {
                case MethodKind::direct:
                case MethodKind::cot:
                case MethodKind::structured_cot:
                    run_single_pass(p, backend, opts, method.kind, rec);
                    break;
                case MethodKind::self_consistency:
                    run_self_consistency(p, backend, opts, method.k, rec);
                    break;
                case MethodKind::cos: run_cos(p, backend, opts, method, rec); break;
            }
        } catch (const std::exception&) {
            rec.prediction.clear();
            rec.extraction_failed = true;  // item failed, run continues
        }
        rec.correct = match_answers(rec.prediction, p.gold_answer, p.answer_kind, opts.aliases);
        result.items[i] = std::move(rec);
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1 || problems.size() <= 1) {
        for (size_t i = 0; i < problems.size(); ++i) evaluate_item(i);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            while (true) {
                const size_t i = next.fetch_add(1);
                if (i >= problems.size()) return;
                evaluate_item(i);
            }
        };
        std::vector<std::thread> pool;
        const size_t n_threads = std::min<size_t>(workers, problems.size());
        pool.reserve(n_threads);
        for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::sort(result.items.begin(), result.items.end(),
              [](const ItemRecord& a, const ItemRecord& b) { return a.id < b.id; });
    size_t correct = 0;
    for (const auto& rec : result.items) correct += rec.correct ? 1 : 0;
    result.accuracy = result.items.empty()
                          ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(result.items.size());
    result.finished_at = backend.deterministic() ? "1970-01-01T00:00:00Z" : iso_timestamp_now();
    return result;
}

// --- statistics ----------------------------------------------------------

namespace {

// Linear interpolation between order statistics (the common "type 7" rule).
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

std::pair<double, double> bootstrap_ci(const std::vector<uint8_t>& correct, int B, double level,
                                       uint64_t seed) {
    if (correct.empty()) throw std::invalid_argument("bootstrap_ci: empty input");
    if (B < 1) throw std::invalid_argument("bootstrap_ci: B must be >= 1");
    SplitMix64 rng(seed);
    const size_t n = correct.size();
    std::vector<double> means;
    means.reserve(B);
    for (int b = 0; b < B; ++b) {
        size_t hits = 0;
        for (size_t i = 0; i < n; ++i) hits += correct[rng.next_below(n)] ? 1 : 0;
        means.push_back(static_cast<double>(hits) / static_cast<double>(n));
    }
    std::sort(means.begin(), means.end());
    const double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(means, tail), quantile_sorted(means, 1.0 - tail)};
}

double permutation_test(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b, int n_perm,
                        uint64_t seed) {
    if (a.size() != b.size())
        throw std::invalid_argument("permutation_test: paired vectors differ in length");
    if (a.empty()) throw std::invalid_argument("permutation_test: empty input");
    if (n_perm < 1) throw std::invalid_argument("permutation_test: n_perm must be >= 1");
    // Work with integer sums of the per-item differences so the >= comparison
    // is exact.
    std::vector<int> diffs;
    diffs.reserve(a.size());
    for (size_t i = 0; i < a.size(); ++i)
        diffs.push_back(static_cast<int>(a[i] ? 1 : 0) - static_cast<int>(b[i] ? 1 : 0));
    long long observed = 0;
    for (int d : diffs) observed += d;
    const long long observed_abs = std::llabs(observed);
    SplitMix64 rng(seed);
    int at_least_as_extreme = 0;
    for (int perm = 0; perm < n_perm; ++perm) {
        long long sum = 0;
        for (int d : diffs) sum += (rng.next() & 1ull) ? d : -d;
        if (std::llabs(sum) >= observed_abs) ++at_least_as_extreme;
    }
    return static_cast<double>(at_least_as_extreme + 1) / static_cast<double>(n_perm + 1);
}

// --- summaries -----------------------------------------------------------

namespace {

std::vector<uint8_t> correctness_vector(const RunResult& run) {
    std::vector<uint8_t> v;
    v.reserve(run.items.size());
    for (const auto& rec : run.items) v.push_back(rec.correct ? 1 : 0);
    return v;
}

bool paired(const RunResult& a, const RunResult& b) {
    if (a.dataset != b.dataset || a.items.size() != b.items.size()) return false;
    for (size_t i = 0; i < a.items.size(); ++i)
        if (a.items[i].id != b.items[i].id) return false;
    return true;
}

MethodRow make_row(const RunResult& run, const StatsOptions& stats) {
    MethodRow row;
    row.method = run.method;
    row.dataset = run.dataset;
    row.n = static_cast<int>(run.items.size());
    row.accuracy = run.accuracy;
    if (!run.items.empty()) {
        auto [lo, hi] = bootstrap_ci(correctness_vector(run), stats.bootstrap_b,
                                     stats.bootstrap_level, stats.seed);
        row.ci_lo = lo;
        row.ci_hi = hi;
    }
    double latency = 0.0;
    std::map<std::string, std::pair<int, int>> by_mode;  // mode -> (count, correct)
    for (const auto& rec : run.items) {
        latency += rec.latency_s;
        row.total_generations += rec.generations;
        if (rec.mode) {
            auto& cell = by_mode[to_string(*rec.mode)];
            ++cell.first;
            cell.second += rec.correct ? 1 : 0;
        }
    }
    row.mean_latency_s = run.items.empty() ? 0.0 : latency / static_cast<double>(run.items.size());
    for (const auto& [mode, cell] : by_mode) {
        const double acc =
            cell.first == 0 ? 0.0 : static_cast<double>(cell.second) / cell.first;
        row.mode_rows.push_back({mode, {cell.first, acc}});
    }
    return row;
}

}  // namespace

SummaryReport summarize(const std::vector<RunResult>& runs, const StatsOptions& stats) {
    SummaryReport report;
    for (const auto& run : runs) report.rows.push_back(make_row(run, stats));
    for (size_t i = 0; i < runs.size(); ++i) {
        for (size_t j = i + 1; j < runs.size(); ++j) {
            if (!paired(runs[i], runs[j])) {
                report.warnings.push_back("p-value omitted for " + runs[i].method + " vs " +
                                          runs[j].method +
                                          ": runs are not paired on the same items");
                continue;
            }
            if (runs[i].items.empty()) continue;
            PairRow pair;
            pair.method_a = runs[i].method;
            pair.method_b = runs[j].method;
            pair.dataset = runs[i].dataset;
            pair.p_value = permutation_test(correctness_vector(runs[i]),
                                            correctness_vector(runs[j]), stats.n_permutations,
                                            stats.seed);
            report.pairs.push_back(pair);
        }
    }
    return report;
}

std::string format_summary(const SummaryReport& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %-14s %5s %9s %17s %12s %6s\n", "method", "dataset",
                  "n", "accuracy", "95% CI", "latency(s)", "gens");
    out << line;
    for (const auto& row : report.rows) {
        std::snprintf(line, sizeof(line), "%-18s %-14s %5d %9.3f [%6.3f, %6.3f] %12.3f %6d\n",
                      row.method.c_str(), row.dataset.c_str(), row.n, row.accuracy, row.ci_lo,
                      row.ci_hi, row.mean_latency_s, row.total_generations);
        out << line;
    }
    for (const auto& row : report.rows) {
        if (row.mode_rows.empty()) continue;
        out << "mode distribution (" << row.method << " on " << row.dataset << "):";
        for (const auto& [mode, cell] : row.mode_rows) {
            std::snprintf(line, sizeof(line), " %s %d (acc %.3f)", mode.c_str(), cell.first,
                          cell.second);
            out << line;
        }
        out << '\n';
    }
    if (!report.pairs.empty()) {
        out << "pairwise permutation tests:\n";
        for (const auto& pair : report.pairs) {
            std::snprintf(line, sizeof(line), "  %s vs %s on %s: p = %.6g\n",
                          pair.method_a.c_str(), pair.method_b.c_str(), pair.dataset.c_str(),
                          pair.p_value);
            out << line;
        }
    }
    for (const auto& warning : report.warnings) out << "warning: " << warning << '\n';
    return out.str();
}

// --- report files ----------------------------------------------------------

namespace {

json item_to_json(const ItemRecord& rec) {
    json doc = {{"id", rec.id},
                {"prediction", rec.prediction},
                {"correct", rec.correct},
                {"latency_s", rec.latency_s},
                {"extraction_failed", rec.extraction_failed},
                {"generations", rec.generations}};
    if (rec.mode) doc["mode"] = to_string(*rec.mode);
    return doc;
}

ItemRecord item_from_json(const json& doc) {
    ItemRecord rec;
    rec.id = doc.at("id").get<std::string>();
    rec.prediction = doc.at("prediction").get<std::string>();
    rec.correct = doc.at("correct").get<bool>();
    rec.latency_s = doc.value("latency_s", 0.0);
    rec.extraction_failed = doc.value("extraction_failed", false);
    rec.generations = doc.value("generations", 0);
    if (doc.contains("mode")) rec.mode = mode_from_string(doc["mode"].get<std::string>());
    return rec;
}

}  // namespace

nlohmann::json run_result_to_json(const RunResult& run, const StatsOptions& stats) {
    json items = json::array();
    std::map<std::string, std::pair<int, int>> by_mode;
    int generations = 0;
    double latency = 0.0;
    for (const auto& rec : run.items) {
        items.push_back(item_to_json(rec));
        generations += rec.generations;
        latency += rec.latency_s;
        if (rec.mode) {
            auto& cell = by_mode[to_string(*rec.mode)];
            ++cell.first;
            cell.second += rec.correct ? 1 : 0;
        }
    }
    json doc = {{"method", run.method},
                {"dataset", run.dataset},
                {"sample_seed", run.sample_seed},
                {"n", run.items.size()},
                {"accuracy", run.accuracy},
                {"mean_latency_s",
                 run.items.empty() ? 0.0 : latency / static_cast<double>(run.items.size())},
                {"total_generations", generations},
                {"started_at", run.started_at},
                {"finished_at", run.finished_at},
                {"config", run.config_snapshot},
                {"items", std::move(items)}};
    if (!run.items.empty()) {
        auto [lo, hi] = bootstrap_ci(correctness_vector(run), stats.bootstrap_b,
                                     stats.bootstrap_level, stats.seed);
        doc["ci95"] = json::array({lo, hi});
    }
    if (!by_mode.empty()) {
        json counts = json::object();
        json accs = json::object();
        for (const auto& [mode, cell] : by_mode) {
            counts[mode] = cell.first;
            accs[mode] = cell.first == 0 ? 0.0 : static_cast<double>(cell.second) / cell.first;
        }
        doc["mode_counts"] = std::move(counts);
        doc["mode_accuracy"] = std::move(accs);
    }
    return doc;
}

RunResult run_result_from_json(const nlohmann::json& doc) {
    RunResult run;
    run.method = doc.at("method").get<std::string>();
    run.dataset = doc.at("dataset").get<std::string>();
    run.sample_seed = doc.value("sample_seed", 1ull);
    run.accuracy = doc.at("accuracy").get<double>();
    run.started_at = doc.value("started_at", "");
    run.finished_at = doc.value("finished_at", "");
    if (doc.contains("config")) run.config_snapshot = doc["config"];
    for (const auto& item : doc.at("items")) run.items.push_back(item_from_json(item));
    return run;
}

std::string item_records_jsonl(const RunResult& run) {
    std::ostringstream out;
    for (const auto& rec : run.items) out << item_to_json(rec).dump() << '\n';
    return out.str();
}

}  // namespace dualmode
