#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "dualmode/eval_harness.hpp"
#include "dualmode/rng.hpp"

using namespace dualmode;

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& line : lines) out << line << '\n';
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

// Exhaustive sign-flip oracle for the paired permutation test (n <= 20).
double exhaustive_permutation_p(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
    const size_t n = a.size();
    std::vector<int> diffs(n);
    long long observed = 0;
    for (size_t i = 0; i < n; ++i) {
        diffs[i] = static_cast<int>(a[i]) - static_cast<int>(b[i]);
        observed += diffs[i];
    }
    const long long observed_abs = std::llabs(observed);
    const uint64_t total = 1ull << n;
    uint64_t count = 0;
    for (uint64_t mask = 0; mask < total; ++mask) {
        long long sum = 0;
        for (size_t i = 0; i < n; ++i) sum += (mask >> i & 1ull) ? diffs[i] : -diffs[i];
        if (std::llabs(sum) >= observed_abs) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
}

RunOptions scripted_run_options() {
    RunOptions opts;
    opts.mode.model = "test-model";
    opts.workers = 1;
    opts.dataset_name = "fixture";
    return opts;
}

}  // namespace

TEST_CASE("gsm8k records parse the #### gold marker") {
    TempFile f("ds_gsm8k.jsonl");
    write_lines(f.path, {
        R"({"question": "What is 2 + 2?", "answer": "2 and 2 make 4.\n#### 4"})",
        R"({"question": "Total of 1,200 and 50?", "answer": "sum\n#### 1,250"})",
    });
    DatasetSpec spec{"gsm8k", f.path, 0, 1, AnswerKind::text};
    const auto items = load_dataset(spec);
    REQUIRE(items.size() == 2);
    CHECK(items[0].gold_answer == "4");
    CHECK(items[0].answer_kind == AnswerKind::numeric);
    CHECK(items[0].hint == DatasetHint::gsm8k);
    CHECK(items[1].gold_answer == "1,250");
    CHECK(items[0].id == "000001");
}

TEST_CASE("strategyqa records map booleans to yes/no") {
    TempFile f("ds_sqa.jsonl");
    write_lines(f.path, {
        R"({"question": "Can fish fly?", "answer": false})",
        R"({"question": "Is water wet?", "answer": true})",
    });
    DatasetSpec spec{"strategyqa", f.path, 0, 1, AnswerKind::text};
    const auto items = load_dataset(spec);
    REQUIRE(items.size() == 2);
    CHECK(items[0].gold_answer == "no");
    CHECK(items[1].gold_answer == "yes");
    CHECK(items[0].answer_kind == AnswerKind::yes_no);
    CHECK(items[0].hint == DatasetHint::strategyqa);
}

TEST_CASE("babi records use the story as context") {
    TempFile f("ds_babi.jsonl");
    write_lines(f.path, {
        R"({"story": "Mary moved to the bathroom.", "question": "Where is Mary?", "answer": "bathroom"})",
    });
    DatasetSpec spec{"babi", f.path, 0, 1, AnswerKind::text};
    const auto items = load_dataset(spec);
    REQUIRE(items.size() == 1);
    CHECK(items[0].context == "Mary moved to the bathroom.");
    CHECK(items[0].answer_kind == AnswerKind::text);
    CHECK(items[0].hint == DatasetHint::babi);
}

TEST_CASE("generic records honor per-record answer_kind and hint") {
    TempFile f("ds_generic.jsonl");
    write_lines(f.path, {
        R"({"id": "a", "question": "How many?", "answer": "4", "answer_kind": "numeric"})",
        R"({"id": "b", "context": "facts", "question": "OK?", "answer": "yes", "answer_kind": "yes_no", "hint": "strategyqa"})",
    });
    DatasetSpec spec{"mixed", f.path, 0, 1, AnswerKind::text};
    const auto items = load_dataset(spec);
    REQUIRE(items.size() == 2);
    CHECK(items[0].answer_kind == AnswerKind::numeric);
    CHECK(items[1].answer_kind == AnswerKind::yes_no);
    CHECK(items[1].hint == DatasetHint::strategyqa);
    CHECK(items[1].context == "facts");
}

TEST_CASE("sampling is seeded and deterministic") {
    TempFile f("ds_sample.jsonl");
    std::vector<std::string> lines;
    for (int i = 0; i < 100; ++i)
        lines.push_back(R"({"question": "q)" + std::to_string(i) + R"(?", "answer": "x"})");
    write_lines(f.path, lines);

    DatasetSpec spec{"sampled", f.path, 50, 1, AnswerKind::text};
    const auto first = load_dataset(spec);
    const auto second = load_dataset(spec);
    REQUIRE(first.size() == 50);
    for (size_t i = 0; i < first.size(); ++i) CHECK(first[i].id == second[i].id);

    DatasetSpec other_seed = spec;
    other_seed.seed = 2;
    const auto third = load_dataset(other_seed);
    bool any_difference = false;
    for (size_t i = 0; i < first.size(); ++i) any_difference |= first[i].id != third[i].id;
    CHECK(any_difference);

    // sample_n == size: identity sample in shuffled order
    DatasetSpec full = spec;
    full.sample_n = 100;
    const auto all = load_dataset(full);
    std::set<std::string> ids;
    for (const auto& p : all) ids.insert(p.id);
    CHECK(ids.size() == 100);
}

TEST_CASE("dataset errors name the offending line") {
    TempFile f("ds_bad.jsonl");
    write_lines(f.path, {
        R"({"question": "fine?", "answer": "ok"})",
        R"({"answer": "missing question"})",
    });
    DatasetSpec spec{"generic", f.path, 0, 1, AnswerKind::text};
    CHECK_THROWS_WITH_AS(load_dataset(spec), doctest::Contains("line 2"), DatasetError);

    TempFile g("ds_oversample.jsonl");
    write_lines(g.path, {R"({"question": "q?", "answer": "a"})"});
    DatasetSpec over{"generic", g.path, 5, 1, AnswerKind::text};
    CHECK_THROWS_AS(load_dataset(over), DatasetError);

    DatasetSpec missing{"generic", "no_such_file.jsonl", 0, 1, AnswerKind::text};
    CHECK_THROWS_AS(load_dataset(missing), DatasetError);

    TempFile h("ds_empty_question.jsonl");
    write_lines(h.path, {R"({"question": "   ", "answer": "a"})"});
    DatasetSpec blank{"generic", h.path, 0, 1, AnswerKind::text};
    CHECK_THROWS_AS(load_dataset(blank), DatasetError);
}

TEST_CASE("direct issues exactly one generation per item") {
    std::vector<ProblemInstance> problems;
    ScriptedBackend script;
    for (int i = 0; i < 4; ++i) {
        ProblemInstance p;
        p.id = "p" + std::to_string(i);
        p.question = "What is item " + std::to_string(i) + "?";
        p.gold_answer = "thing";
        p.answer_kind = AnswerKind::text;
        problems.push_back(p);
        script.add(build_baseline_prompt(MethodKind::direct, p), 0, "thing");
    }
    CountingBackend counting(script);
    MethodSpec method{MethodKind::direct, 5, std::nullopt};
    const RunResult result = run_method(method, problems, counting, scripted_run_options());
    CHECK(counting.count() == 4);
    CHECK(result.accuracy == doctest::Approx(1.0));
    for (const auto& rec : result.items) {
        CHECK(rec.generations == 1);
        CHECK_FALSE(rec.mode.has_value());
    }
}

TEST_CASE("self-consistency issues exactly k generations per item") {
    ProblemInstance p;
    p.id = "x";
    p.question = "How many hands?";
    p.gold_answer = "2";
    p.answer_kind = AnswerKind::numeric;
    ScriptedBackend script;
    const std::string prompt = build_baseline_prompt(MethodKind::self_consistency, p);
    script.add(prompt, 0, "FINAL_ANSWER: 2");
    script.add(prompt, 1, "FINAL_ANSWER: 2");
    script.add(prompt, 2, "FINAL_ANSWER: 3");
    script.add(prompt, 3, "FINAL_ANSWER: 2");
    script.add(prompt, 4, "FINAL_ANSWER: 900");
    CountingBackend counting(script);
    MethodSpec method{MethodKind::self_consistency, 5, std::nullopt};
    const RunResult result = run_method(method, {p}, counting, scripted_run_options());
    CHECK(counting.count() == 5);
    CHECK(result.items[0].generations == 5);
    CHECK(result.items[0].prediction == "2");  // median of 2,2,3,2,900
    CHECK(result.items[0].correct);
}

TEST_CASE("cos routes math to computational mode and records it") {
    ProblemInstance p;
    p.id = "math1";
    p.question = "Tom bought 3 apples and 2 pears. How many fruits in total?";
    p.gold_answer = "5";
    p.answer_kind = AnswerKind::numeric;
    ScriptedBackend script;
    script.add(build_computational_prompt(p), 0, "FINAL_ANSWER: 5");
    MethodSpec method{MethodKind::cos, 5, std::nullopt};
    const RunResult result = run_method(method, {p}, script, scripted_run_options());
    REQUIRE(result.items.size() == 1);
    CHECK(result.items[0].mode == Mode::computational);
    CHECK(result.items[0].correct);
    CHECK(result.items[0].generations == 5);  // k samples
}

TEST_CASE("per-item backend failures mark the item and the run continues") {
    std::vector<ProblemInstance> problems(2);
    problems[0].id = "a";
    problems[0].question = "First?";
    problems[0].gold_answer = "one";
    problems[1].id = "b";
    problems[1].question = "Second?";
    problems[1].gold_answer = "two";
    ScriptedBackend script;  // only the first item is scripted
    script.add(build_baseline_prompt(MethodKind::direct, problems[0]), 0, "one");
    MethodSpec method{MethodKind::direct, 1, std::nullopt};
    const RunResult result = run_method(method, problems, script, scripted_run_options());
    REQUIRE(result.items.size() == 2);
    CHECK(result.items[0].correct);
    CHECK_FALSE(result.items[1].correct);
    CHECK(result.items[1].extraction_failed);
    CHECK(result.accuracy == doctest::Approx(0.5));
}

TEST_CASE("worker pools produce identical sorted records") {
    std::vector<ProblemInstance> problems;
    ScriptedBackend script;
    for (int i = 0; i < 12; ++i) {
        ProblemInstance p;
        p.id = "p" + std::to_string(i);
        p.question = "Item " + std::to_string(i) + "?";
        p.gold_answer = "v" + std::to_string(i);
        problems.push_back(p);
        script.add(build_baseline_prompt(MethodKind::direct, p), 0, "v" + std::to_string(i));
    }
    MethodSpec method{MethodKind::direct, 1, std::nullopt};
    RunOptions serial = scripted_run_options();
    RunOptions pooled = scripted_run_options();
    pooled.workers = 4;
    const RunResult a = run_method(method, problems, script, serial);
    const RunResult b = run_method(method, problems, script, pooled);
    const StatsOptions stats;
    CHECK(run_result_to_json(a, stats).dump(2) == run_result_to_json(b, stats).dump(2));
}

TEST_CASE("bootstrap degenerate vectors") {
    CHECK(bootstrap_ci(std::vector<uint8_t>(40, 1)) == std::pair<double, double>{1.0, 1.0});
    CHECK(bootstrap_ci(std::vector<uint8_t>(40, 0)) == std::pair<double, double>{0.0, 0.0});
    CHECK_THROWS_AS(bootstrap_ci({}), std::invalid_argument);
}

TEST_CASE("bootstrap half-width matches the analytic binomial value") {
    std::vector<uint8_t> correct(200, 0);
    for (int i = 0; i < 143; ++i) correct[i] = 1;
    const auto [lo, hi] = bootstrap_ci(correct, 1000, 0.95, 1);
    const double half_width = (hi - lo) / 2.0;
    const double analytic = 1.96 * std::sqrt(0.715 * 0.285 / 200.0);  // 0.0626
    CHECK(half_width == doctest::Approx(analytic).epsilon(0.16));
    CHECK(std::fabs(half_width - analytic) < 0.01);
    CHECK(lo <= hi);
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
}

TEST_CASE("bootstrap bounds bracket sanity on random vectors") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const size_t n = 1 + rng.next_below(60);
        std::vector<uint8_t> v(n);
        for (auto& x : v) x = static_cast<uint8_t>(rng.next() & 1);
        const auto [lo, hi] = bootstrap_ci(v, 200, 0.95, trial);
        CHECK(lo <= hi);
        CHECK(lo >= 0.0);
        CHECK(hi <= 1.0);
    }
}

TEST_CASE("permutation test on identical vectors is 1") {
    const std::vector<uint8_t> v = {1, 0, 1, 1, 0};
    CHECK(permutation_test(v, v) == doctest::Approx(1.0));
}

TEST_CASE("permutation test rejects mismatched lengths") {
    CHECK_THROWS_AS(permutation_test({1, 0}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(permutation_test({}, {}), std::invalid_argument);
}

TEST_CASE("permutation test tracks the exhaustive enumeration within 0.02") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 1 + rng.next_below(12);
        std::vector<uint8_t> a(n), b(n);
        for (size_t i = 0; i < n; ++i) {
            a[i] = static_cast<uint8_t>(rng.next() & 1);
            b[i] = static_cast<uint8_t>(rng.next() & 1);
        }
        const double exact = exhaustive_permutation_p(a, b);
        const double monte_carlo = permutation_test(a, b, 10000, 1000 + trial);
        CAPTURE(trial);
        CAPTURE(n);
        CHECK(std::fabs(monte_carlo - exact) <= 0.02);
    }
}

TEST_CASE("all-true vs all-false at n=20 is highly significant") {
    const std::vector<uint8_t> a(20, 1);
    const std::vector<uint8_t> b(20, 0);
    CHECK(permutation_test(a, b) < 0.001);  // exact p is 2/2^20
}

TEST_CASE("permutation test is symmetric") {
    SplitMix64 rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 5 + rng.next_below(30);
        std::vector<uint8_t> a(n), b(n);
        for (size_t i = 0; i < n; ++i) {
            a[i] = static_cast<uint8_t>(rng.next() & 1);
            b[i] = static_cast<uint8_t>(rng.next() & 1);
        }
        CHECK(permutation_test(a, b, 2000, 5) == permutation_test(b, a, 2000, 5));
    }
}

namespace {

RunResult fake_run(const std::string& method, const std::string& dataset,
                   const std::vector<uint8_t>& correct) {
    RunResult run;
    run.method = method;
    run.dataset = dataset;
    for (size_t i = 0; i < correct.size(); ++i) {
        ItemRecord rec;
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%03zu", i);
        rec.id = buf;
        rec.correct = correct[i] != 0;
        rec.prediction = rec.correct ? "right" : "wrong";
        run.items.push_back(rec);
    }
    size_t hits = 0;
    for (uint8_t c : correct) hits += c;
    run.accuracy = correct.empty() ? 0.0 : static_cast<double>(hits) / correct.size();
    return run;
}

}  // namespace

TEST_CASE("summarize: one run has no pairs, two paired runs have one") {
    const StatsOptions stats;
    const auto solo = summarize({fake_run("cos", "d", {1, 1, 0, 1})}, stats);
    CHECK(solo.rows.size() == 1);
    CHECK(solo.pairs.empty());

    const auto both = summarize(
        {fake_run("cos", "d", {1, 1, 0, 1}), fake_run("direct", "d", {0, 1, 0, 1})}, stats);
    CHECK(both.rows.size() == 2);
    REQUIRE(both.pairs.size() == 1);
    CHECK(both.pairs[0].method_a == "cos");
    CHECK(both.pairs[0].method_b == "direct");
    CHECK(both.warnings.empty());
}

TEST_CASE("summarize: identical runs give p = 1") {
    const StatsOptions stats;
    const auto report = summarize(
        {fake_run("cos", "d", {1, 0, 1, 1}), fake_run("cos", "d", {1, 0, 1, 1})}, stats);
    REQUIRE(report.pairs.size() == 1);
    CHECK(report.pairs[0].p_value == doctest::Approx(1.0));
}

TEST_CASE("summarize omits p-values for unpaired runs with a warning") {
    const StatsOptions stats;
    const auto report = summarize(
        {fake_run("cos", "d1", {1, 1}), fake_run("direct", "d2", {0, 1})}, stats);
    CHECK(report.pairs.empty());
    REQUIRE(report.warnings.size() == 1);
    CHECK(report.warnings[0].find("not paired") != std::string::npos);
    // the rendered table carries the warning
    CHECK(format_summary(report).find("warning:") != std::string::npos);
}

TEST_CASE("report JSON round-trips through the file format") {
    RunResult run = fake_run("cos", "d", {1, 0, 1});
    run.items[0].mode = Mode::computational;
    run.items[1].mode = Mode::symbolic;
    run.items[2].mode = Mode::computational;
    run.sample_seed = 7;
    run.started_at = "1970-01-01T00:00:00Z";
    run.finished_at = "1970-01-01T00:00:00Z";
    const StatsOptions stats;
    const nlohmann::json doc = run_result_to_json(run, stats);
    CHECK(doc["mode_counts"]["computational"] == 2);
    CHECK(doc["mode_accuracy"]["computational"] == doctest::Approx(1.0));
    CHECK(doc["ci95"].is_array());

    const RunResult loaded = run_result_from_json(doc);
    CHECK(loaded.method == run.method);
    CHECK(loaded.dataset == run.dataset);
    CHECK(loaded.items.size() == run.items.size());
    CHECK(loaded.items[0].mode == Mode::computational);
    CHECK(loaded.accuracy == doctest::Approx(run.accuracy));

    const std::string jsonl = item_records_jsonl(run);
    CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 3);
}
