#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "dualmode/hash.hpp"
#include "dualmode/model_backend.hpp"

using namespace dualmode;
using nlohmann::json;

namespace {

GenerationRequest request_for(const std::string& prompt, int sample_index = 0,
                              double temperature = 0.0) {
    GenerationRequest r;
    r.model = "test-model";
    r.prompt = prompt;
    r.temperature = temperature;
    r.sample_index = sample_index;
    return r;
}

}  // namespace

TEST_CASE("scripted backend answers by exact prompt match") {
    ScriptedBackend backend;
    backend.add("P", 0, "FINAL_ANSWER: 7");
    CHECK(backend.generate(request_for("P")).text == "FINAL_ANSWER: 7");
    CHECK(backend.deterministic());
}

TEST_CASE("scripted backend misses raise script_miss") {
    ScriptedBackend backend;
    backend.add("known", 0, "x");
    try {
        backend.generate(request_for("unknown"));
        FAIL("expected a script miss");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::script_miss);
    }
}

TEST_CASE("per-sample variants return in order, missing variants fall back to sample 0") {
    ScriptedBackend backend;
    for (int i = 0; i < 5; ++i)
        backend.add("P", i, "variant " + std::to_string(i));
    for (int i = 0; i < 5; ++i)
        CHECK(backend.generate(request_for("P", i)).text == "variant " + std::to_string(i));

    backend.add("Q", 0, "only");
    CHECK(backend.generate(request_for("Q", 3)).text == "only");
}

TEST_CASE("script file loading") {
    const char* path = "script_test.jsonl";
    {
        std::ofstream out(path);
        out << R"({"prompt": "P", "completion": "a", "sample_index": 0})" << "\n";
        out << R"({"prompt": "P", "completion": "b", "sample_index": 1, "latency": 0.25})" << "\n";
        out << "\n";
        out << R"({"prompt_fnv1a64": ")" << to_hex(fnv1a64("hashed prompt")) << R"(", "completion": "h"})"
            << "\n";
    }
    ScriptedBackend backend = ScriptedBackend::load(path);
    CHECK(backend.generate(request_for("P", 0)).text == "a");
    CHECK(backend.generate(request_for("P", 1)).text == "b");
    CHECK(backend.generate(request_for("P", 1)).latency_s == doctest::Approx(0.25));
    CHECK(backend.generate(request_for("hashed prompt")).text == "h");
    std::remove(path);
}

TEST_CASE("empty script file is a valid backend where every call misses") {
    const char* path = "script_empty.jsonl";
    { std::ofstream out(path); }
    ScriptedBackend backend = ScriptedBackend::load(path);
    CHECK(backend.size() == 0);
    CHECK_THROWS_AS(backend.generate(request_for("anything")), BackendError);
    std::remove(path);
}

TEST_CASE("malformed script records name the line") {
    const char* path = "script_bad.jsonl";
    {
        std::ofstream out(path);
        out << R"({"prompt": "ok", "completion": "fine"})" << "\n";
        out << R"({"prompt": "missing completion"})" << "\n";
    }
    CHECK_THROWS_WITH_AS(ScriptedBackend::load(path), doctest::Contains("line 2"), ScriptError);
    std::remove(path);
    CHECK_THROWS_AS(ScriptedBackend::load("does_not_exist.jsonl"), ScriptError);
}

TEST_CASE("cache serves repeats without changing the text") {
    ScriptedBackend inner;
    inner.add("P", 0, "payload", 0.5);
    CountingBackend counting(inner);
    CachingBackend cache(counting);

    const GenerationResult first = cache.generate(request_for("P"));
    CHECK_FALSE(first.from_cache);
    CHECK(first.latency_s == doctest::Approx(0.5));

    const GenerationResult second = cache.generate(request_for("P"));
    CHECK(second.from_cache);
    CHECK(second.text == first.text);
    CHECK(second.latency_s == doctest::Approx(0.0));
    CHECK(second.original_latency_s == doctest::Approx(0.5));  // preserved for reporting
    CHECK(counting.count() == 1);
}

TEST_CASE("cache keys include temperature and sample index") {
    ScriptedBackend inner;
    inner.add("P", 0, "zero");
    inner.add("P", 1, "one");
    CountingBackend counting(inner);
    CachingBackend cache(counting);

    CHECK(cache.generate(request_for("P", 0)).text == "zero");
    CHECK(cache.generate(request_for("P", 1)).text == "one");
    CHECK(cache.generate(request_for("P", 0, 0.7)).text == "zero");
    CHECK(counting.count() == 3);  // three distinct keys
    CHECK(cache.generate(request_for("P", 1)).from_cache);
}

TEST_CASE("disk cache persists across backend instances") {
    const std::string dir = "cache_test_dir";
    std::filesystem::remove_all(dir);
    ScriptedBackend inner;
    inner.add("P", 0, "stored", 0.125);
    {
        CachingBackend cache(inner, dir);
        CHECK_FALSE(cache.generate(request_for("P")).from_cache);
    }
    {
        ScriptedBackend empty;  // nothing scripted: only the disk cache can answer
        CachingBackend cache(empty, dir);
        const GenerationResult hit = cache.generate(request_for("P"));
        CHECK(hit.from_cache);
        CHECK(hit.text == "stored");
        CHECK(hit.original_latency_s == doctest::Approx(0.125));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("rate limiter never exceeds the ceiling in any window") {
    VirtualClock clock;
    RateLimiter limiter(3, std::chrono::seconds(10), clock);
    std::vector<std::chrono::nanoseconds> stamps;
    for (int i = 0; i < 10; ++i) {
        limiter.acquire();
        stamps.push_back(clock.now());
    }
    // check the invariant over every window [t, t+10s)
    for (size_t i = 0; i < stamps.size(); ++i) {
        int in_window = 0;
        for (size_t j = 0; j < stamps.size(); ++j)
            if (stamps[j] >= stamps[i] && stamps[j] - stamps[i] < std::chrono::seconds(10))
                ++in_window;
        CHECK(in_window <= 3);
    }
    // and the clock had to advance: 10 requests at 3 per 10s span at least 20s
    CHECK(stamps.back() >= std::chrono::seconds(20));
}

TEST_CASE("rate limiter with non-positive ceiling is a no-op") {
    VirtualClock clock;
    RateLimiter limiter(0, std::chrono::seconds(1), clock);
    for (int i = 0; i < 100; ++i) limiter.acquire();
    CHECK(clock.now() == std::chrono::nanoseconds(0));
}

// Live loopback test of the HTTP backend: a scratch chat-completions server
// that fails twice before answering, so the retry path is exercised for real.
TEST_CASE("http backend retries transient failures with exponential backoff") {
    httplib::Server server;
    std::atomic<int> hits{0};
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        const int n = ++hits;
        if (n <= 2) {
            res.status = 500;
            res.set_content("transient", "text/plain");
            return;
        }
        const json body = json::parse(req.body);
        CHECK(body["model"] == "test-model");
        CHECK(body["max_tokens"] == 2048);
        const json reply = {
            {"choices",
             json::array({json{{"message",
                                json{{"role", "assistant"},
                                     {"content", "echo: " + body["messages"][0]["content"]
                                                                .get<std::string>()}}}}})}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) return;  // sandbox forbids binding; nothing to test here
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    VirtualClock clock;  // backoff sleeps advance virtual time instead of waiting
    HttpBackendConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    config.default_model = "fallback";
    config.rate_limit_requests = 0;
    HttpBackend backend(config, clock);

    const GenerationResult r = backend.generate(request_for("ping"));
    CHECK(r.text == "echo: ping");
    CHECK(hits.load() == 3);
    // two backoffs: 1s then 2s of virtual time
    CHECK(clock.now() >= std::chrono::seconds(3));

    server.stop();
    server_thread.join();
}

TEST_CASE("http backend surfaces exhaustion as endpoint-unreachable") {
    httplib::Server server;
    server.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    if (port <= 0) return;
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    VirtualClock clock;
    HttpBackendConfig config;
    config.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    config.rate_limit_requests = 0;
    HttpBackend backend(config, clock);
    try {
        backend.generate(request_for("ping"));
        FAIL("expected unreachable");
    } catch (const BackendError& e) {
        CHECK(e.kind == BackendError::Kind::unreachable);
    }
    server.stop();
    server_thread.join();
}
