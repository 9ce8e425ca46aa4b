#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dualmode/clock.hpp"

namespace dualmode {

struct GenerationRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;  // [0, 2]
    int max_tokens = 2048;
    // Distinguishes repeated stochastic samples of the same prompt so caching
    // and scripted replay stay reproducible.
    int sample_index = 0;
};

struct GenerationResult {
    std::string text;
    // Wall-clock cost of this call; near zero for cache hits.
    double latency_s = 0.0;
    bool from_cache = false;
    // Latency of the generation that first produced the text; reports sum
    // this one so warm caches do not distort timing numbers.
    double original_latency_s = 0.0;
};

// Backend failures the harness records per item instead of aborting the run.
struct BackendError : std::runtime_error {
    enum class Kind { unreachable, script_miss };
    Kind kind;
    BackendError(Kind k, const std::string& what) : std::runtime_error(what), kind(k) {}
};

struct ScriptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
    // True when repeated runs against this backend are bit-reproducible; the
    // harness then emits fixed timestamps so reports replay byte-identically.
    virtual bool deterministic() const { return false; }
};

// Deterministic replay backend answering by exact prompt match from a JSON
// Lines script. Records:
//   {"prompt": "...", "completion": "...", "sample_index": 0, "latency": 0.0}
// "prompt_fnv1a64" (hex) may replace "prompt"; sample_index and latency are
// optional. A missing (prompt, sample_index) pair falls back to the
// sample_index 0 record before reporting a script miss.
class ScriptedBackend final : public Backend {
public:
    static ScriptedBackend load(const std::string& path);

    void add(const std::string& prompt, int sample_index, std::string completion,
             double latency_s = 0.0);
    void add_hashed(uint64_t prompt_hash, int sample_index, std::string completion,
                    double latency_s = 0.0);

    GenerationResult generate(const GenerationRequest& request) override;
    bool deterministic() const override { return true; }

    size_t size() const { return by_prompt_.size() + by_hash_.size(); }

private:
    struct Entry {
        std::string completion;
        double latency_s = 0.0;
    };
    const Entry* find(const std::string& prompt, int sample_index) const;

    std::map<std::pair<std::string, int>, Entry> by_prompt_;
    std::map<std::pair<uint64_t, int>, Entry> by_hash_;
};

// Completion cache keyed by (model, prompt, temperature, max_tokens,
// sample_index). In-memory always; content-addressed files under `dir` when
// given. Never changes returned text, only latency/from_cache.
class CachingBackend final : public Backend {
public:
    explicit CachingBackend(Backend& inner, std::string dir = "");

    GenerationResult generate(const GenerationRequest& request) override;
    bool deterministic() const override { return inner_.deterministic(); }

private:
    struct Entry {
        std::string text;
        double original_latency_s = 0.0;
    };
    std::optional<Entry> disk_lookup(const std::string& key) const;
    void disk_store(const std::string& key, const GenerationRequest& request,
                    const Entry& entry) const;

    Backend& inner_;
    std::string dir_;
    std::mutex mu_;
    std::map<std::string, Entry> memory_;
};

// Test/diagnostic decorator counting generate() calls.
class CountingBackend final : public Backend {
public:
    explicit CountingBackend(Backend& inner) : inner_(inner) {}

    GenerationResult generate(const GenerationRequest& request) override {
        ++count_;
        return inner_.generate(request);
    }
    bool deterministic() const override { return inner_.deterministic(); }

    int count() const { return count_.load(); }
    void reset() { count_ = 0; }

private:
    Backend& inner_;
    std::atomic<int> count_{0};
};

// Sliding-window throttle: at most max_requests dispatches per window.
// Blocks (via the clock) until a slot frees up.
class RateLimiter {
public:
    RateLimiter(int max_requests, std::chrono::nanoseconds window, Clock& clock);
    void acquire();

private:
    int max_requests_;
    std::chrono::nanoseconds window_;
    Clock& clock_;
    std::mutex mu_;
    std::deque<std::chrono::nanoseconds> dispatched_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::nanoseconds initial_backoff = std::chrono::seconds(1);
};

struct HttpBackendConfig {
    // Full chat-completions URL, e.g. "http://localhost:8000/v1/chat/completions".
    std::string endpoint;
    std::string default_model;
    std::string credentials_env = "OPENAI_API_KEY";
    double timeout_s = 120.0;
    RetryPolicy retry;
    int rate_limit_requests = 60;
    double rate_limit_window_s = 60.0;
};

// OpenAI-compatible chat-completions client with retry, rate limiting and
// bearer-token auth from the configured environment variable.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config, Clock& clock = system_clock());

    GenerationResult generate(const GenerationRequest& request) override;

private:
    HttpBackendConfig config_;
    std::string base_url_;
    std::string path_;
    Clock& clock_;
    RateLimiter limiter_;
};

}  // namespace dualmode
