#include "dualmode/model_backend.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "dualmode/hash.hpp"

namespace dualmode {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// --- ScriptedBackend ---------------------------------------------------

ScriptedBackend ScriptedBackend::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScriptError("script: cannot open " + path);
    ScriptedBackend backend;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw ScriptError("script: " + path + ": line " + std::to_string(line_no) + ": " +
                              e.what());
        }
        auto fail = [&](const std::string& msg) -> ScriptError {
            return ScriptError("script: " + path + ": line " + std::to_string(line_no) + ": " +
                               msg);
        };
        if (!record.is_object()) throw fail("record must be a JSON object");
        if (!record.contains("completion") || !record["completion"].is_string())
            throw fail("missing string field \"completion\"");
        int sample_index = 0;
        if (record.contains("sample_index")) {
            if (!record["sample_index"].is_number_integer()) throw fail("sample_index must be an integer");
            sample_index = record["sample_index"].get<int>();
        }
        double latency = record.value("latency", 0.0);
        if (record.contains("prompt") && record["prompt"].is_string()) {
            backend.add(record["prompt"].get<std::string>(), sample_index,
                        record["completion"].get<std::string>(), latency);
        } else if (record.contains("prompt_fnv1a64") && record["prompt_fnv1a64"].is_string()) {
            uint64_t hash = 0;
            const std::string hex = record["prompt_fnv1a64"].get<std::string>();
            try {
                hash = std::stoull(hex, nullptr, 16);
            } catch (const std::exception&) {
                throw fail("prompt_fnv1a64 is not a hex value");
            }
            backend.add_hashed(hash, sample_index, record["completion"].get<std::string>(),
                               latency);
        } else {
            throw fail("record needs a \"prompt\" or \"prompt_fnv1a64\" string field");
        }
    }
    return backend;
}

void ScriptedBackend::add(const std::string& prompt, int sample_index, std::string completion,
                          double latency_s) {
    by_prompt_[{prompt, sample_index}] = Entry{std::move(completion), latency_s};
}

void ScriptedBackend::add_hashed(uint64_t prompt_hash, int sample_index, std::string completion,
                                 double latency_s) {
    by_hash_[{prompt_hash, sample_index}] = Entry{std::move(completion), latency_s};
}

const ScriptedBackend::Entry* ScriptedBackend::find(const std::string& prompt,
                                                    int sample_index) const {
    if (auto it = by_prompt_.find({prompt, sample_index}); it != by_prompt_.end())
        return &it->second;
    const uint64_t h = fnv1a64(prompt);
    if (auto it = by_hash_.find({h, sample_index}); it != by_hash_.end()) return &it->second;
    if (sample_index != 0) return find(prompt, 0);
    return nullptr;
}

GenerationResult ScriptedBackend::generate(const GenerationRequest& request) {
    const Entry* entry = find(request.prompt, request.sample_index);
    if (!entry) {
        std::string head = request.prompt.substr(0, 80);
        for (char& c : head)
            if (c == '\n') c = ' ';
        throw BackendError(BackendError::Kind::script_miss,
                           "script miss (sample " + std::to_string(request.sample_index) +
                               "): " + head);
    }
    GenerationResult result;
    result.text = entry->completion;
    result.latency_s = entry->latency_s;
    result.original_latency_s = entry->latency_s;
    return result;
}

// --- CachingBackend ----------------------------------------------------

namespace {

std::string cache_key(const GenerationRequest& r) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.17g", r.temperature);
    std::string canonical;
    canonical.reserve(r.prompt.size() + 64);
    canonical += r.model;
    canonical += '\x1f';
    canonical += r.prompt;
    canonical += '\x1f';
    canonical += temp;
    canonical += '\x1f';
    canonical += std::to_string(r.max_tokens);
    canonical += '\x1f';
    canonical += std::to_string(r.sample_index);
    return canonical;
}

}  // namespace

CachingBackend::CachingBackend(Backend& inner, std::string dir)
    : inner_(inner), dir_(std::move(dir)) {
    if (!dir_.empty()) fs::create_directories(dir_);
}

std::optional<CachingBackend::Entry> CachingBackend::disk_lookup(const std::string& key) const {
    if (dir_.empty()) return std::nullopt;
    const fs::path file = fs::path(dir_) / (to_hex(fnv1a64(key)) + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    try {
        json doc = json::parse(in);
        if (doc.value("key", "") != key) return std::nullopt;  // hash collision
        return Entry{doc.at("text").get<std::string>(), doc.value("latency_s", 0.0)};
    } catch (const json::exception&) {
        return std::nullopt;  // unreadable cache files are treated as misses
    }
}

void CachingBackend::disk_store(const std::string& key, const GenerationRequest& request,
                                const Entry& entry) const {
    if (dir_.empty()) return;
    json doc = {{"key", key},
                {"model", request.model},
                {"prompt", request.prompt},
                {"temperature", request.temperature},
                {"max_tokens", request.max_tokens},
                {"sample_index", request.sample_index},
                {"text", entry.text},
                {"latency_s", entry.original_latency_s}};
    const fs::path file = fs::path(dir_) / (to_hex(fnv1a64(key)) + ".json");
    std::ofstream out(file);
    out << doc.dump(2) << '\n';
}

GenerationResult CachingBackend::generate(const GenerationRequest& request) {
    const std::string key = cache_key(request);
    {
        std::lock_guard lock(mu_);
        auto it = memory_.find(key);
        if (it == memory_.end()) {
            if (auto on_disk = disk_lookup(key)) it = memory_.emplace(key, *on_disk).first;
        }
        if (it != memory_.end()) {
            GenerationResult hit;
            hit.text = it->second.text;
            hit.latency_s = 0.0;
            hit.from_cache = true;
            hit.original_latency_s = it->second.original_latency_s;
            return hit;
        }
    }
    GenerationResult fresh = inner_.generate(request);
    Entry entry{fresh.text, fresh.original_latency_s};
    {
        std::lock_guard lock(mu_);
        memory_[key] = entry;
    }
    disk_store(key, request, entry);
    return fresh;
}

// --- RateLimiter -------------------------------------------------------

RateLimiter::RateLimiter(int max_requests, std::chrono::nanoseconds window, Clock& clock)
    : max_requests_(max_requests), window_(window), clock_(clock) {}

void RateLimiter::acquire() {
    if (max_requests_ <= 0) return;  // unlimited
    while (true) {
        std::chrono::nanoseconds wait{0};
        {
            std::lock_guard lock(mu_);
            const auto now = clock_.now();
            while (!dispatched_.empty() && now - dispatched_.front() >= window_)
                dispatched_.pop_front();
            if (static_cast<int>(dispatched_.size()) < max_requests_) {
                dispatched_.push_back(now);
                return;
            }
            wait = dispatched_.front() + window_ - now;
        }
        clock_.sleep_for(wait);
    }
}

// --- HttpBackend -------------------------------------------------------

namespace {

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
        throw std::runtime_error("backend endpoint must start with http:// or https://: " + url);
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/v1/chat/completions"};
    return {url.substr(0, slash), url.substr(slash)};
}

bool transient_status(int status) {
    return status == 408 || status == 429 || (status >= 500 && status < 600);
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config, Clock& clock)
    : config_(std::move(config)),
      clock_(clock),
      limiter_(config_.rate_limit_requests,
               std::chrono::nanoseconds(
                   static_cast<int64_t>(config_.rate_limit_window_s * 1e9)),
               clock) {
    auto [base, path] = split_url(config_.endpoint);
    base_url_ = base;
    path_ = path;
}

GenerationResult HttpBackend::generate(const GenerationRequest& request) {
    json payload = {
        {"model", request.model.empty() ? config_.default_model : request.model},
        {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    const std::string body = payload.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.credentials_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < config_.retry.attempts; ++attempt) {
        if (attempt > 0) clock_.sleep_for(config_.retry.initial_backoff * (1ll << (attempt - 1)));
        limiter_.acquire();

        httplib::Client client(base_url_);
        client.set_connection_timeout(std::chrono::milliseconds(
            static_cast<int64_t>(config_.timeout_s * 1000)));
        client.set_read_timeout(std::chrono::milliseconds(
            static_cast<int64_t>(config_.timeout_s * 1000)));

        const auto t0 = clock_.now();
        httplib::Result res = client.Post(path_, headers, body, "application/json");
        const double latency =
            std::chrono::duration<double>(clock_.now() - t0).count();

        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (transient_status(res->status)) continue;
            throw BackendError(BackendError::Kind::unreachable, last_error);
        }
        try {
            json doc = json::parse(res->body);
            GenerationResult result;
            result.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            result.latency_s = latency;
            result.original_latency_s = latency;
            return result;
        } catch (const json::exception& e) {
            throw BackendError(BackendError::Kind::unreachable,
                               std::string("malformed chat-completions response: ") + e.what());
        }
    }
    throw BackendError(BackendError::Kind::unreachable,
                       "endpoint unreachable after " + std::to_string(config_.retry.attempts) +
                           " attempts: " + last_error);
}

}  // namespace dualmode
