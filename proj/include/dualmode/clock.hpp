#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>

namespace dualmode {

// Monotonic time source behind latency measurement, rate limiting and retry
// backoff. The virtual implementation lets tests (and fully scripted runs)
// advance time without sleeping.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::nanoseconds now() = 0;
    virtual void sleep_for(std::chrono::nanoseconds d) = 0;
};

class SystemClock final : public Clock {
public:
    std::chrono::nanoseconds now() override;
    void sleep_for(std::chrono::nanoseconds d) override;
};

SystemClock& system_clock();

class VirtualClock final : public Clock {
public:
    std::chrono::nanoseconds now() override {
        std::lock_guard lock(mu_);
        return time_;
    }
    // Sleeping just advances the virtual timeline.
    void sleep_for(std::chrono::nanoseconds d) override {
        std::lock_guard lock(mu_);
        time_ += d;
    }
    void advance(std::chrono::nanoseconds d) { sleep_for(d); }

private:
    std::mutex mu_;
    std::chrono::nanoseconds time_{0};
};

}  // namespace dualmode
