#include "dualmode/clock.hpp"

#include <thread>

namespace dualmode {

std::chrono::nanoseconds SystemClock::now() {
    return std::chrono::steady_clock::now().time_since_epoch();
}

void SystemClock::sleep_for(std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); }

SystemClock& system_clock() {
    static SystemClock clock;
    return clock;
}

}  // namespace dualmode
