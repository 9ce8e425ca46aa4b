#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dualmode {

// FNV-1a, 64-bit. Used for cache keys and the script file's hashed-prompt
// records.
constexpr uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(uint64_t v);

}  // namespace dualmode
