#pragma once

#include <cstdint>
#include <vector>

namespace dualmode {

// SplitMix64. Pinned in-repo (rather than relying on standard-library
// distributions) so seeded sampling, bootstrap resampling and permutation
// draws are bit-identical on every platform and toolchain.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // n must be positive. Plain modulo; bias is irrelevant at our scales and
    // the mapping stays fully specified.
    uint64_t next_below(uint64_t n) { return next() % n; }

    // Fisher-Yates, high-to-low.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

}  // namespace dualmode
