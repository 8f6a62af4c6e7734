#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace remet {

// 64-bit FNV-1a over raw bytes. Fixed offset basis and prime, so every
// hashed artifact (feature buckets, file digests, derived seeds) is stable
// across platforms and builds.
uint64_t fnv1a64(std::string_view bytes);

// One round of splitmix64; used to decorrelate composed hashes and seeds.
uint64_t mix64(uint64_t x);

// Child seed for a named stream, e.g. per-reference generation streams.
uint64_t derive_seed(uint64_t seed, std::string_view stream);

// mt19937_64 behind helpers that avoid std::uniform_*_distribution, whose
// output is implementation-defined. Every random draw in the library goes
// through this class, which keeps seeded runs bit-stable everywhere.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); unbiased via rejection.
    uint64_t below(uint64_t n);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (size_t i = v.size() - 1; i > 0; --i) {
            size_t j = static_cast<size_t>(below(i + 1));
            std::swap(v[i], v[j]);
        }
    }

    // Engine state as the standard's space-separated decimal form.
    std::string save_state() const;
    static Rng restore_state(const std::string& state);

private:
    std::mt19937_64 engine_;
};

}  // namespace remet
