#include "remet/rng.hpp"

#include <sstream>

#include "remet/errors.hpp"

namespace remet {

uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, std::string_view stream) {
    return mix64(seed ^ fnv1a64(stream));
}

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw ValidationError("Rng::below: n must be positive");
    // Rejection sampling over the top of the range to stay unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % n;
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

Rng Rng::restore_state(const std::string& state) {
    Rng r(0);
    std::istringstream is(state);
    is >> r.engine_;
    if (is.fail()) throw ParseError("invalid rng state string");
    return r;
}

}  // namespace remet
