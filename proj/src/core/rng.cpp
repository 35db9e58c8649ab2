#include "core/rng.hpp"

#include <openssl/rand.h>

#include "core/errors.hpp"

namespace cps {

std::uint64_t RandomSource::next_u64() {
    std::uint8_t buf[8];
    fill(buf);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | buf[i];
    return v;
}

std::uint64_t RandomSource::below(std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorCode::invalid_argument, "below: bound must be positive");
    // Rejection threshold: largest multiple of bound that fits in 64 bits.
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % bound;
    }
}

void SecureRandom::fill(std::span<std::uint8_t> out) {
    if (out.empty()) return;
    if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
        throw Error(ErrorCode::internal_error, "system random source failed");
}

// splitmix64: tiny, portable, and identical on every platform.
std::uint64_t SeededRandom::next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
    std::size_t i = 0;
    while (i < out.size()) {
        std::uint64_t v = next();
        for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
            out[i] = static_cast<std::uint8_t>(v >> 56);
            v <<= 8;
        }
    }
}

}  // namespace cps
