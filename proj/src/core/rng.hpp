#pragma once

#include <cstdint>
#include <span>

namespace cps {

// Byte source for key generation and shuffles. Implementations must be
// safe to use from one thread at a time; callers own synchronization.
class RandomSource {
  public:
    virtual ~RandomSource() = default;
    virtual void fill(std::span<std::uint8_t> out) = 0;

    std::uint64_t next_u64();
    // Unbiased value in [0, bound) via rejection sampling; bound > 0.
    std::uint64_t below(std::uint64_t bound);
};

// CSPRNG backed by the system crypto provider. Use for all key material.
class SecureRandom final : public RandomSource {
  public:
    void fill(std::span<std::uint8_t> out) override;
};

// Deterministic generator for tests and simulation plumbing that must be
// reproducible across platforms. Never use for key material outside tests.
class SeededRandom final : public RandomSource {
  public:
    explicit SeededRandom(std::uint64_t seed) : state_(seed) {}
    void fill(std::span<std::uint8_t> out) override;

  private:
    std::uint64_t next();
    std::uint64_t state_;
};

}  // namespace cps
