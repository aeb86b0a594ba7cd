#pragma once

#include <cstdint>
#include <limits>

namespace bandgate {

/// Counter-based generator. Sample i of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, i), so substreams never interact and a run
/// reproduces bit for bit regardless of how work is scheduled.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next_u64(); }
    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform01() noexcept;

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound) noexcept;

    /// Standard normal via Box-Muller; the second variate is cached.
    double standard_normal() noexcept;

    /// Independent child stream keyed on this generator's identity.
    [[nodiscard]] Rng substream(std::uint64_t child_id) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace bandgate
