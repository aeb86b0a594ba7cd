#include "bandgate/rng.hpp"

#include <cmath>
#include <numbers>

namespace bandgate {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0xD1B54A32D192ED03ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_(stream_id),
      key_(mix64(mix64(seed + kGolden) ^ mix64((stream_id + 1) * kStreamSalt)))
{
}

std::uint64_t Rng::next_u64() noexcept
{
    // Two rounds so adjacent counters under adjacent keys stay decorrelated.
    const std::uint64_t c = ++counter_;
    return mix64(mix64(key_ + c * kGolden) ^ key_);
}

double Rng::uniform01() noexcept
{
    // (bits + 0.5) / 2^53 lies strictly inside (0, 1).
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) noexcept
{
    // Lemire's rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        const unsigned __int128 product = static_cast<unsigned __int128>(r) * bound;
        if (static_cast<std::uint64_t>(product) >= threshold) {
            return static_cast<std::uint64_t>(product >> 64);
        }
    }
}

double Rng::standard_normal() noexcept
{
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
}

Rng Rng::substream(std::uint64_t child_id) const noexcept
{
    return Rng(mix64(seed_ ^ mix64(stream_ + kGolden)), child_id);
}

} // namespace bandgate
