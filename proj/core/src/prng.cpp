#include "mmlatent/prng.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t Prng::splitmix64(std::uint64_t& x) {
    // Steele, Lea & Flood constants.
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t Prng::fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Prng::Prng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_.s) word = splitmix64(sm);
}

Prng Prng::for_purpose(std::uint64_t root_seed, std::string_view purpose) {
    return Prng(root_seed ^ fnv1a64(purpose));
}

std::uint64_t Prng::next_u64() {
    // xoshiro256++ step.
    auto& s = state_.s;
    const std::uint64_t result = rotl(s[0] + s[3], 23) + s[0];
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double Prng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Prng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Prng::normal() {
    if (state_.has_spare_normal) {
        state_.has_spare_normal = false;
        return state_.spare_normal;
    }
    // Box-Muller; u1 nudged away from 0 so log stays finite.
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    state_.spare_normal = r * std::sin(theta);
    state_.has_spare_normal = true;
    return r * std::cos(theta);
}

std::int64_t Prng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) throw ContractError("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return lo + static_cast<std::int64_t>(next_u64());  // full 64-bit range
    // Rejection sampling for an unbiased draw.
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return lo + static_cast<std::int64_t>(v % span);
}

}  // namespace mmlatent
