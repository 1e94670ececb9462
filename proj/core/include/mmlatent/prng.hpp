#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mmlatent {

/// Deterministic xoshiro256++ generator (Blackman & Vigna), seeded through
/// splitmix64. Draw sequences depend only on the seed, never on the platform:
/// uniform doubles are built from the top 53 bits, normals via Box-Muller
/// with a cached spare, bounded ints by rejection sampling.
///
/// Purpose-keyed substreams (`Prng::for_purpose`) give each consumer (data
/// generation, parameter init, diffusion noise, ...) an independent stream
/// derived from one root seed, so reordering one consumer's draws never
/// perturbs another's.
class Prng {
  public:
    struct State {
        std::array<std::uint64_t, 4> s{};
        bool has_spare_normal = false;
        double spare_normal = 0.0;
    };

    explicit Prng(std::uint64_t seed);

    /// Substream keyed by (root_seed, purpose): seeds a fresh generator from
    /// root_seed ^ fnv1a64(purpose).
    static Prng for_purpose(std::uint64_t root_seed, std::string_view purpose);

    std::uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; one spare is cached between calls.
    double normal();

    /// Uniform integer in [lo, hi], inclusive, unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::int64_t i = static_cast<std::int64_t>(v.size()) - 1; i > 0; --i) {
            const std::int64_t j = uniform_int(0, i);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    State state() const { return state_; }
    void set_state(const State& st) { state_ = st; }

    static std::uint64_t fnv1a64(std::string_view s);
    static std::uint64_t splitmix64(std::uint64_t& x);

  private:
    State state_;
};

}  // namespace mmlatent
