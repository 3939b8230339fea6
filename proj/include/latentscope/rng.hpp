#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace latentscope {

// SplitMix64 step; used to derive independent, well-mixed stream seeds so
// parallel work items can draw from disjoint generators deterministically.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a + 0x9e3779b97f4a7c15ull;
    h ^= splitmix64(s);
    s ^= b + 0xc2b2ae3d27d4eb4full;
    h ^= splitmix64(s);
    s ^= c + 0x165667b19e3779f9ull;
    h ^= splitmix64(s);
    return h;
}

// Stream tags for derive_seed so unrelated consumers of the same base seed
// never collide.
namespace streams {
inline constexpr std::uint64_t noise = 0x01;
inline constexpr std::uint64_t init = 0x02;
inline constexpr std::uint64_t train = 0x03;
inline constexpr std::uint64_t prior = 0x04;
inline constexpr std::uint64_t hmc = 0x05;
inline constexpr std::uint64_t null_control = 0x06;
inline constexpr std::uint64_t split = 0x07;
}  // namespace streams

// Deterministic generator with portable uniform/normal draws. The standard
// distributions are implementation-defined, so uniforms come straight from
// engine bits and normals from Box-Muller.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe to take log of.
    double uniform_pos() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = normal();
        return v;
    }

    // Fisher-Yates; std::shuffle ordering is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace latentscope
