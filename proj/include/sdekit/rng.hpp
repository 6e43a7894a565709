#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sdekit {

/// splitmix64 finalizer; used to decorrelate seeds derived from small integers.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic per-stream seed: the same (seed, index) pair always yields
/// the same child seed, independent of how many streams exist or in which
/// order they are drawn.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51'7c'c1'b7'27'22'0a'95ULL));
}

/// Standard-normal generator with a fully specified output sequence.
///
/// mt19937_64 plus an explicit Box-Muller transform is used instead of
/// std::normal_distribution because the latter's algorithm is
/// implementation-defined; fixed seeds must reproduce identical trajectories
/// across compilers.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log1p(-u1)); // 1-u1 in (0,1], log finite
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::mt19937_64& engine() { return gen_; }

private:
    double uniform01() {
        // 53-bit mantissa in [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace sdekit
