#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bmseg {

// Bad input data (malformed meshes, label mismatches, out-of-range values).
// The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration (unknown modes, invalid stage sizes, impossible targets).
// Also exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or unparsable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Deterministic RNG used everywhere a seed appears in a config. Wraps
// mt19937_64 but derives doubles by explicit bit manipulation so streams
// are reproducible independent of the standard library's distribution
// implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [lo, hi). 53-bit mantissa draw.
    double uniform(double lo = 0.0, double hi = 1.0) {
        const double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    // Integer uniform in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(gen_() % span);
    }

    // Box-Muller; one spare value cached.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + stddev * r * std::cos(theta);
    }

    // Derive an independent child stream (splitmix64 over seed ^ stream id).
    Rng fork(std::uint64_t stream) {
        std::uint64_t z = gen_() + 0x9e3779b97f4a7c15ull * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return Rng(z ^ (z >> 31));
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace bmseg
