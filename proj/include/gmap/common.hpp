#ifndef GMAP_COMMON_HPP
#define GMAP_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gmap {

// Malformed external input (files, datasets). CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad tunable or command line usage. CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal consistency violation. CLI maps this to exit code 3.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& msg) : std::logic_error(msg) {}
};

// Deterministic, platform-independent generator (splitmix64). Used wherever a
// seeded stream is part of a reproducible run (eval sampling, tests).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; safe as a log() argument.
    double next_double_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller; one value per call, cached pair.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double_open();
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace gmap

#endif
