#ifndef GMAP_QUANTIZE_HPP
#define GMAP_QUANTIZE_HPP

#include <cstdint>

#include "gmap/gaussian.hpp"

namespace gmap {

// 19-bit float layout for means and weights: 1 sign, 8 exponent (binary32
// bias), 10 mantissa bits, round-to-nearest-even. Covariances are never
// quantized.
struct QuantConfig {
    bool enabled = false;
    int sign_bits = 1;
    int exponent_bits = 8;
    int mantissa_bits = 10;

    int total_bits() const { return sign_bits + exponent_bits + mantissa_bits; }
    void validate() const;
};

struct QuantStats {
    std::uint64_t values_quantized = 0;
    std::uint64_t saturations = 0;
};

// Nearest 19-bit-representable value (ties to even). Overflow saturates to the
// largest finite representable value and bumps stats.saturations.
double quantize_value(double v, QuantStats* stats = nullptr);

// Quantizes mean components and weight; covariance, kind, id are unchanged.
// Idempotent.
Gaussian3 quantize_gaussian(const Gaussian3& g, const QuantConfig& q,
                            QuantStats* stats = nullptr);

// Bit encoding used by the serialized quantized record: sign(1) | exp(8) |
// mantissa(10), MSB first. encode expects a value that is already a fixed
// point of quantize_value; decode is its exact inverse.
std::uint32_t encode19(double v);
double decode19(std::uint32_t bits);

}  // namespace gmap

#endif
