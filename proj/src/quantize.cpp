#include "gmap/quantize.hpp"

#include <cmath>

#include "gmap/common.hpp"

namespace gmap {

namespace {

constexpr int kMantBits = 10;
constexpr double kMantScale = 1024.0;          // 2^10
constexpr int kExpMin = -126;                  // smallest normal exponent
constexpr int kExpMax = 127;
constexpr double kMaxFinite = (2.0 - 1.0 / kMantScale) * 0x1.0p127;
constexpr double kMinNormal = 0x1.0p-126;

}  // namespace

void QuantConfig::validate() const {
    if (enabled && total_bits() != 19) {
        throw ConfigError("quantization layout must total 19 bits");
    }
    if (sign_bits != 1 || exponent_bits != 8 || mantissa_bits != 10) {
        throw ConfigError("unsupported quantization layout");
    }
}

double quantize_value(double v, QuantStats* stats) {
    if (stats) stats->values_quantized++;
    if (v == 0.0 || std::isnan(v)) return v;
    if (std::isinf(v)) {
        if (stats) stats->saturations++;
        return std::copysign(kMaxFinite, v);
    }

    double av = std::fabs(v);
    double q;
    if (av < kMinNormal) {
        // Subnormal grid: multiples of 2^-136. The scaling below is a power of
        // two, hence exact; nearbyint rounds ties to even.
        q = std::nearbyint(av * (kMantScale * 0x1.0p126)) * (0x1.0p-126 / kMantScale);
    } else {
        int e;
        double m = std::frexp(av, &e);  // av = m * 2^e, m in [0.5, 1)
        e -= 1;                         // normalize to m in [1, 2)
        if (e > kExpMax) {
            if (stats) stats->saturations++;
            return std::copysign(kMaxFinite, v);
        }
        double frac = std::nearbyint(std::ldexp(m, kMantBits + 1));  // 2m*1024 in [1024, 2048]
        q = std::ldexp(frac, e - kMantBits);
        if (q > kMaxFinite) {  // mantissa carry at the top binade
            if (stats) stats->saturations++;
            q = kMaxFinite;
        }
    }
    return std::copysign(q, v);
}

Gaussian3 quantize_gaussian(const Gaussian3& g, const QuantConfig& q, QuantStats* stats) {
    if (!q.enabled) {
        throw ConfigError("quantize_gaussian called with quantization disabled");
    }
    q.validate();
    Gaussian3 out = g;
    out.weight = quantize_value(g.weight, stats);
    out.mean = Vec3(quantize_value(g.mean.x(), stats),
                    quantize_value(g.mean.y(), stats),
                    quantize_value(g.mean.z(), stats));
    return out;
}

std::uint32_t encode19(double v) {
    std::uint32_t sign = std::signbit(v) ? 1u : 0u;
    double av = std::fabs(v);
    std::uint32_t biased = 0;
    std::uint32_t mant = 0;
    if (av != 0.0) {
        if (av < kMinNormal) {
            mant = static_cast<std::uint32_t>(av * (kMantScale * 0x1.0p126));
        } else {
            int e;
            double m = std::frexp(av, &e);
            e -= 1;
            biased = static_cast<std::uint32_t>(e + 127);
            mant = static_cast<std::uint32_t>((std::ldexp(m, 1) - 1.0) * kMantScale);
        }
    }
    return (sign << 18) | (biased << 10) | mant;
}

double decode19(std::uint32_t bits) {
    std::uint32_t sign = (bits >> 18) & 1u;
    std::uint32_t biased = (bits >> 10) & 0xffu;
    std::uint32_t mant = bits & 0x3ffu;
    double av;
    if (biased == 0) {
        av = static_cast<double>(mant) * (0x1.0p-126 / kMantScale);
    } else {
        av = std::ldexp(1.0 + static_cast<double>(mant) / kMantScale,
                        static_cast<int>(biased) - 127);
    }
    return sign ? -av : av;
}

}  // namespace gmap
