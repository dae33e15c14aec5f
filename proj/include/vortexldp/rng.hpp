#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace vortexldp {

/// Philox4x32-10 block cipher (Salmon et al.) used as a counter-based RNG.
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += W0;
            key[1] += W1;
        }
        const uint64_t p0 = uint64_t(M0) * ctr[0];
        const uint64_t p1 = uint64_t(M1) * ctr[2];
        ctr = {uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], uint32_t(p1), uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], uint32_t(p0)};
    }
    return ctr;
}

/// Stateless generator: every draw is a pure function of (seed, step, index, stream),
/// so results do not depend on thread count or particle ordering.
class CounterRng {
public:
    explicit CounterRng(uint64_t seed) : key_{uint32_t(seed), uint32_t(seed >> 32)} {}

    std::array<uint32_t, 4> block(uint64_t step, uint32_t index, uint32_t stream = 0) const {
        return philox4x32({uint32_t(step), uint32_t(step >> 32), index, stream}, key_);
    }

    /// Two uniforms in the open interval (0, 1) with 53-bit resolution.
    std::array<double, 2> uniform2(uint64_t step, uint32_t index, uint32_t stream = 0) const {
        const auto b = block(step, index, stream);
        return {to_unit((uint64_t(b[0]) << 32) | b[1]), to_unit((uint64_t(b[2]) << 32) | b[3])};
    }

    /// Two independent standard normals (Box–Muller).
    std::array<double, 2> normal2(uint64_t step, uint32_t index, uint32_t stream = 0) const {
        const auto u = uniform2(step, index, stream);
        const double rad = std::sqrt(-2.0 * std::log(u[0]));
        const double ang = 2.0 * std::numbers::pi * u[1];
        return {rad * std::cos(ang), rad * std::sin(ang)};
    }

private:
    static double to_unit(uint64_t v) { return (double(v >> 11) + 0.5) * 0x1.0p-53; }
    std::array<uint32_t, 2> key_;
};

}  // namespace vortexldp
