// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstdint>
#include <random>

#include "camsplat/math.hpp"

namespace camsplat {

// Deterministic random source. The engine (mt19937_64) has a standardized
// output sequence; the distribution helpers below are hand-rolled because the
// std ones are implementation-defined, which would break run reproducibility
// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform index in [0, n). Modulo bias is negligible for the small n used
    // here (n << 2^64).
    std::size_t index(std::size_t n) {
        assert(n > 0);
        return static_cast<std::size_t>(engine_() % n);
    }

    // Uniformly distributed direction on the unit sphere.
    UnitVec3 sphere_direction() {
        const double z = uniform(-1.0, 1.0);
        const double phi = uniform(0.0, kTwoPi);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return UnitVec3::unchecked({r * std::cos(phi), r * std::sin(phi), z});
    }

    // A unit vector orthogonal to `axis`, uniform over the tangent circle.
    UnitVec3 tangent_direction(const UnitVec3& axis) {
        const Vec3 a = axis.vec();
        const Vec3 helper = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const Vec3 t1_raw = cross(a, helper);
        const Vec3 t1 = t1_raw / t1_raw.norm();
        const Vec3 t2 = cross(a, t1);
        const double phi = uniform(0.0, kTwoPi);
        return UnitVec3::unchecked(t1 * std::cos(phi) + t2 * std::sin(phi));
    }

private:
    std::mt19937_64 engine_;
};

// Rotates `axis` toward the tangent direction `t` by `angle` radians.
// Both inputs must be orthogonal unit vectors.
inline UnitVec3 rotate_toward(const UnitVec3& axis, const UnitVec3& t, double angle) {
    return UnitVec3(axis.vec() * std::cos(angle) + t.vec() * std::sin(angle));
}

} // namespace camsplat
