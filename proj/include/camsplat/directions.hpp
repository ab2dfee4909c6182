// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "camsplat/math.hpp"

namespace camsplat {

// Shared set of unit direction samples ("pixels") covering the full sphere.
// Each sample owns an equal solid angle of 4*pi/K steradians.
struct DirectionBasis {
    std::vector<UnitVec3> directions;
    double solid_angle_per_sample = 0.0;

    std::size_t size() const { return directions.size(); }
};

// Spherical Fibonacci lattice: k near-uniform, equal-area samples. The
// z offset of half a step keeps samples away from the poles.
inline DirectionBasis fibonacci_directions(std::size_t k) {
    if (k < 4) {
        throw std::invalid_argument("fibonacci_directions: k must be at least 4");
    }
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    DirectionBasis basis;
    basis.directions.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(k);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        basis.directions.push_back(UnitVec3::unchecked({r * std::cos(phi), r * std::sin(phi), z}));
    }
    basis.solid_angle_per_sample = 4.0 * kPi / static_cast<double>(k);
    return basis;
}

// Index of the basis sample closest in angle to `v`; ties resolve to the
// lowest index (strict improvement required to switch).
inline std::size_t nearest_direction(const DirectionBasis& basis, const UnitVec3& v) {
    std::size_t best = 0;
    double best_dot = dot(basis.directions[0], v);
    for (std::size_t i = 1; i < basis.size(); ++i) {
        const double d = dot(basis.directions[i], v);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

} // namespace camsplat
