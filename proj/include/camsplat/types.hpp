// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "camsplat/math.hpp"

namespace camsplat {

// An optimizable camera. `axis` points from the camera toward the scene it
// observes. Frozen splats come from the initial capture set and are rendered
// but never updated.
struct CameraSplat {
    Vec3 center;
    UnitVec3 axis;
    bool frozen = false;
};

// Parameters shared by all camera splats: the angular footprint sigma, the
// field-of-view cone angle and the constant opacity.
struct SplatGlobals {
    double angular_scale = 0.05; // radians
    double fov = 1.0;            // radians, full cone angle
    double opacity = 0.1;        // in (0, 1)

    void validate() const {
        if (!(angular_scale > 0.0 && angular_scale < kPi / 2.0)) {
            throw std::invalid_argument("SplatGlobals: angular_scale must be in (0, pi/2)");
        }
        if (!(fov > 0.0 && fov <= kPi)) {
            throw std::invalid_argument("SplatGlobals: fov must be in (0, pi]");
        }
        if (!(opacity > 0.0 && opacity < 1.0)) {
            throw std::invalid_argument("SplatGlobals: opacity must be in (0, 1)");
        }
    }
};

// One sample of the proxy geometry: an oriented disk with a view-dependency
// score. The radius is used by the occlusion tests (ray vs. sphere of this
// radius).
struct ProxyPoint {
    Vec3 position;
    UnitVec3 normal;
    double vds = 1.0;
    double radius = 0.0;
};

// An omnidirectional evaluation probe sitting just above the proxy surface.
// occlusion_mask holds one {0,1} flag per direction basis sample; directions
// below the local horizon or blocked by the proxy are 0.
struct PointCamera {
    Vec3 position;
    UnitVec3 normal;
    double vds = 1.0;
    std::vector<std::uint8_t> occlusion_mask;
    std::size_t proxy_index = 0;

    std::size_t unmasked_count() const {
        std::size_t n = 0;
        for (auto m : occlusion_mask) {
            n += m ? 1u : 0u;
        }
        return n;
    }
};

// Soft boundary for splat centers, derived from the proxy geometry.
struct SceneBounds {
    Vec3 center;
    double proxy_radius = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;

    void validate() const {
        if (!(r_min > 0.0 && r_min < r_max)) {
            throw std::invalid_argument("SceneBounds: need 0 < r_min < r_max");
        }
    }
};

inline SceneBounds make_scene_bounds(std::span<const ProxyPoint> proxy, double factor_min,
                                     double factor_max) {
    if (proxy.empty()) {
        throw std::invalid_argument("make_scene_bounds: empty proxy");
    }
    Vec3 centroid{};
    for (const auto& p : proxy) {
        centroid += p.position;
    }
    centroid = centroid / static_cast<double>(proxy.size());
    double radius = 0.0;
    for (const auto& p : proxy) {
        radius = std::max(radius, (p.position - centroid).norm());
    }
    if (radius <= 0.0) {
        throw std::invalid_argument("make_scene_bounds: degenerate proxy (zero radius)");
    }
    SceneBounds bounds{centroid, radius, radius * factor_min, radius * factor_max};
    bounds.validate();
    return bounds;
}

} // namespace camsplat
