// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "camsplat/math.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Entry distance of a ray into a sphere, or a negative sentinel when the ray
// misses. A proxy disk occludes iff the entry distance exceeds eps_self, so
// rays starting inside a sphere (entry < 0) never see it as an occluder.
namespace detail {

constexpr double kRayMiss = -std::numeric_limits<double>::infinity();

inline double ray_sphere_entry(const Vec3& origin, const UnitVec3& dir, const Vec3& center,
                               double radius) {
    const Vec3 rel = center - origin;
    const double along = dot(rel, dir.vec());
    const double d2 = rel.norm_squared() - along * along;
    const double r2 = radius * radius;
    if (d2 > r2) return kRayMiss;
    return along - std::sqrt(r2 - d2);
}

inline bool sphere_occludes(const Vec3& origin, const UnitVec3& dir, const ProxyPoint& pt,
                            double eps_self) {
    const double entry = ray_sphere_entry(origin, dir, pt.position, pt.radius);
    return entry > eps_self;
}

} // namespace detail

class BruteForceOcclusion {
public:
    explicit BruteForceOcclusion(std::vector<ProxyPoint> points) : points_(std::move(points)) {}

    bool occluded(const Vec3& origin, const UnitVec3& dir, double eps_self) const {
        for (const auto& pt : points_) {
            if (detail::sphere_occludes(origin, dir, pt, eps_self)) return true;
        }
        return false;
    }

    const std::vector<ProxyPoint>& points() const { return points_; }

private:
    std::vector<ProxyPoint> points_;
};

// Uniform grid over the proxy's bounding box. Each sphere is registered in
// every cell its axis-aligned bounding box overlaps (conservative), and a ray
// walks cells with a 3D DDA. Any sphere the ray hits has its hit point inside
// some visited cell, and conservative registration puts the sphere in that
// cell's list, so this answers exactly like the brute-force tester.
class GridOcclusion {
public:
    explicit GridOcclusion(std::vector<ProxyPoint> points) : points_(std::move(points)) {
        build();
    }

    bool occluded(const Vec3& origin, const UnitVec3& dir, double eps_self) const {
        if (points_.empty()) return false;

        // Clip the ray against the grid's box; everything outside is empty.
        double t_enter = 0.0;
        double t_exit = std::numeric_limits<double>::infinity();
        const double o[3] = {origin.x, origin.y, origin.z};
        const double d[3] = {dir.vec().x, dir.vec().y, dir.vec().z};
        for (int a = 0; a < 3; ++a) {
            if (d[a] == 0.0) {
                if (o[a] < lo_[a] || o[a] > hi_[a]) return false;
            } else {
                double t0 = (lo_[a] - o[a]) / d[a];
                double t1 = (hi_[a] - o[a]) / d[a];
                if (t0 > t1) std::swap(t0, t1);
                t_enter = std::max(t_enter, t0);
                t_exit = std::min(t_exit, t1);
            }
        }
        if (t_enter > t_exit) return false;

        const Vec3 start = origin + t_enter * dir.vec();
        int cell[3];
        for (int a = 0; a < 3; ++a) {
            const double s = a == 0 ? start.x : (a == 1 ? start.y : start.z);
            cell[a] = std::clamp(static_cast<int>(std::floor((s - lo_[a]) / cell_size_[a])), 0,
                                 dims_[a] - 1);
        }
        int step[3];
        double t_next[3], t_delta[3];
        for (int a = 0; a < 3; ++a) {
            if (d[a] > 0.0) {
                step[a] = 1;
                t_next[a] = t_enter + (lo_[a] + (cell[a] + 1) * cell_size_[a] -
                                       (a == 0 ? start.x : (a == 1 ? start.y : start.z))) / d[a];
                t_delta[a] = cell_size_[a] / d[a];
            } else if (d[a] < 0.0) {
                step[a] = -1;
                t_next[a] = t_enter + (lo_[a] + cell[a] * cell_size_[a] -
                                       (a == 0 ? start.x : (a == 1 ? start.y : start.z))) / d[a];
                t_delta[a] = -cell_size_[a] / d[a];
            } else {
                step[a] = 0;
                t_next[a] = std::numeric_limits<double>::infinity();
                t_delta[a] = std::numeric_limits<double>::infinity();
            }
        }

        while (true) {
            for (const std::size_t idx : cells_[flatten(cell[0], cell[1], cell[2])]) {
                if (detail::sphere_occludes(origin, dir, points_[idx], eps_self)) return true;
            }
            const int a = (t_next[0] <= t_next[1] && t_next[0] <= t_next[2]) ? 0
                          : (t_next[1] <= t_next[2] ? 1 : 2);
            cell[a] += step[a];
            if (cell[a] < 0 || cell[a] >= dims_[a]) return false;
            t_next[a] += t_delta[a];
        }
    }

    const std::vector<ProxyPoint>& points() const { return points_; }

private:
    void build() {
        lo_[0] = lo_[1] = lo_[2] = std::numeric_limits<double>::infinity();
        hi_[0] = hi_[1] = hi_[2] = -std::numeric_limits<double>::infinity();
        for (const auto& pt : points_) {
            const double p[3] = {pt.position.x, pt.position.y, pt.position.z};
            for (int a = 0; a < 3; ++a) {
                lo_[a] = std::min(lo_[a], p[a] - pt.radius);
                hi_[a] = std::max(hi_[a], p[a] + pt.radius);
            }
        }
        if (points_.empty()) {
            lo_[0] = lo_[1] = lo_[2] = 0.0;
            hi_[0] = hi_[1] = hi_[2] = 1.0;
        }
        double max_extent = 0.0;
        for (int a = 0; a < 3; ++a) max_extent = std::max(max_extent, hi_[a] - lo_[a]);
        const double pad = 1e-9 * std::max(max_extent, 1.0);
        const int dim = std::clamp(
            static_cast<int>(std::ceil(std::cbrt(static_cast<double>(points_.size())))), 1, 64);
        for (int a = 0; a < 3; ++a) {
            lo_[a] -= pad;
            hi_[a] += pad;
            dims_[a] = dim;
            cell_size_[a] = (hi_[a] - lo_[a]) / dim;
            if (!(cell_size_[a] > 0.0)) { // flat axis: one padded slab
                cell_size_[a] = 2.0 * pad + 1e-12;
                hi_[a] = lo_[a] + dims_[a] * cell_size_[a];
            }
        }
        cells_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], {});
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& pt = points_[i];
            int lo_cell[3], hi_cell[3];
            const double p[3] = {pt.position.x, pt.position.y, pt.position.z};
            for (int a = 0; a < 3; ++a) {
                lo_cell[a] = std::clamp(
                    static_cast<int>(std::floor((p[a] - pt.radius - lo_[a]) / cell_size_[a])), 0,
                    dims_[a] - 1);
                hi_cell[a] = std::clamp(
                    static_cast<int>(std::floor((p[a] + pt.radius - lo_[a]) / cell_size_[a])), 0,
                    dims_[a] - 1);
            }
            for (int x = lo_cell[0]; x <= hi_cell[0]; ++x) {
                for (int y = lo_cell[1]; y <= hi_cell[1]; ++y) {
                    for (int z = lo_cell[2]; z <= hi_cell[2]; ++z) {
                        cells_[flatten(x, y, z)].push_back(i);
                    }
                }
            }
        }
    }

    std::size_t flatten(int x, int y, int z) const {
        return (static_cast<std::size_t>(x) * dims_[1] + y) * dims_[2] + z;
    }

    std::vector<ProxyPoint> points_;
    double lo_[3]{}, hi_[3]{};
    double cell_size_[3]{};
    int dims_[3]{1, 1, 1};
    std::vector<std::vector<std::size_t>> cells_;
};

} // namespace camsplat
