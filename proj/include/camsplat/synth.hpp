// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "camsplat/directions.hpp"
#include "camsplat/errors.hpp"
#include "camsplat/ply.hpp"
#include "camsplat/rng.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

struct SyntheticScene {
    std::string kind;
    std::vector<ProxyPoint> proxy;
    std::vector<std::string> labels; // one group label per proxy point
};

namespace detail {

inline void assign_default_radii(std::vector<ProxyPoint>& pts) {
    const double r = default_radius_from_spacing(pts, "<synthetic scene>");
    for (auto& pt : pts) pt.radius = r;
}

} // namespace detail

// Sphere split into a high-VDS upper hemisphere (z >= 0) and a low-VDS lower
// one. Points are Fibonacci-distributed; the seed spins them around the z
// axis, which changes the layout without moving any point across the split.
inline SyntheticScene make_vds_sphere(int n_points, double radius, double vds_high,
                                      double vds_low, std::uint64_t seed) {
    if (n_points < 8) throw std::invalid_argument("make_vds_sphere: n_points must be >= 8");
    if (!(vds_high > vds_low && vds_low >= 0.0)) {
        throw std::invalid_argument("make_vds_sphere: need vds_high > vds_low >= 0");
    }
    if (!(radius > 0.0)) throw std::invalid_argument("make_vds_sphere: radius must be > 0");

    Rng rng(seed);
    const double spin = rng.uniform(0.0, kTwoPi);
    const DirectionBasis basis = fibonacci_directions(static_cast<std::size_t>(n_points));

    SyntheticScene scene;
    scene.kind = "vds-sphere";
    scene.proxy.reserve(n_points);
    scene.labels.reserve(n_points);
    for (const UnitVec3& u : basis.directions) {
        const Vec3 v = u.vec();
        const Vec3 spun{v.x * std::cos(spin) - v.y * std::sin(spin),
                        v.x * std::sin(spin) + v.y * std::cos(spin), v.z};
        ProxyPoint pt;
        pt.normal = UnitVec3::unchecked(spun);
        pt.position = radius * spun;
        const bool high = spun.z >= 0.0;
        pt.vds = high ? vds_high : vds_low;
        scene.proxy.push_back(pt);
        scene.labels.push_back(high ? "high" : "low");
    }
    detail::assign_default_radii(scene.proxy);
    return scene;
}

// Regular grid on z = 0 with +Z normals, spanning [-extent/2, extent/2]^2.
// The layout is already deterministic, so the seed is accepted for interface
// symmetry but unused.
inline SyntheticScene make_plane(int n_points, double extent, double vds,
                                 std::uint64_t /*seed*/ = 0) {
    if (n_points < 4) throw std::invalid_argument("make_plane: n_points must be >= 4");
    if (!(extent > 0.0)) throw std::invalid_argument("make_plane: extent must be > 0");

    const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_points))));
    SyntheticScene scene;
    scene.kind = "plane";
    for (int row = 0; row < g && static_cast<int>(scene.proxy.size()) < n_points; ++row) {
        for (int col = 0; col < g && static_cast<int>(scene.proxy.size()) < n_points; ++col) {
            ProxyPoint pt;
            const double fx = g > 1 ? static_cast<double>(col) / (g - 1) : 0.5;
            const double fy = g > 1 ? static_cast<double>(row) / (g - 1) : 0.5;
            pt.position = Vec3{(fx - 0.5) * extent, (fy - 0.5) * extent, 0.0};
            pt.normal = UnitVec3::unchecked(Vec3{0.0, 0.0, 1.0});
            pt.vds = vds;
            scene.proxy.push_back(pt);
            scene.labels.push_back("plane");
        }
    }
    detail::assign_default_radii(scene.proxy);
    return scene;
}

// Two finite planes looking at each other: z = 0 with +Z normals and z = gap
// with -Z normals. n_points is per plane; extent is fixed at 1.
inline SyntheticScene make_facing_planes(double gap, int n_points, double vds,
                                         std::uint64_t seed = 0) {
    if (!(gap > 0.0)) throw std::invalid_argument("make_facing_planes: gap must be > 0");
    const SyntheticScene lower = make_plane(n_points, 1.0, vds, seed);

    SyntheticScene scene;
    scene.kind = "facing-planes";
    for (const auto& pt : lower.proxy) {
        scene.proxy.push_back(pt);
        scene.labels.push_back("lower");
    }
    for (const auto& pt : lower.proxy) {
        ProxyPoint up = pt;
        up.position.z = gap;
        up.normal = UnitVec3::unchecked(Vec3{0.0, 0.0, -1.0});
        scene.proxy.push_back(up);
        scene.labels.push_back("upper");
    }
    detail::assign_default_radii(scene.proxy);
    return scene;
}

inline void write_labels_csv(const std::string& path, const std::vector<std::string>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "index,group\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << i << "," << labels[i] << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<std::string> load_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty labels file");
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError(path + ": malformed labels row: " + line);
        labels.push_back(line.substr(comma + 1));
    }
    return labels;
}

// proxy.ply + labels.csv inside an existing directory.
inline void write_scene(const SyntheticScene& scene, const std::string& dir) {
    write_proxy_ply(dir + "/proxy.ply", scene.proxy, /*binary=*/false);
    write_labels_csv(dir + "/labels.csv", scene.labels);
}

} // namespace camsplat
