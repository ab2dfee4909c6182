// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "camsplat/config.hpp"
#include "camsplat/directions.hpp"
#include "camsplat/parallel.hpp"
#include "camsplat/rng.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Farthest-point sampling. The first pick is uniform under the seed; every
// later pick maximizes the distance to the already-chosen set, ties going to
// the lowest index.
inline std::vector<std::size_t> farthest_point_sample(const std::vector<ProxyPoint>& proxy,
                                                      std::size_t n, std::uint64_t seed) {
    if (n < 1 || n > proxy.size()) {
        throw std::invalid_argument("farthest_point_sample: n must be in [1, #points]");
    }
    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(n);
    std::vector<double> min_d2(proxy.size(), std::numeric_limits<double>::infinity());

    std::size_t current = rng.index(proxy.size());
    chosen.push_back(current);
    while (chosen.size() < n) {
        std::size_t best = 0;
        double best_d2 = -1.0;
        for (std::size_t i = 0; i < proxy.size(); ++i) {
            const double d2 = (proxy[i].position - proxy[current].position).norm_squared();
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
        chosen.push_back(current);
    }
    return chosen;
}

inline double vdsf(double vds, const std::array<double, 4>& coeffs,
                   const std::array<double, 2>& clamp_range) {
    const double poly = coeffs[0] + vds * (coeffs[1] + vds * (coeffs[2] + vds * coeffs[3]));
    return std::clamp(poly, clamp_range[0], clamp_range[1]);
}

// Constant target intensity of one point camera's ground-truth image.
inline double ground_truth(const PointCamera& pc, const SplatGlobals& globals,
                           const OptimizationConfig& cfg) {
    return vdsf(pc.vds, cfg.vdsf_coeffs, cfg.vdsf_clamp) * globals.opacity;
}

// Builds omnidirectional probes: each sits eps_normal above its proxy point
// and masks out the below-surface hemisphere plus every direction whose ray
// hits another proxy disk beyond eps_self. Occlusion is any tester with
// occluded(origin, dir, eps_self); mask construction is independent per
// point camera.
template <typename Occlusion>
std::vector<PointCamera> build_point_cameras(const std::vector<ProxyPoint>& proxy,
                                             const std::vector<std::size_t>& indices,
                                             const DirectionBasis& basis, double eps_normal,
                                             double eps_self, const Occlusion& occ,
                                             int threads = 1) {
    for (const std::size_t idx : indices) {
        if (idx >= proxy.size()) {
            throw std::out_of_range("build_point_cameras: proxy index out of range");
        }
    }
    std::vector<PointCamera> cams(indices.size());
    parallel_for(indices.size(), threads, [&](std::size_t i) {
        const ProxyPoint& pt = proxy[indices[i]];
        PointCamera& pc = cams[i];
        pc.position = pt.position + eps_normal * pt.normal.vec();
        pc.normal = pt.normal;
        pc.vds = pt.vds;
        pc.proxy_index = indices[i];
        pc.occlusion_mask.resize(basis.size());
        for (std::size_t d = 0; d < basis.size(); ++d) {
            const UnitVec3& dir = basis.directions[d];
            if (dot(dir.vec(), pt.normal.vec()) <= 0.0) {
                pc.occlusion_mask[d] = 0;
            } else {
                pc.occlusion_mask[d] = occ.occluded(pc.position, dir, eps_self) ? 0 : 1;
            }
        }
    });
    return cams;
}

} // namespace camsplat
