// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "camsplat/directions.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// 1 iff the point camera lies inside the splat's field-of-view cone; the
// boundary angle exactly theta/2 counts as visible.
inline bool visibility(const CameraSplat& splat, const Vec3& pc_position,
                       const SplatGlobals& globals) {
    const Vec3 to_pc = pc_position - splat.center;
    const double len = to_pc.norm();
    if (!(len > 0.0)) return false;
    return dot(splat.axis.vec(), to_pc) >= std::cos(0.5 * globals.fov) * len;
}

// Isotropic angular Gaussian footprint with a hard cutoff at 3s. The cutoff
// test compares cosines so callers never pay an acos for the rejected bulk.
inline double footprint(const UnitVec3& direction, const CameraSplat& splat,
                        const Vec3& pc_position, const SplatGlobals& globals) {
    const Vec3 rel = splat.center - pc_position;
    const double depth = rel.norm();
    const UnitVec3 u = UnitVec3::unchecked(rel / depth);
    const double c = std::clamp(dot(u.vec(), direction.vec()), -1.0, 1.0);
    if (c < std::cos(3.0 * globals.angular_scale)) return 0.0;
    const double delta = std::acos(c);
    return std::exp(-delta * delta / (2.0 * globals.angular_scale * globals.angular_scale));
}

// One splat's pose relative to one point camera, shared across directions.
struct SplatFrame {
    bool visible = false; // inside FoV and beyond eps_depth
    double depth = 0.0;
    UnitVec3 u; // direction from the point camera to the splat center
};

// One splat's contribution to one direction sample, kept for the backward
// pass. delta <= 3s is guaranteed by construction.
struct DirContribution {
    std::uint32_t splat = 0;
    double delta = 0.0;
    double g = 0.0;
    double a = 0.0;
};

struct RenderedImage {
    std::vector<double> intensities;                       // per direction, in [0, 1)
    std::vector<std::vector<DirContribution>> contributors; // per direction
    std::vector<SplatFrame> frames;                        // per splat
    std::size_t skipped_near = 0; // splats closer than eps_depth
};

constexpr double kAlphaClamp = 0.99;

// Accumulated opacity per direction sample: I = 1 - prod_j (1 - a_j) over
// splats that pass the FoV gate and the footprint cutoff. The product form
// equals front-to-back alpha compositing of unit colors in any order; to make
// the float result exactly permutation invariant, contributors are multiplied
// in a canonical order (descending alpha).
inline RenderedImage render(const PointCamera& pc, const std::vector<CameraSplat>& splats,
                            const SplatGlobals& globals, const DirectionBasis& basis,
                            double eps_depth) {
    RenderedImage image;
    image.intensities.assign(basis.size(), 0.0);
    image.contributors.resize(basis.size());
    image.frames.resize(splats.size());

    const double cos_half_fov = std::cos(0.5 * globals.fov);
    const double cos_cutoff = std::cos(3.0 * globals.angular_scale);
    const double inv_2s2 = 1.0 / (2.0 * globals.angular_scale * globals.angular_scale);

    for (std::size_t j = 0; j < splats.size(); ++j) {
        SplatFrame& frame = image.frames[j];
        const Vec3 rel = splats[j].center - pc.position;
        frame.depth = rel.norm();
        if (!(frame.depth > eps_depth)) {
            ++image.skipped_near;
            continue;
        }
        frame.u = UnitVec3::unchecked(rel / frame.depth);
        // FoV gate: angle(axis, pc - center) <= fov/2, i.e. axis . (-u).
        frame.visible = dot(splats[j].axis.vec(), -frame.u.vec()) >= cos_half_fov;
    }

    for (std::size_t d = 0; d < basis.size(); ++d) {
        auto& contribs = image.contributors[d];
        const Vec3 omega = basis.directions[d].vec();
        for (std::size_t j = 0; j < splats.size(); ++j) {
            const SplatFrame& frame = image.frames[j];
            if (!frame.visible) continue;
            const double c = std::clamp(dot(frame.u.vec(), omega), -1.0, 1.0);
            if (c < cos_cutoff) continue;
            DirContribution dc;
            dc.splat = static_cast<std::uint32_t>(j);
            dc.delta = std::acos(c);
            dc.g = std::exp(-dc.delta * dc.delta * inv_2s2);
            dc.a = std::min(globals.opacity * dc.g, kAlphaClamp);
            contribs.push_back(dc);
        }
        std::sort(contribs.begin(), contribs.end(), [](const DirContribution& lhs,
                                                       const DirContribution& rhs) {
            return lhs.a > rhs.a;
        });
        double transmittance = 1.0;
        for (const auto& dc : contribs) transmittance *= 1.0 - dc.a;
        image.intensities[d] = 1.0 - transmittance;
    }
    return image;
}

namespace detail {

// delta / sin(delta), stable at the Gaussian peak.
inline double sinc_ratio(double delta) {
    if (delta < 1e-6) return 1.0 + delta * delta / 6.0;
    return delta / std::sin(delta);
}

} // namespace detail

// Gradients of the rendered intensities w.r.t. splat centers, weighted by the
// per-direction upstream values. The FoV gate, the footprint cutoff, and the
// alpha clamp are constants of the forward pass: a clamped contribution has
// zero local derivative and the masks contribute no gradient at all. Axes
// receive no gradient here by design — orientation is steered exclusively by
// the directional regularizer.
inline std::vector<Vec3> render_backward(const RenderedImage& image,
                                         const std::vector<double>& upstream,
                                         const PointCamera& pc,
                                         const std::vector<CameraSplat>& splats,
                                         const SplatGlobals& globals,
                                         const DirectionBasis& basis) {
    if (image.frames.size() != splats.size() || image.intensities.size() != basis.size() ||
        upstream.size() != basis.size()) {
        throw std::logic_error("render_backward: image does not match splats/basis");
    }
    (void)pc;
    std::vector<Vec3> grads(splats.size(), Vec3{0.0, 0.0, 0.0});
    const double inv_s2 = 1.0 / (globals.angular_scale * globals.angular_scale);

    for (std::size_t d = 0; d < basis.size(); ++d) {
        if (upstream[d] == 0.0) continue;
        const Vec3 omega = basis.directions[d].vec();
        const double one_minus_i = 1.0 - image.intensities[d];
        for (const auto& dc : image.contributors[d]) {
            if (dc.a >= kAlphaClamp) continue; // clamp active: da/dG = 0
            const SplatFrame& frame = image.frames[dc.splat];
            // dI/da_j = prod_{k != j} (1 - a_k); safe since a <= 0.99.
            const double di_da = one_minus_i / (1.0 - dc.a);
            // da/dmu = (alpha G delta) / (s^2 rho sin(delta)) * (omega - cos(delta) u)
            const double coeff = globals.opacity * dc.g * detail::sinc_ratio(dc.delta) * inv_s2 /
                                 frame.depth;
            const Vec3 tangential = omega - std::cos(dc.delta) * frame.u.vec();
            grads[dc.splat] += (upstream[d] * di_da * coeff) * tangential;
        }
    }
    return grads;
}

} // namespace camsplat
