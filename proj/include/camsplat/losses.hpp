// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "camsplat/directions.hpp"
#include "camsplat/parallel.hpp"
#include "camsplat/render.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

struct LossBreakdown {
    double image = 0.0;
    double directional = 0.0;
    double boundary = 0.0;
    double total = 0.0;
};

struct ImageLossResult {
    double loss = 0.0;
    // Upstream gradient dL/dI per batch entry per direction; zero on masked
    // directions and on excluded point cameras.
    std::vector<std::vector<double>> upstream;
    std::size_t excluded = 0; // point cameras with no unmasked direction
};

// Masked MSE against each point camera's constant target, averaged over that
// camera's unmasked directions, then over the non-excluded cameras of the
// batch.
inline ImageLossResult image_loss(const std::vector<RenderedImage>& images,
                                  const std::vector<const PointCamera*>& batch,
                                  const std::vector<double>& targets) {
    if (images.size() != batch.size() || targets.size() != batch.size()) {
        throw std::logic_error("image_loss: batch size mismatch");
    }
    ImageLossResult result;
    result.upstream.resize(batch.size());
    std::size_t active = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        result.upstream[i].assign(images[i].intensities.size(), 0.0);
        if (batch[i]->unmasked_count() == 0) {
            ++result.excluded;
        } else {
            ++active;
        }
    }
    if (active == 0) return result;

    const double inv_n = 1.0 / static_cast<double>(active);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PointCamera& pc = *batch[i];
        const std::size_t k_unmasked = pc.unmasked_count();
        if (k_unmasked == 0) continue;
        if (pc.occlusion_mask.size() != images[i].intensities.size()) {
            throw std::logic_error("image_loss: mask/image length mismatch");
        }
        const double inv_k = 1.0 / static_cast<double>(k_unmasked);
        double acc = 0.0;
        for (std::size_t d = 0; d < images[i].intensities.size(); ++d) {
            if (!pc.occlusion_mask[d]) continue;
            const double diff = images[i].intensities[d] - targets[i];
            acc += diff * diff;
            result.upstream[i][d] = 2.0 * diff * inv_k * inv_n;
        }
        result.loss += acc * inv_k * inv_n;
    }
    return result;
}

// Achieved fraction of the target intensity, averaged over unmasked
// directions and clamped to [0, 1]. Fully masked point cameras count as 0.
inline double coverage(const RenderedImage& image, double target, const PointCamera& pc) {
    if (!(target > 0.0)) throw std::logic_error("coverage: target must be positive");
    const std::size_t k_unmasked = pc.unmasked_count();
    if (k_unmasked == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t d = 0; d < image.intensities.size(); ++d) {
        if (pc.occlusion_mask[d]) acc += image.intensities[d];
    }
    const double mean_ratio = acc / (static_cast<double>(k_unmasked) * target);
    return std::clamp(mean_ratio, 0.0, 1.0);
}

// (1 - c)^gamma, normalized to sum 1. All-covered batches turn the
// regularizer off (all weights zero) instead of dividing by zero.
inline std::vector<double> coverage_weights(const std::vector<double>& coverages, double gamma) {
    if (coverages.empty()) throw std::logic_error("coverage_weights: empty input");
    std::vector<double> weights(coverages.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < coverages.size(); ++i) {
        weights[i] = std::pow(1.0 - std::clamp(coverages[i], 0.0, 1.0), gamma);
        sum += weights[i];
    }
    if (sum > 0.0) {
        for (auto& w : weights) w /= sum;
    } else {
        for (auto& w : weights) w = 0.0;
    }
    return weights;
}

// Everything the directional regularizer reads apart from the splat axes,
// captured per (point camera, splat) pair: batch weights, pair directions
// v_ij, and the occlusion-mask bit at the direction sample nearest v_ij.
// Gradient-wise these are all treated as constants — the regularizer steers
// axes only — so finite-difference checks evaluate against a frozen state.
struct RegState {
    std::vector<double> weights;                // per batch entry
    std::vector<std::vector<Vec3>> pair_dir;    // [batch][splat], unit or zero
    std::vector<std::vector<std::uint8_t>> pair_mask; // [batch][splat]
};

inline RegState build_reg_state(const std::vector<CameraSplat>& splats,
                                const std::vector<const PointCamera*>& batch,
                                const std::vector<double>& coverages, double gamma,
                                const DirectionBasis& basis, double eps_depth) {
    RegState state;
    state.weights = coverage_weights(coverages, gamma);
    state.pair_dir.resize(batch.size());
    state.pair_mask.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        state.pair_dir[i].assign(splats.size(), Vec3{0.0, 0.0, 0.0});
        state.pair_mask[i].assign(splats.size(), 0);
        for (std::size_t j = 0; j < splats.size(); ++j) {
            const Vec3 rel = splats[j].center - batch[i]->position;
            const double depth = rel.norm();
            if (!(depth > eps_depth)) continue; // pair skipped, mask stays 0
            const Vec3 v = rel / depth;
            state.pair_dir[i][j] = v;
            const std::size_t nearest = nearest_direction(basis, UnitVec3::unchecked(v));
            state.pair_mask[i][j] = batch[i]->occlusion_mask[nearest];
        }
    }
    return state;
}

struct DirectionalRegResult {
    double loss = 0.0;
    std::vector<Vec3> axis_grads; // tangent vectors, zero for frozen splats
};

// lambda * sum_ij m_ij w_i cos(r_j, v_ij). Minimization turns axes away from
// v_ij, i.e. back toward under-covered point cameras. The axis gradient of
// the cosine is the projection of v_ij onto the tangent plane of r_j.
inline DirectionalRegResult directional_regularizer(const std::vector<CameraSplat>& splats,
                                                    const RegState& state, double lambda_reg) {
    DirectionalRegResult result;
    result.axis_grads.assign(splats.size(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < state.weights.size(); ++i) {
        const double w = state.weights[i];
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < splats.size(); ++j) {
            if (!state.pair_mask[i][j]) continue;
            const Vec3& v = state.pair_dir[i][j];
            const Vec3 r = splats[j].axis.vec();
            const double cos_rv = dot(r, v);
            result.loss += lambda_reg * w * cos_rv;
            if (!splats[j].frozen) {
                result.axis_grads[j] += (lambda_reg * w) * (v - cos_rv * r);
            }
        }
    }
    return result;
}

struct BoundaryRegResult {
    double loss = 0.0;
    std::vector<Vec3> center_grads; // zero for frozen splats
};

// One-sided quadratics on the distance from the scene center; frozen splats
// never pay it.
inline BoundaryRegResult boundary_regularizer(const std::vector<CameraSplat>& splats,
                                              const SceneBounds& bounds, double lambda_bound) {
    BoundaryRegResult result;
    result.center_grads.assign(splats.size(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t j = 0; j < splats.size(); ++j) {
        if (splats[j].frozen) continue;
        const Vec3 rel = splats[j].center - bounds.center;
        const double d = rel.norm();
        if (d > bounds.r_max) {
            const double over = d - bounds.r_max;
            result.loss += lambda_bound * over * over;
            result.center_grads[j] += (2.0 * lambda_bound * over / d) * rel;
        } else if (d < bounds.r_min) {
            const double under = bounds.r_min - d;
            result.loss += lambda_bound * under * under;
            if (d > 0.0) {
                result.center_grads[j] += (-2.0 * lambda_bound * under / d) * rel;
            }
        }
    }
    return result;
}

struct TotalLossResult {
    LossBreakdown breakdown;
    std::vector<Vec3> center_grads; // per splat, zero for frozen
    std::vector<Vec3> axis_grads;   // per splat, tangent to the axis
    std::vector<double> coverages;  // per batch entry
    std::size_t excluded = 0;
    std::size_t skipped_near = 0;
};

struct LossParams {
    SplatGlobals globals;
    double lambda_reg = 0.05;
    double lambda_bound = 10.0;
    double coverage_gamma = 2.0;
    double eps_depth = 0.0;
    SceneBounds bounds;
};

// Full objective and its gradients for one batch. Renders are independent
// per point camera and may run on several threads; all reductions over the
// batch run sequentially in batch order so results do not depend on the
// thread count.
inline TotalLossResult total_loss_and_grads(const std::vector<CameraSplat>& splats,
                                            const std::vector<const PointCamera*>& batch,
                                            const std::vector<double>& targets,
                                            const DirectionBasis& basis, const LossParams& params,
                                            int threads = 1) {
    if (batch.empty()) throw std::logic_error("total_loss_and_grads: empty batch");

    std::vector<RenderedImage> images(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        images[i] = render(*batch[i], splats, params.globals, basis, params.eps_depth);
    });

    TotalLossResult result;
    const ImageLossResult img = image_loss(images, batch, targets);
    result.breakdown.image = img.loss;
    result.excluded = img.excluded;

    result.coverages.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        result.coverages[i] = coverage(images[i], targets[i], *batch[i]);
        result.skipped_near += images[i].skipped_near;
    }

    const RegState reg_state = build_reg_state(splats, batch, result.coverages,
                                               params.coverage_gamma, basis, params.eps_depth);
    const DirectionalRegResult dir = directional_regularizer(splats, reg_state, params.lambda_reg);
    result.breakdown.directional = dir.loss;
    result.axis_grads = dir.axis_grads;

    const BoundaryRegResult bound = boundary_regularizer(splats, params.bounds,
                                                         params.lambda_bound);
    result.breakdown.boundary = bound.loss;

    std::vector<std::vector<Vec3>> per_pc_grads(batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) {
        per_pc_grads[i] = render_backward(images[i], img.upstream[i], *batch[i], splats,
                                          params.globals, basis);
    });

    result.center_grads.assign(splats.size(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < batch.size(); ++i) {
        for (std::size_t j = 0; j < splats.size(); ++j) {
            result.center_grads[j] += per_pc_grads[i][j];
        }
    }
    for (std::size_t j = 0; j < splats.size(); ++j) {
        if (splats[j].frozen) {
            result.center_grads[j] = Vec3{0.0, 0.0, 0.0};
            result.axis_grads[j] = Vec3{0.0, 0.0, 0.0};
        } else {
            result.center_grads[j] += bound.center_grads[j];
        }
    }
    result.breakdown.total = result.breakdown.image + result.breakdown.directional +
                             result.breakdown.boundary;
    return result;
}

// Objective value only, with the directional regularizer read from a frozen
// RegState. This is the function the analytic gradients differentiate: the
// regularizer's weights, pair directions, and mask bits are constants, so a
// finite-difference probe must hold them at the base point too.
inline LossBreakdown total_loss_value(const std::vector<CameraSplat>& splats,
                                      const std::vector<const PointCamera*>& batch,
                                      const std::vector<double>& targets,
                                      const DirectionBasis& basis, const LossParams& params,
                                      const RegState& frozen_state) {
    std::vector<RenderedImage> images(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        images[i] = render(*batch[i], splats, params.globals, basis, params.eps_depth);
    }
    LossBreakdown breakdown;
    breakdown.image = image_loss(images, batch, targets).loss;
    breakdown.directional = directional_regularizer(splats, frozen_state, params.lambda_reg).loss;
    breakdown.boundary = boundary_regularizer(splats, params.bounds, params.lambda_bound).loss;
    breakdown.total = breakdown.image + breakdown.directional + breakdown.boundary;
    return breakdown;
}

} // namespace camsplat
