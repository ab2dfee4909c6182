// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <vector>

#include "camsplat/adam.hpp"
#include "camsplat/losses.hpp"
#include "camsplat/rng.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Random splats around the proxy: centers uniform on the mid-boundary sphere,
// axes looking at the scene center with a tangential tilt of at most
// max_tilt radians. Frozen capture splats are appended unchanged.
inline std::vector<CameraSplat> initialize_splats(const SceneBounds& bounds, std::size_t n,
                                                  std::uint64_t seed,
                                                  const std::vector<CameraSplat>& fixed,
                                                  double max_tilt = 10.0 * kPi / 180.0) {
    bounds.validate();
    Rng rng(seed);
    const double radius = 0.5 * (bounds.r_min + bounds.r_max);
    std::vector<CameraSplat> splats;
    splats.reserve(n + fixed.size());
    for (std::size_t i = 0; i < n; ++i) {
        CameraSplat s;
        const UnitVec3 dir = rng.sphere_direction();
        s.center = bounds.center + radius * dir.vec();
        const UnitVec3 look_at = UnitVec3::unchecked(-dir.vec());
        const UnitVec3 tangent = rng.tangent_direction(look_at);
        const double tilt = rng.uniform(0.0, max_tilt);
        s.axis = rotate_toward(look_at, tangent, tilt);
        s.frozen = false;
        splats.push_back(s);
    }
    for (const auto& f : fixed) splats.push_back(f);
    return splats;
}

// Uniform sampling without replacement: each epoch is a seeded shuffle of all
// indices, consumed batch by batch (the last batch of an epoch may be short).
class EpochSampler {
public:
    EpochSampler(std::vector<std::size_t> indices, std::uint64_t seed)
        : order_(std::move(indices)), rng_(seed) {
        if (order_.empty()) throw std::logic_error("EpochSampler: no indices");
        reshuffle();
    }

    std::vector<std::size_t> next_batch(std::size_t batch_size) {
        if (cursor_ >= order_.size()) reshuffle();
        const std::size_t take = std::min(batch_size, order_.size() - cursor_);
        std::vector<std::size_t> batch(order_.begin() + cursor_, order_.begin() + cursor_ + take);
        cursor_ += take;
        return batch;
    }

private:
    void reshuffle() {
        for (std::size_t i = order_.size() - 1; i > 0; --i) {
            const std::size_t j = rng_.index(i + 1);
            std::swap(order_[i], order_[j]);
        }
        cursor_ = 0;
    }

    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    Rng rng_;
};

struct IterationLog {
    long iteration = 0; // 1-based: the row after the first step has iteration 1
    LossBreakdown losses;
    double mean_coverage = 0.0;
    double min_coverage = 0.0;
    double wall_ms = 0.0;
};

struct OptimizeParams {
    LossParams loss;
    int batch_size = 32;
    long iterations = 1000;
    double lr_position = 0.01; // absolute (already resolved from the scene)
    double lr_axis = 0.02;
    std::uint64_t seed = 0;
};

struct OptimizeResult {
    std::vector<CameraSplat> splats;
    std::vector<IterationLog> log;
    std::size_t excluded_point_cameras = 0; // fully masked, never batched
};

// Minibatched Adam over non-frozen splat centers and axes. The observer (if
// any) sees the splat state at iteration 0 and after every step; diagnostics
// and snapshot policies live with the caller. A non-finite total loss or
// gradient aborts with the failing iteration number.
inline OptimizeResult optimize(
    const std::vector<PointCamera>& pcs, std::vector<CameraSplat> splats,
    const std::vector<double>& targets, const DirectionBasis& basis,
    const OptimizeParams& params, int threads = 1,
    const std::function<void(long, const std::vector<CameraSplat>&)>& observer = {}) {
    if (pcs.empty()) throw std::logic_error("optimize: no point cameras");
    if (targets.size() != pcs.size()) throw std::logic_error("optimize: targets size mismatch");

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pcs.size(); ++i) {
        if (pcs[i].unmasked_count() > 0) eligible.push_back(i);
    }
    OptimizeResult result;
    result.excluded_point_cameras = pcs.size() - eligible.size();
    if (eligible.empty()) {
        throw ConfigError("optimize: every point camera is fully masked");
    }

    EpochSampler sampler(eligible, params.seed);
    SplatAdam adam(splats.size());
    if (observer) observer(0, splats);

    for (long iter = 0; iter < params.iterations; ++iter) {
        const auto t_start = std::chrono::steady_clock::now();
        const std::vector<std::size_t> batch_idx =
            sampler.next_batch(static_cast<std::size_t>(params.batch_size));

        std::vector<const PointCamera*> batch;
        std::vector<double> batch_targets;
        batch.reserve(batch_idx.size());
        batch_targets.reserve(batch_idx.size());
        for (const std::size_t idx : batch_idx) {
            batch.push_back(&pcs[idx]);
            batch_targets.push_back(targets[idx]);
        }

        const TotalLossResult loss =
            total_loss_and_grads(splats, batch, batch_targets, basis, params.loss, threads);
        if (!std::isfinite(loss.breakdown.total)) {
            throw NumericalError("non-finite total loss", iter);
        }
        try {
            adam.step(splats, loss.center_grads, loss.axis_grads, params.lr_position,
                      params.lr_axis);
        } catch (const NumericalError& e) {
            throw NumericalError(e.what(), iter);
        }

        IterationLog row;
        row.iteration = iter + 1;
        row.losses = loss.breakdown;
        double mean_cov = 0.0;
        double min_cov = 1.0;
        for (const double c : loss.coverages) {
            mean_cov += c;
            min_cov = std::min(min_cov, c);
        }
        row.mean_coverage = mean_cov / static_cast<double>(loss.coverages.size());
        row.min_coverage = min_cov;
        const auto t_end = std::chrono::steady_clock::now();
        row.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
        result.log.push_back(row);

        if (observer) observer(iter + 1, splats);
    }
    result.splats = std::move(splats);
    return result;
}

} // namespace camsplat
