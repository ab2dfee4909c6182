// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "camsplat/errors.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Bias-corrected Adam over splat centers and axes, one learning rate per
// parameter group. Axes live on the unit sphere: they take a Euclidean step
// and are renormalized (projected update). Frozen splats are never touched
// and keep zero moments.
class SplatAdam {
public:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    explicit SplatAdam(std::size_t n_splats)
        : center_m_(n_splats), center_v_(n_splats), axis_m_(n_splats), axis_v_(n_splats) {}

    long step_count() const { return step_; }

    void step(std::vector<CameraSplat>& splats, const std::vector<Vec3>& center_grads,
              const std::vector<Vec3>& axis_grads, double lr_position, double lr_axis) {
        if (splats.size() != center_m_.size() || center_grads.size() != center_m_.size() ||
            axis_grads.size() != center_m_.size()) {
            throw std::logic_error("SplatAdam: parameter/gradient shape mismatch");
        }
        ++step_;
        const double corr1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_));
        const double corr2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_));

        for (std::size_t j = 0; j < splats.size(); ++j) {
            if (splats[j].frozen) continue;
            if (!center_grads[j].is_finite() || !axis_grads[j].is_finite()) {
                throw NumericalError("non-finite gradient for splat " + std::to_string(j), step_);
            }
            splats[j].center += update(center_m_[j], center_v_[j], center_grads[j], lr_position,
                                       corr1, corr2);
            const Vec3 stepped = splats[j].axis.vec() +
                                 update(axis_m_[j], axis_v_[j], axis_grads[j], lr_axis, corr1,
                                        corr2);
            splats[j].axis = UnitVec3(stepped);
        }
    }

private:
    static Vec3 update(Vec3& m, Vec3& v, const Vec3& g, double lr, double corr1, double corr2) {
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * Vec3{g.x * g.x, g.y * g.y, g.z * g.z};
        const Vec3 m_hat = m / corr1;
        const Vec3 v_hat = v / corr2;
        return Vec3{-lr * m_hat.x / (std::sqrt(v_hat.x) + kEps),
                    -lr * m_hat.y / (std::sqrt(v_hat.y) + kEps),
                    -lr * m_hat.z / (std::sqrt(v_hat.z) + kEps)};
    }

    long step_ = 0;
    std::vector<Vec3> center_m_, center_v_;
    std::vector<Vec3> axis_m_, axis_v_;
};

} // namespace camsplat
