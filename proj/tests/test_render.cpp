// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "camsplat/render.hpp"
#include "camsplat/rng.hpp"

using namespace camsplat;

namespace {

CameraSplat splat_at(const Vec3& center, const Vec3& axis, bool frozen = false) {
    CameraSplat s;
    s.center = center;
    s.axis = UnitVec3(axis);
    s.frozen = frozen;
    return s;
}

PointCamera camera_at(const Vec3& position) {
    PointCamera pc;
    pc.position = position;
    pc.normal = UnitVec3::unchecked({0, 0, 1});
    return pc;
}

DirectionBasis single_direction(const Vec3& dir) {
    DirectionBasis basis;
    basis.directions.push_back(UnitVec3(dir));
    basis.solid_angle_per_sample = 4.0 * kPi;
    return basis;
}

SplatGlobals globals_with(double s, double fov, double opacity) {
    SplatGlobals g;
    g.angular_scale = s;
    g.fov = fov;
    g.opacity = opacity;
    return g;
}

// Independent compositing oracle: gather hits, sort by depth, accumulate
// front-to-back I = sum T_j a_j. The renderer's product form must agree.
double depth_sorted_intensity(const PointCamera& pc, const std::vector<CameraSplat>& splats,
                              const SplatGlobals& g, const UnitVec3& omega, double eps_depth) {
    struct Hit {
        double depth;
        double a;
    };
    std::vector<Hit> hits;
    for (const auto& s : splats) {
        const Vec3 rel = s.center - pc.position;
        const double depth = rel.norm();
        if (!(depth > eps_depth)) continue;
        const Vec3 u = rel / depth;
        if (dot(s.axis.vec(), -u) < std::cos(0.5 * g.fov)) continue;
        const double c = std::clamp(dot(u, omega.vec()), -1.0, 1.0);
        if (c < std::cos(3.0 * g.angular_scale)) continue;
        const double delta = std::acos(c);
        const double gauss = std::exp(-delta * delta / (2.0 * g.angular_scale * g.angular_scale));
        hits.push_back({depth, std::min(g.opacity * gauss, kAlphaClamp)});
    }
    std::sort(hits.begin(), hits.end(),
              [](const Hit& l, const Hit& r) { return l.depth < r.depth; });
    double transmittance = 1.0;
    double intensity = 0.0;
    for (const auto& h : hits) {
        intensity += transmittance * h.a;
        transmittance *= 1.0 - h.a;
    }
    return intensity;
}

} // namespace

TEST_CASE("visibility honors the field-of-view cone") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.1);
    const CameraSplat s = splat_at({0, 0, 0}, {0, 0, 1});
    CHECK(visibility(s, {0, 0, 5}, g));        // dead ahead
    CHECK_FALSE(visibility(s, {5, 0, 0}, g));  // 90 degrees off
    CHECK_FALSE(visibility(s, {0, 0, -5}, g)); // behind
    CHECK_FALSE(visibility(s, {0, 0, 0}, g));  // coincident
}

TEST_CASE("visibility includes the exact cone boundary") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.1);
    const UnitVec3 z = UnitVec3::unchecked({0, 0, 1});
    const UnitVec3 x = UnitVec3::unchecked({1, 0, 0});
    // camera at unit distance straight up; axis tilted by exactly fov/2 gives
    // dot(axis, to_pc) the same double as cos(fov/2) * len, so >= must pass
    CameraSplat s = splat_at({0, 0, 0}, {0, 0, 1});
    s.axis = rotate_toward(z, x, 0.5 * g.fov);
    CHECK(visibility(s, {0, 0, 1}, g));
    s.axis = rotate_toward(z, x, 0.5 * g.fov + 1e-9);
    CHECK_FALSE(visibility(s, {0, 0, 1}, g));
}

TEST_CASE("footprint peaks on-axis and dies at the cutoff") {
    const SplatGlobals g = globals_with(0.05, kPi, 0.1);
    const CameraSplat s = splat_at({0, 0, 2}, {0, 0, -1});
    const Vec3 origin{0, 0, 0};
    const UnitVec3 z = UnitVec3::unchecked({0, 0, 1});
    const UnitVec3 x = UnitVec3::unchecked({1, 0, 0});

    CHECK(footprint(z, s, origin, g) == 1.0); // delta = 0 exactly
    CHECK(footprint(rotate_toward(z, x, g.angular_scale), s, origin, g) ==
          Catch::Approx(std::exp(-0.5)).epsilon(1e-9));
    CHECK(footprint(rotate_toward(z, x, 2.0 * g.angular_scale), s, origin, g) ==
          Catch::Approx(std::exp(-2.0)).epsilon(1e-9));
    // boundary at exactly 3s still contributes; past it the hard cutoff wins
    CHECK(footprint(rotate_toward(z, x, 3.0 * g.angular_scale), s, origin, g) ==
          Catch::Approx(std::exp(-4.5)).epsilon(1e-9));
    CHECK(footprint(rotate_toward(z, x, 3.5 * g.angular_scale), s, origin, g) == 0.0);
    CHECK(footprint(rotate_toward(z, x, 1.0), s, origin, g) == 0.0);
}

TEST_CASE("a dead-on splat renders exactly its opacity") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.5);
    const PointCamera pc = camera_at({0, 0, 0});
    // power-of-two depth: u comes out exactly (0,0,1), so delta is exactly 0
    const std::vector<CameraSplat> splats = {splat_at({0, 0, 4}, {0, 0, -1})};
    const auto image = render(pc, splats, g, single_direction({0, 0, 1}), 1e-6);
    REQUIRE(image.intensities.size() == 1);
    CHECK(image.intensities[0] == 0.5);
    REQUIRE(image.contributors[0].size() == 1);
    CHECK(image.contributors[0][0].delta == 0.0);
    CHECK(image.contributors[0][0].g == 1.0);
    CHECK(image.frames[0].visible);
    CHECK(image.frames[0].depth == 4.0);
    CHECK(image.skipped_near == 0);
}

TEST_CASE("two stacked splats compose to 0.75") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.5);
    const PointCamera pc = camera_at({0, 0, 0});
    const std::vector<CameraSplat> splats = {splat_at({0, 0, 4}, {0, 0, -1}),
                                             splat_at({0, 0, 8}, {0, 0, -1})};
    const auto image = render(pc, splats, g, single_direction({0, 0, 1}), 1e-6);
    CHECK(image.intensities[0] == 0.75); // 1 - 0.5 * 0.5
}

TEST_CASE("a splat looking away contributes nothing") {
    // axis 40 degrees off the camera direction with a 60 degree cone
    const SplatGlobals g = globals_with(0.05, kPi / 3.0, 0.5);
    const UnitVec3 down = UnitVec3::unchecked({0, 0, -1});
    const UnitVec3 x = UnitVec3::unchecked({1, 0, 0});
    CameraSplat s = splat_at({0, 0, 4}, {0, 0, -1});
    s.axis = rotate_toward(down, x, 40.0 * kPi / 180.0);
    const PointCamera pc = camera_at({0, 0, 0});
    const auto image = render(pc, {s}, g, single_direction({0, 0, 1}), 1e-6);
    CHECK(image.intensities[0] == 0.0);
    CHECK(image.contributors[0].empty());
    CHECK_FALSE(image.frames[0].visible);

    s.axis = rotate_toward(down, x, 20.0 * kPi / 180.0); // back inside the cone
    const auto image2 = render(pc, {s}, g, single_direction({0, 0, 1}), 1e-6);
    CHECK(image2.intensities[0] == 0.5);
}

TEST_CASE("product compositing matches depth-sorted accumulation") {
    const SplatGlobals g = globals_with(0.3, kPi, 0.7);
    const DirectionBasis basis = fibonacci_directions(25);
    Rng rng(2024);
    std::size_t checked = 0;
    for (int scene = 0; scene < 40; ++scene) {
        const PointCamera pc = camera_at({rng.uniform(-1, 1), rng.uniform(-1, 1),
                                          rng.uniform(-1, 1)});
        std::vector<CameraSplat> splats;
        for (int j = 0; j < 5; ++j) {
            const Vec3 center = pc.position + rng.uniform(0.5, 2.0) *
                                                  rng.sphere_direction().vec();
            splats.push_back(splat_at(center, rng.sphere_direction().vec()));
        }
        const auto image = render(pc, splats, g, basis, 1e-6);
        for (std::size_t d = 0; d < basis.size(); ++d) {
            const double oracle =
                depth_sorted_intensity(pc, splats, g, basis.directions[d], 1e-6);
            CHECK(std::abs(image.intensities[d] - oracle) <= 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 1000);
}

TEST_CASE("intensities are exactly permutation invariant") {
    const SplatGlobals g = globals_with(0.3, kPi, 0.7);
    const DirectionBasis basis = fibonacci_directions(64);
    Rng rng(99);
    const PointCamera pc = camera_at({0, 0, 0});
    std::vector<CameraSplat> splats;
    for (int j = 0; j < 8; ++j) {
        splats.push_back(splat_at(rng.uniform(0.5, 2.0) * rng.sphere_direction().vec(),
                                  rng.sphere_direction().vec()));
    }
    const auto reference = render(pc, splats, g, basis, 1e-6);
    for (int trial = 0; trial < 10; ++trial) {
        for (std::size_t i = splats.size() - 1; i > 0; --i) {
            std::swap(splats[i], splats[rng.index(i + 1)]);
        }
        const auto shuffled = render(pc, splats, g, basis, 1e-6);
        for (std::size_t d = 0; d < basis.size(); ++d) {
            CHECK(shuffled.intensities[d] == reference.intensities[d]); // bitwise
        }
    }
}

TEST_CASE("adding a splat never darkens a direction") {
    const SplatGlobals g = globals_with(0.3, kPi, 0.7);
    const DirectionBasis basis = fibonacci_directions(32);
    Rng rng(5);
    const PointCamera pc = camera_at({0, 0, 0});
    std::vector<CameraSplat> splats;
    for (int j = 0; j < 6; ++j) {
        const auto before = render(pc, splats, g, basis, 1e-6);
        splats.push_back(splat_at(rng.uniform(0.5, 2.0) * rng.sphere_direction().vec(),
                                  rng.sphere_direction().vec()));
        const auto after = render(pc, splats, g, basis, 1e-6);
        for (std::size_t d = 0; d < basis.size(); ++d) {
            CHECK(after.intensities[d] >= before.intensities[d] - 1e-12);
        }
    }
}

TEST_CASE("intensities stay inside the unit interval") {
    const SplatGlobals g = globals_with(0.3, kPi, 0.9);
    const DirectionBasis basis = fibonacci_directions(64);
    Rng rng(7);
    const PointCamera pc = camera_at({0, 0, 0});
    std::vector<CameraSplat> splats;
    for (int j = 0; j < 8; ++j) {
        splats.push_back(splat_at(rng.uniform(0.5, 1.5) * rng.sphere_direction().vec(),
                                  rng.sphere_direction().vec()));
    }
    const auto image = render(pc, splats, g, basis, 1e-6);
    for (const double v : image.intensities) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("splats within eps_depth are skipped entirely") {
    const SplatGlobals g = globals_with(0.05, kPi, 0.5);
    const PointCamera pc = camera_at({1, 2, 3});
    const std::vector<CameraSplat> splats = {splat_at({1, 2, 3}, {0, 0, 1}),
                                             splat_at({1, 2, 3 + 1e-8}, {0, 0, -1}),
                                             splat_at({1, 2, 7}, {0, 0, -1})};
    const auto image = render(pc, splats, g, single_direction({0, 0, 1}), 1e-6);
    CHECK(image.skipped_near == 2);
    CHECK_FALSE(image.frames[0].visible);
    CHECK_FALSE(image.frames[1].visible);
    CHECK(image.frames[2].visible);
    CHECK(image.intensities[0] == 0.5); // only the far splat contributes
    const auto grads = render_backward(image, {1.0}, pc, splats, g,
                                       single_direction({0, 0, 1}));
    CHECK(grads[0] == Vec3{0, 0, 0});
    CHECK(grads[1] == Vec3{0, 0, 0});
}

TEST_CASE("the frozen flag does not affect rendering") {
    const SplatGlobals g = globals_with(0.3, kPi, 0.7);
    const DirectionBasis basis = fibonacci_directions(32);
    Rng rng(31);
    const PointCamera pc = camera_at({0, 0, 0});
    std::vector<CameraSplat> splats;
    for (int j = 0; j < 4; ++j) {
        splats.push_back(splat_at(rng.uniform(0.5, 2.0) * rng.sphere_direction().vec(),
                                  rng.sphere_direction().vec()));
    }
    const auto thawed = render(pc, splats, g, basis, 1e-6);
    for (auto& s : splats) s.frozen = true;
    const auto frozen = render(pc, splats, g, basis, 1e-6);
    for (std::size_t d = 0; d < basis.size(); ++d) {
        CHECK(frozen.intensities[d] == thawed.intensities[d]);
    }
}

TEST_CASE("a dead-on splat has zero tangential center gradient") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.5);
    const PointCamera pc = camera_at({0, 0, 0});
    const std::vector<CameraSplat> splats = {splat_at({0, 0, 4}, {0, 0, -1})};
    const DirectionBasis basis = single_direction({0, 0, 1});
    const auto image = render(pc, splats, g, basis, 1e-6);
    const auto grads = render_backward(image, {1.0}, pc, splats, g, basis);
    // omega == u at the Gaussian peak: (omega - cos(0)*u) vanishes
    CHECK(grads[0] == Vec3{0, 0, 0});
}

TEST_CASE("center gradients match finite differences") {
    const double h = 1e-5;
    const double eps_depth = 1e-6;
    const SplatGlobals g = globals_with(0.25, 2.5, 0.8); // alpha well below clamp
    const DirectionBasis basis = fibonacci_directions(32);
    Rng rng(4242);

    int accepted = 0;
    int attempts = 0;
    while (accepted < 12 && attempts < 200) {
        ++attempts;
        const PointCamera pc = camera_at({0, 0, 0});
        std::vector<CameraSplat> splats;
        for (int j = 0; j < 3; ++j) {
            const Vec3 center = rng.uniform(0.6, 1.8) * rng.sphere_direction().vec();
            Vec3 axis = -1.0 * center; // roughly camera-facing
            splats.push_back(splat_at(center, axis));
        }
        std::vector<double> upstream(basis.size());
        for (auto& v : upstream) v = rng.uniform(-1.0, 1.0);

        // guard bands: reject scenes with any contribution near the FoV edge
        // or footprint cutoff, where the loss is not differentiable
        const auto image = render(pc, splats, g, basis, eps_depth);
        const double cos_half_fov = std::cos(0.5 * g.fov);
        bool near_boundary = false;
        for (std::size_t j = 0; j < splats.size(); ++j) {
            const auto& frame = image.frames[j];
            if (std::abs(dot(splats[j].axis.vec(), -frame.u.vec()) - cos_half_fov) < 1e-3) {
                near_boundary = true;
            }
        }
        for (const auto& contribs : image.contributors) {
            for (const auto& dc : contribs) {
                if (std::abs(dc.delta - 3.0 * g.angular_scale) < 1e-3) near_boundary = true;
            }
        }
        // also require directions just past the cutoff to stay past it
        for (std::size_t d = 0; d < basis.size(); ++d) {
            for (std::size_t j = 0; j < splats.size(); ++j) {
                if (!image.frames[j].visible) continue;
                const double c = std::clamp(
                    dot(image.frames[j].u.vec(), basis.directions[d].vec()), -1.0, 1.0);
                const double delta = std::acos(c);
                if (delta > 3.0 * g.angular_scale &&
                    delta - 3.0 * g.angular_scale < 1e-3) {
                    near_boundary = true;
                }
            }
        }
        if (near_boundary) continue;

        const auto analytic = render_backward(image, upstream, pc, splats, g, basis);

        const auto weighted_sum = [&](const std::vector<CameraSplat>& ss) {
            const auto img = render(pc, ss, g, basis, eps_depth);
            double total = 0.0;
            for (std::size_t d = 0; d < basis.size(); ++d) {
                total += upstream[d] * img.intensities[d];
            }
            return total;
        };

        double grad_norm = 0.0;
        double err_norm = 0.0;
        for (std::size_t j = 0; j < splats.size(); ++j) {
            for (int axis3 = 0; axis3 < 3; ++axis3) {
                auto plus = splats;
                auto minus = splats;
                double* pp = axis3 == 0 ? &plus[j].center.x
                           : axis3 == 1 ? &plus[j].center.y
                                        : &plus[j].center.z;
                double* pm = axis3 == 0 ? &minus[j].center.x
                           : axis3 == 1 ? &minus[j].center.y
                                        : &minus[j].center.z;
                *pp += h;
                *pm -= h;
                const double fd = (weighted_sum(plus) - weighted_sum(minus)) / (2.0 * h);
                const double an = axis3 == 0   ? analytic[j].x
                                  : axis3 == 1 ? analytic[j].y
                                               : analytic[j].z;
                err_norm += (fd - an) * (fd - an);
                grad_norm += an * an;
            }
        }
        if (grad_norm < 1e-8) continue; // degenerate draw, nothing to compare
        INFO("scene attempt " << attempts);
        CHECK(std::sqrt(err_norm) <= 1e-4 * std::sqrt(grad_norm));
        ++accepted;
    }
    CHECK(accepted == 12);
}

TEST_CASE("render_backward rejects mismatched shapes") {
    const SplatGlobals g = globals_with(0.05, 1.0, 0.5);
    const PointCamera pc = camera_at({0, 0, 0});
    const std::vector<CameraSplat> splats = {splat_at({0, 0, 4}, {0, 0, -1})};
    const DirectionBasis basis = single_direction({0, 0, 1});
    const auto image = render(pc, splats, g, basis, 1e-6);
    CHECK_THROWS_AS(render_backward(image, {1.0, 2.0}, pc, splats, g, basis),
                    std::logic_error);
    const std::vector<CameraSplat> extra = {splats[0], splats[0]};
    CHECK_THROWS_AS(render_backward(image, {1.0}, pc, extra, g, basis), std::logic_error);
}
