// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

#include "camsplat/occlusion.hpp"
#include "camsplat/optimize.hpp"
#include "camsplat/pointcam.hpp"
#include "camsplat/synth.hpp"

using namespace camsplat;

namespace {

struct SmallScene {
    std::vector<PointCamera> pcs;
    std::vector<double> targets;
    DirectionBasis basis;
    SceneBounds bounds;
};

SmallScene make_small_scene(std::uint64_t seed, std::size_t n_pcs = 20) {
    const auto synth = make_vds_sphere(60, 1.0, 4.0, 2.0, seed);
    SmallScene scene;
    scene.basis = fibonacci_directions(32);
    scene.bounds = make_scene_bounds(synth.proxy, 1.1, 4.0);
    const double r = synth.proxy.front().radius;
    const GridOcclusion occ(synth.proxy);
    const auto picks = farthest_point_sample(synth.proxy, n_pcs, seed);
    scene.pcs = build_point_cameras(synth.proxy, picks, scene.basis, 2.5 * r, 2.0 * r, occ);
    scene.targets.assign(scene.pcs.size(), 0.1); // vdsf == 1 times opacity 0.1
    return scene;
}

OptimizeParams make_params(const SceneBounds& bounds) {
    OptimizeParams params;
    params.loss.globals = SplatGlobals{0.3, 1.5, 0.1};
    params.loss.lambda_reg = 0.05;
    params.loss.lambda_bound = 10.0;
    params.loss.coverage_gamma = 2.0;
    params.loss.eps_depth = 1e-4;
    params.loss.bounds = bounds;
    params.batch_size = 64; // larger than any test batch: full-batch steps
    params.iterations = 60;
    params.lr_position = 0.01;
    params.lr_axis = 0.02;
    return params;
}

bool splats_equal(const std::vector<CameraSplat>& a, const std::vector<CameraSplat>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(a[i].center == b[i].center) || !(a[i].axis.vec() == b[i].axis.vec()) ||
            a[i].frozen != b[i].frozen) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("initialize_splats places free splats on the mid sphere") {
    const SceneBounds bounds{{1, 2, 3}, 1.0, 1.0, 3.0};
    std::vector<CameraSplat> fixed(2);
    fixed[0].center = {9, 9, 9};
    fixed[0].frozen = true;
    fixed[1].center = {8, 8, 8};
    fixed[1].frozen = true;
    const auto splats = initialize_splats(bounds, 50, 0, fixed);
    REQUIRE(splats.size() == 52);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK((splats[i].center - bounds.center).norm() == Catch::Approx(2.0).epsilon(1e-9));
        CHECK_FALSE(splats[i].frozen);
        // axis within the tilt budget of dead-center aim
        const UnitVec3 look_at =
            UnitVec3((bounds.center - splats[i].center) / 2.0);
        CHECK(angular_distance(splats[i].axis, look_at) <= 10.0 * kPi / 180.0 + 1e-9);
    }
    CHECK(splats[50].center == fixed[0].center);
    CHECK(splats[50].frozen);
    CHECK(splats[51].center == fixed[1].center);
    CHECK(splats[51].frozen);
}

TEST_CASE("initialize_splats with zero tilt aims exactly at the center") {
    const SceneBounds bounds{{0, 0, 0}, 1.0, 1.0, 3.0};
    const auto splats = initialize_splats(bounds, 20, 5, {}, 0.0);
    for (const auto& s : splats) {
        const Vec3 aim = (bounds.center - s.center) / (s.center - bounds.center).norm();
        CHECK((s.axis.vec() - aim).norm() < 1e-12);
    }
}

TEST_CASE("initialize_splats is seeded and validates bounds") {
    const SceneBounds bounds{{0, 0, 0}, 1.0, 1.0, 3.0};
    const auto a = initialize_splats(bounds, 10, 7, {});
    const auto b = initialize_splats(bounds, 10, 7, {});
    const auto c = initialize_splats(bounds, 10, 8, {});
    CHECK(splats_equal(a, b));
    CHECK_FALSE(splats_equal(a, c));

    const SceneBounds bad{{0, 0, 0}, 1.0, 3.0, 1.0};
    CHECK_THROWS_AS(initialize_splats(bad, 10, 7, {}), std::invalid_argument);
}

TEST_CASE("initialize_splats spreads tilts across the budget") {
    const SceneBounds bounds{{0, 0, 0}, 1.0, 1.0, 3.0};
    const double max_tilt = 0.3;
    const auto splats = initialize_splats(bounds, 200, 3, {}, max_tilt);
    int beyond_third = 0;
    for (const auto& s : splats) {
        const UnitVec3 look_at = UnitVec3(-1.0 * s.center);
        const double tilt = angular_distance(s.axis, look_at);
        CHECK(tilt <= max_tilt + 1e-9);
        if (tilt > max_tilt / 3.0) ++beyond_third;
    }
    CHECK(beyond_third > 60); // tilts are not all bunched at zero
}

TEST_CASE("adam does nothing on zero gradients") {
    std::vector<CameraSplat> splats(3);
    splats[0].center = {1, 2, 3};
    splats[1].center = {-1, 0, 1};
    splats[2].center = {0.5, 0.5, 0.5};
    const auto before = splats;
    SplatAdam adam(3);
    const std::vector<Vec3> zeros(3, Vec3{0, 0, 0});
    for (int i = 0; i < 5; ++i) adam.step(splats, zeros, zeros, 0.1, 0.1);
    CHECK(splats_equal(splats, before));
    CHECK(adam.step_count() == 5);
}

TEST_CASE("adam's first step has unit-scaled magnitude per component") {
    std::vector<CameraSplat> splats(1);
    splats[0].center = {0, 0, 0};
    SplatAdam adam(1);
    const double lr = 0.05;
    adam.step(splats, {Vec3{1.0, -2.0, 0.5}}, {Vec3{0, 0, 0}}, lr, 0.1);
    // bias-corrected first step is -lr * g / (|g| + eps) = -lr * sign(g)
    CHECK(splats[0].center.x == Catch::Approx(-lr).epsilon(1e-6));
    CHECK(splats[0].center.y == Catch::Approx(lr).epsilon(1e-6));
    CHECK(splats[0].center.z == Catch::Approx(-lr).epsilon(1e-6));
}

TEST_CASE("adam keeps axes unit length and skips frozen splats") {
    std::vector<CameraSplat> splats(2);
    splats[0].axis = UnitVec3::unchecked({0, 0, 1});
    splats[1].center = {4, 4, 4};
    splats[1].axis = UnitVec3::unchecked({1, 0, 0});
    splats[1].frozen = true;
    SplatAdam adam(2);
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const std::vector<Vec3> cg = {rng.sphere_direction().vec(), {7, 7, 7}};
        const std::vector<Vec3> ag = {rng.sphere_direction().vec(), {7, 7, 7}};
        adam.step(splats, cg, ag, 0.05, 0.1);
        CHECK(splats[0].axis.vec().norm() == Catch::Approx(1.0).epsilon(1e-12));
    }
    CHECK(splats[1].center == Vec3{4, 4, 4}); // frozen: untouched despite huge grads
    CHECK(splats[1].axis.vec() == Vec3{1, 0, 0});
}

TEST_CASE("adam matches an independent reference implementation") {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    const double lr_pos = 0.01;
    const double lr_axis = 0.02;

    std::vector<CameraSplat> splats(3);
    splats[0].center = {1, 0, 0};
    splats[1].center = {0, 1, 0};
    splats[2].center = {0, 0, 1};
    splats[0].axis = UnitVec3::unchecked({0, 0, 1});
    splats[1].axis = UnitVec3::unchecked({1, 0, 0});
    splats[2].axis = UnitVec3::unchecked({0, 1, 0});

    // reference state: plain arrays, one scalar Adam per component
    double ref_center[3][3];
    double ref_axis[3][3];
    double m_c[3][3] = {}, v_c[3][3] = {}, m_a[3][3] = {}, v_a[3][3] = {};
    for (int j = 0; j < 3; ++j) {
        ref_center[j][0] = splats[j].center.x;
        ref_center[j][1] = splats[j].center.y;
        ref_center[j][2] = splats[j].center.z;
        ref_axis[j][0] = splats[j].axis.vec().x;
        ref_axis[j][1] = splats[j].axis.vec().y;
        ref_axis[j][2] = splats[j].axis.vec().z;
    }

    SplatAdam adam(3);
    Rng rng(1234);
    for (int t = 1; t <= 25; ++t) {
        std::vector<Vec3> cg(3), ag(3);
        for (int j = 0; j < 3; ++j) {
            cg[j] = rng.uniform(-1, 1) * rng.sphere_direction().vec();
            ag[j] = rng.uniform(-1, 1) * rng.sphere_direction().vec();
        }
        adam.step(splats, cg, ag, lr_pos, lr_axis);

        for (int j = 0; j < 3; ++j) {
            const double gc[3] = {cg[j].x, cg[j].y, cg[j].z};
            const double ga[3] = {ag[j].x, ag[j].y, ag[j].z};
            for (int c = 0; c < 3; ++c) {
                m_c[j][c] = b1 * m_c[j][c] + (1 - b1) * gc[c];
                v_c[j][c] = b2 * v_c[j][c] + (1 - b2) * gc[c] * gc[c];
                const double mh = m_c[j][c] / (1 - std::pow(b1, t));
                const double vh = v_c[j][c] / (1 - std::pow(b2, t));
                ref_center[j][c] -= lr_pos * mh / (std::sqrt(vh) + eps);

                m_a[j][c] = b1 * m_a[j][c] + (1 - b1) * ga[c];
                v_a[j][c] = b2 * v_a[j][c] + (1 - b2) * ga[c] * ga[c];
                const double mha = m_a[j][c] / (1 - std::pow(b1, t));
                const double vha = v_a[j][c] / (1 - std::pow(b2, t));
                ref_axis[j][c] -= lr_axis * mha / (std::sqrt(vha) + eps);
            }
            const double n = std::sqrt(ref_axis[j][0] * ref_axis[j][0] +
                                       ref_axis[j][1] * ref_axis[j][1] +
                                       ref_axis[j][2] * ref_axis[j][2]);
            for (int c = 0; c < 3; ++c) ref_axis[j][c] /= n;

            CHECK(splats[j].center.x == Catch::Approx(ref_center[j][0]).margin(1e-9));
            CHECK(splats[j].center.y == Catch::Approx(ref_center[j][1]).margin(1e-9));
            CHECK(splats[j].center.z == Catch::Approx(ref_center[j][2]).margin(1e-9));
            CHECK(splats[j].axis.vec().x == Catch::Approx(ref_axis[j][0]).margin(1e-9));
            CHECK(splats[j].axis.vec().y == Catch::Approx(ref_axis[j][1]).margin(1e-9));
            CHECK(splats[j].axis.vec().z == Catch::Approx(ref_axis[j][2]).margin(1e-9));
        }
    }
}

TEST_CASE("adam rejects non-finite gradients and bad shapes") {
    std::vector<CameraSplat> splats(2);
    SplatAdam adam(2);
    const std::vector<Vec3> ok(2, Vec3{0, 0, 0});
    std::vector<Vec3> bad = ok;
    bad[1].y = std::numeric_limits<double>::quiet_NaN();
    try {
        adam.step(splats, bad, ok, 0.1, 0.1);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("splat 1") != std::string::npos);
        CHECK(e.iteration == 1);
    }
    CHECK_THROWS_AS(adam.step(splats, {ok[0]}, ok, 0.1, 0.1), std::logic_error);
}

TEST_CASE("epoch sampler visits every index exactly once per epoch") {
    std::vector<std::size_t> indices(10);
    std::iota(indices.begin(), indices.end(), 0);
    EpochSampler sampler(indices, 42);
    for (int epoch = 0; epoch < 3; ++epoch) {
        std::vector<std::size_t> seen;
        while (seen.size() < 10) {
            const auto batch = sampler.next_batch(3);
            const std::size_t expect = std::min<std::size_t>(3, 10 - seen.size());
            CHECK(batch.size() == expect); // final batch of the epoch is short
            seen.insert(seen.end(), batch.begin(), batch.end());
        }
        std::set<std::size_t> unique(seen.begin(), seen.end());
        CHECK(unique.size() == 10);
    }
}

TEST_CASE("epoch sampler is seeded and rejects empty index sets") {
    std::vector<std::size_t> indices = {5, 6, 7, 8};
    EpochSampler a(indices, 9);
    EpochSampler b(indices, 9);
    for (int i = 0; i < 6; ++i) CHECK(a.next_batch(3) == b.next_batch(3));
    CHECK_THROWS_AS(EpochSampler({}, 0), std::logic_error);

    EpochSampler big(indices, 1);
    CHECK(big.next_batch(100).size() == 4); // capped at the epoch size
}

TEST_CASE("optimize with zero iterations returns the input unchanged") {
    const auto scene = make_small_scene(0);
    auto splats = initialize_splats(scene.bounds, 8, 1, {});
    auto params = make_params(scene.bounds);
    params.iterations = 0;
    std::vector<long> observed;
    const auto result = optimize(scene.pcs, splats, scene.targets, scene.basis, params, 1,
                                 [&](long iter, const std::vector<CameraSplat>&) {
                                     observed.push_back(iter);
                                 });
    CHECK(splats_equal(result.splats, splats));
    CHECK(result.log.empty());
    CHECK(observed == std::vector<long>{0});
}

TEST_CASE("optimize reduces the loss on most seeds") {
    int improved = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto scene = make_small_scene(seed);
        const auto splats = initialize_splats(scene.bounds, 12, seed + 1, {});
        const auto params = make_params(scene.bounds);
        const auto result = optimize(scene.pcs, splats, scene.targets, scene.basis, params);
        REQUIRE(result.log.size() == 60);
        const double first = result.log.front().losses.total;
        const double last = result.log.back().losses.total;
        if (last < first) ++improved;
        CHECK(result.log.back().mean_coverage >= result.log.front().mean_coverage - 0.05);
    }
    CHECK(improved >= 9);
}

TEST_CASE("optimize is bit-for-bit reproducible") {
    const auto scene = make_small_scene(4);
    const auto splats = initialize_splats(scene.bounds, 10, 2, {});
    auto params = make_params(scene.bounds);
    params.iterations = 25;
    params.batch_size = 7; // exercise epoch wraparound
    const auto a = optimize(scene.pcs, splats, scene.targets, scene.basis, params);
    const auto b = optimize(scene.pcs, splats, scene.targets, scene.basis, params);
    CHECK(splats_equal(a.splats, b.splats));
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].losses.total == b.log[i].losses.total);
        CHECK(a.log[i].mean_coverage == b.log[i].mean_coverage);
        CHECK(a.log[i].min_coverage == b.log[i].min_coverage);
        CHECK(a.log[i].iteration == static_cast<long>(i) + 1);
    }
    // thread count must not change the trajectory either
    const auto c = optimize(scene.pcs, splats, scene.targets, scene.basis, params, 3);
    CHECK(splats_equal(a.splats, c.splats));
}

TEST_CASE("optimize never moves frozen splats") {
    const auto scene = make_small_scene(6);
    std::vector<CameraSplat> fixed(1);
    fixed[0].center = {0, 0, 2.5};
    fixed[0].axis = UnitVec3::unchecked({0, 0, -1});
    fixed[0].frozen = true;
    const auto splats = initialize_splats(scene.bounds, 6, 3, fixed);
    auto params = make_params(scene.bounds);
    params.iterations = 30;
    const auto result = optimize(scene.pcs, splats, scene.targets, scene.basis, params);
    const CameraSplat& frozen = result.splats.back();
    CHECK(frozen.center == fixed[0].center);
    CHECK(frozen.axis.vec() == fixed[0].axis.vec());
    CHECK(frozen.frozen);
}

TEST_CASE("optimize rejects fully masked scenes and counts exclusions") {
    const auto scene = make_small_scene(1, 5);
    std::vector<PointCamera> masked = scene.pcs;
    for (auto& pc : masked) std::fill(pc.occlusion_mask.begin(), pc.occlusion_mask.end(), 0);
    const auto splats = initialize_splats(scene.bounds, 4, 0, {});
    const auto params = make_params(scene.bounds);
    CHECK_THROWS_AS(optimize(masked, splats, scene.targets, scene.basis, params), ConfigError);

    std::vector<PointCamera> partial = scene.pcs;
    std::fill(partial[2].occlusion_mask.begin(), partial[2].occlusion_mask.end(), 0);
    auto short_params = params;
    short_params.iterations = 2;
    const auto result = optimize(partial, splats, scene.targets, scene.basis, short_params);
    CHECK(result.excluded_point_cameras == 1);
}

TEST_CASE("optimize aborts with the iteration number when values blow up") {
    const auto scene = make_small_scene(2, 5);
    std::vector<CameraSplat> splats(1);
    splats[0].center = {scene.bounds.r_max + 1.0, 0, 0}; // outside: boundary pulls
    splats[0].axis = UnitVec3::unchecked({-1, 0, 0});
    auto params = make_params(scene.bounds);
    params.lr_position = 1e308; // one step flings the center to overflow range
    params.iterations = 10;
    try {
        optimize(scene.pcs, splats, scene.targets, scene.basis, params);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(e.iteration == 1);
    }
}
