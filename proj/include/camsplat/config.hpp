// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "camsplat/errors.hpp"
#include "camsplat/types.hpp"

namespace camsplat {

// Every hyperparameter of the objective and the optimization loop. A value of
// 0 for lr_position, eps_normal or eps_self means "derive from the scene":
// 0.01 * scene radius, 0.5 * median proxy point radius and 2 * median proxy
// point radius respectively (resolved once the proxy is loaded).
struct OptimizationConfig {
    int n_new_splats = 100;
    int direction_samples = 256;
    double angular_scale = 0.05;
    double fov = 1.0;
    double opacity = 0.1;
    std::array<double, 4> vdsf_coeffs{1.0, 0.0, 0.0, 0.0};
    std::array<double, 2> vdsf_clamp{1.0, 5.0};
    double lambda_reg = 0.05;
    double lambda_bound = 10.0;
    double coverage_gamma = 2.0;
    int batch_size = 32;
    int iterations = 1000;
    double lr_position = 0.0; // 0 = auto
    double lr_axis = 0.02;
    std::array<double, 2> boundary{1.1, 4.0};
    int n_point_cameras = 200;
    double eps_normal = 0.0; // 0 = auto
    double eps_self = 0.0;   // 0 = auto
    std::uint64_t seed = 0;
    int snapshot_every = 0; // 0 = off

    SplatGlobals globals() const { return SplatGlobals{angular_scale, fov, opacity}; }

    void validate() const {
        auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
        if (n_new_splats < 1) fail("n_new_splats must be >= 1");
        if (direction_samples < 4) fail("direction_samples must be >= 4");
        if (!(angular_scale > 0.0 && angular_scale < kPi / 2.0)) {
            fail("angular_scale must be in (0, pi/2)");
        }
        if (!(fov > 0.0 && fov <= kPi)) fail("fov must be in (0, pi]");
        if (!(opacity > 0.0 && opacity < 1.0)) fail("opacity must be in (0, 1)");
        if (!(vdsf_clamp[0] >= 1.0)) fail("vdsf_clamp lower bound must be >= 1");
        if (!(vdsf_clamp[0] <= vdsf_clamp[1])) fail("vdsf_clamp must be ordered");
        if (!(opacity * vdsf_clamp[1] < 1.0)) {
            fail("unreachable target intensity: opacity * vdsf_clamp upper bound must be < 1");
        }
        if (lambda_reg < 0.0) fail("lambda_reg must be >= 0");
        if (lambda_bound < 0.0) fail("lambda_bound must be >= 0");
        if (!(coverage_gamma > 0.0)) fail("coverage_gamma must be > 0");
        if (batch_size < 1) fail("batch_size must be >= 1");
        if (iterations < 0) fail("iterations must be >= 0");
        if (lr_position < 0.0) fail("lr_position must be >= 0 (0 = auto)");
        if (!(lr_axis > 0.0)) fail("lr_axis must be > 0");
        if (!(boundary[0] > 0.0 && boundary[0] < boundary[1])) {
            fail("boundary factors must satisfy 0 < min < max");
        }
        if (n_point_cameras < 1) fail("n_point_cameras must be >= 1");
        if (eps_normal < 0.0) fail("eps_normal must be >= 0 (0 = auto)");
        if (eps_self < 0.0) fail("eps_self must be >= 0 (0 = auto)");
        if (snapshot_every < 0) fail("snapshot_every must be >= 0");
    }
};

namespace detail {

inline const std::set<std::string>& config_keys() {
    static const std::set<std::string> keys = {
        "n_new_splats",  "direction_samples", "angular_scale", "fov",
        "opacity",       "vdsf_coeffs",       "vdsf_clamp",    "lambda_reg",
        "lambda_bound",  "coverage_gamma",    "batch_size",    "iterations",
        "lr_position",   "lr_axis",           "boundary",      "n_point_cameras",
        "eps_normal",    "eps_self",          "seed",          "snapshot_every"};
    return keys;
}

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.size() != N) {
        throw ConfigError("config: key '" + key + "' must be an array of " + std::to_string(N) +
                          " numbers");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) {
        if (!j[i].is_number()) {
            throw ConfigError("config: key '" + key + "' must contain only numbers");
        }
        out[i] = j[i].get<double>();
    }
    return out;
}

inline double read_number(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number()) {
        throw ConfigError("config: key '" + key + "' must be a number");
    }
    return j.get<double>();
}

inline int read_int(const nlohmann::json& j, const std::string& key) {
    if (!j.is_number_integer()) {
        throw ConfigError("config: key '" + key + "' must be an integer");
    }
    return j.get<int>();
}

} // namespace detail

// Parses a config object: missing keys take defaults, unknown keys are
// rejected, invariants are checked after the merge.
inline OptimizationConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("config: top-level JSON value must be an object");
    }
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        if (detail::config_keys().count(it.key()) == 0) {
            throw ConfigError("config: unknown key '" + it.key() + "'");
        }
    }
    OptimizationConfig cfg;
    auto has = [&](const char* k) { return doc.contains(k); };
    if (has("n_new_splats")) cfg.n_new_splats = detail::read_int(doc["n_new_splats"], "n_new_splats");
    if (has("direction_samples")) {
        cfg.direction_samples = detail::read_int(doc["direction_samples"], "direction_samples");
    }
    if (has("angular_scale")) cfg.angular_scale = detail::read_number(doc["angular_scale"], "angular_scale");
    if (has("fov")) cfg.fov = detail::read_number(doc["fov"], "fov");
    if (has("opacity")) cfg.opacity = detail::read_number(doc["opacity"], "opacity");
    if (has("vdsf_coeffs")) cfg.vdsf_coeffs = detail::read_array<4>(doc["vdsf_coeffs"], "vdsf_coeffs");
    if (has("vdsf_clamp")) cfg.vdsf_clamp = detail::read_array<2>(doc["vdsf_clamp"], "vdsf_clamp");
    if (has("lambda_reg")) cfg.lambda_reg = detail::read_number(doc["lambda_reg"], "lambda_reg");
    if (has("lambda_bound")) cfg.lambda_bound = detail::read_number(doc["lambda_bound"], "lambda_bound");
    if (has("coverage_gamma")) cfg.coverage_gamma = detail::read_number(doc["coverage_gamma"], "coverage_gamma");
    if (has("batch_size")) cfg.batch_size = detail::read_int(doc["batch_size"], "batch_size");
    if (has("iterations")) cfg.iterations = detail::read_int(doc["iterations"], "iterations");
    if (has("lr_position")) cfg.lr_position = detail::read_number(doc["lr_position"], "lr_position");
    if (has("lr_axis")) cfg.lr_axis = detail::read_number(doc["lr_axis"], "lr_axis");
    if (has("boundary")) cfg.boundary = detail::read_array<2>(doc["boundary"], "boundary");
    if (has("n_point_cameras")) cfg.n_point_cameras = detail::read_int(doc["n_point_cameras"], "n_point_cameras");
    if (has("eps_normal")) cfg.eps_normal = detail::read_number(doc["eps_normal"], "eps_normal");
    if (has("eps_self")) cfg.eps_self = detail::read_number(doc["eps_self"], "eps_self");
    if (has("seed")) {
        if (!doc["seed"].is_number_integer()) {
            throw ConfigError("config: key 'seed' must be an integer");
        }
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    if (has("snapshot_every")) cfg.snapshot_every = detail::read_int(doc["snapshot_every"], "snapshot_every");
    cfg.validate();
    return cfg;
}

inline nlohmann::json config_to_json(const OptimizationConfig& cfg) {
    nlohmann::json j;
    j["n_new_splats"] = cfg.n_new_splats;
    j["direction_samples"] = cfg.direction_samples;
    j["angular_scale"] = cfg.angular_scale;
    j["fov"] = cfg.fov;
    j["opacity"] = cfg.opacity;
    j["vdsf_coeffs"] = cfg.vdsf_coeffs;
    j["vdsf_clamp"] = cfg.vdsf_clamp;
    j["lambda_reg"] = cfg.lambda_reg;
    j["lambda_bound"] = cfg.lambda_bound;
    j["coverage_gamma"] = cfg.coverage_gamma;
    j["batch_size"] = cfg.batch_size;
    j["iterations"] = cfg.iterations;
    j["lr_position"] = cfg.lr_position;
    j["lr_axis"] = cfg.lr_axis;
    j["boundary"] = cfg.boundary;
    j["n_point_cameras"] = cfg.n_point_cameras;
    j["eps_normal"] = cfg.eps_normal;
    j["eps_self"] = cfg.eps_self;
    j["seed"] = cfg.seed;
    j["snapshot_every"] = cfg.snapshot_every;
    return j;
}

inline OptimizationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: JSON parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

} // namespace camsplat
