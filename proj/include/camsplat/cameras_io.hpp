// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "camsplat/errors.hpp"
#include "camsplat/types.hpp"

namespace camsplat {
namespace detail {

inline Vec3 json_vec3(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
        !j[2].is_number()) {
        throw IoError(what + " must be an array of 3 numbers");
    }
    return checked_vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), what.c_str());
}

} // namespace detail

// Fixed capture views: every splat loaded here is frozen and never moves.
inline std::vector<CameraSplat> load_cameras_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open cameras file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cameras: JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.is_array()) throw IoError(path + ": top-level value must be an array");

    std::vector<CameraSplat> splats;
    splats.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        if (!rec.is_object() || !rec.contains("position") || !rec.contains("forward")) {
            throw IoError(path + ": record " + std::to_string(i) +
                          " must have 'position' and 'forward'");
        }
        CameraSplat s;
        s.center = detail::json_vec3(rec["position"], "position");
        const Vec3 fwd = detail::json_vec3(rec["forward"], "forward");
        try {
            s.axis = UnitVec3(fwd);
        } catch (const std::exception&) {
            throw IoError(path + ": zero-length forward vector at index " + std::to_string(i));
        }
        s.frozen = true;
        splats.push_back(s);
    }
    return splats;
}

// Camera-to-world pose for one splat: rotation columns are (right, up,
// forward) of look_at_frame, translation is the center. Row-major flattening.
inline nlohmann::json transform_matrix_json(const CameraSplat& splat) {
    const Mat3 rot = look_at_frame(splat.axis, world_up_y());
    const double m[4][4] = {
        {rot.col0.x, rot.col1.x, rot.col2.x, splat.center.x},
        {rot.col0.y, rot.col1.y, rot.col2.y, splat.center.y},
        {rot.col0.z, rot.col1.z, rot.col2.z, splat.center.z},
        {0.0, 0.0, 0.0, 1.0},
    };
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(m[r][c]);
        rows.push_back(row);
    }
    return rows;
}

inline nlohmann::json transforms_to_json(const std::vector<CameraSplat>& splats,
                                         const SplatGlobals& globals) {
    nlohmann::json doc;
    doc["camera_angle_x"] = globals.fov;
    nlohmann::json frames = nlohmann::json::array();
    for (const auto& s : splats) {
        nlohmann::json frame;
        frame["transform_matrix"] = transform_matrix_json(s);
        frame["fixed"] = s.frozen;
        frames.push_back(frame);
    }
    doc["frames"] = frames;
    return doc;
}

inline void export_transforms(const std::vector<CameraSplat>& splats, const SplatGlobals& globals,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << transforms_to_json(splats, globals).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

// Inverse of export_transforms: centers from the translation column, axes
// from the third rotation column. Used by the evaluation path.
struct LoadedTransforms {
    double camera_angle_x = 0.0;
    std::vector<CameraSplat> splats;
};

inline LoadedTransforms load_transforms_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open transforms file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("transforms: JSON parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("camera_angle_x") || !doc.contains("frames")) {
        throw IoError(path + ": expected object with 'camera_angle_x' and 'frames'");
    }
    LoadedTransforms result;
    result.camera_angle_x = doc["camera_angle_x"].get<double>();
    const auto& frames = doc["frames"];
    if (!frames.is_array()) throw IoError(path + ": 'frames' must be an array");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& frame = frames[i];
        if (!frame.contains("transform_matrix")) {
            throw IoError(path + ": frame " + std::to_string(i) + " missing transform_matrix");
        }
        const auto& m = frame["transform_matrix"];
        if (!m.is_array() || m.size() != 4) {
            throw IoError(path + ": frame " + std::to_string(i) + " matrix must be 4x4");
        }
        for (int r = 0; r < 4; ++r) {
            if (!m[r].is_array() || m[r].size() != 4) {
                throw IoError(path + ": frame " + std::to_string(i) + " matrix must be 4x4");
            }
        }
        CameraSplat s;
        s.center = checked_vec3(m[0][3].get<double>(), m[1][3].get<double>(),
                                m[2][3].get<double>(), "transform translation");
        const Vec3 fwd{m[0][2].get<double>(), m[1][2].get<double>(), m[2][2].get<double>()};
        try {
            s.axis = UnitVec3(fwd);
        } catch (const std::exception&) {
            throw IoError(path + ": zero-length forward column at frame " + std::to_string(i));
        }
        s.frozen = frame.value("fixed", false);
        result.splats.push_back(s);
    }
    return result;
}

} // namespace camsplat
