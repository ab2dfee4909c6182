// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "camsplat/errors.hpp"
#include "camsplat/types.hpp"

namespace camsplat {
namespace detail {

enum class PlyScalar { kChar, kUChar, kShort, kUShort, kInt, kUInt, kFloat, kDouble };

inline PlyScalar ply_scalar_from_name(const std::string& name, const std::string& path) {
    if (name == "char" || name == "int8") return PlyScalar::kChar;
    if (name == "uchar" || name == "uint8") return PlyScalar::kUChar;
    if (name == "short" || name == "int16") return PlyScalar::kShort;
    if (name == "ushort" || name == "uint16") return PlyScalar::kUShort;
    if (name == "int" || name == "int32") return PlyScalar::kInt;
    if (name == "uint" || name == "uint32") return PlyScalar::kUInt;
    if (name == "float" || name == "float32") return PlyScalar::kFloat;
    if (name == "double" || name == "float64") return PlyScalar::kDouble;
    throw IoError(path + ": unsupported PLY property type '" + name + "'");
}

inline std::size_t ply_scalar_size(PlyScalar t) {
    switch (t) {
    case PlyScalar::kChar:
    case PlyScalar::kUChar: return 1;
    case PlyScalar::kShort:
    case PlyScalar::kUShort: return 2;
    case PlyScalar::kInt:
    case PlyScalar::kUInt:
    case PlyScalar::kFloat: return 4;
    case PlyScalar::kDouble: return 8;
    }
    return 0;
}

inline double ply_decode(PlyScalar t, const unsigned char* p) {
    switch (t) {
    case PlyScalar::kChar: {
        std::int8_t v;
        std::memcpy(&v, p, 1);
        return static_cast<double>(v);
    }
    case PlyScalar::kUChar: return static_cast<double>(*p);
    case PlyScalar::kShort: {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        return static_cast<double>(v);
    }
    case PlyScalar::kUShort: {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        return static_cast<double>(v);
    }
    case PlyScalar::kInt: {
        std::int32_t v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyScalar::kUInt: {
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyScalar::kFloat: {
        float v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyScalar::kDouble: {
        double v;
        std::memcpy(&v, p, 8);
        return v;
    }
    }
    return 0.0;
}

struct PlyHeader {
    bool binary = false;
    std::size_t vertex_count = 0;
    std::vector<std::string> property_names;
    std::vector<PlyScalar> property_types;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < property_names.size(); ++i) {
            if (property_names[i] == name) return static_cast<int>(i);
        }
        return -1;
    }
};

inline PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    // Tolerate a stray carriage return from files written on other platforms.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ply") throw IoError(path + ": not a PLY file (missing magic)");

    PlyHeader header;
    bool in_vertex_element = false;
    bool saw_format = false;
    bool saw_vertex = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                header.binary = false;
            } else if (fmt == "binary_little_endian") {
                header.binary = true;
            } else {
                throw IoError(path + ": unsupported PLY format '" + fmt + "'");
            }
            saw_format = true;
        } else if (tok == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                if (saw_vertex) throw IoError(path + ": duplicate vertex element");
                saw_vertex = true;
                in_vertex_element = true;
                header.vertex_count = count;
            } else {
                if (!saw_vertex) {
                    throw IoError(path + ": vertex element must come first, found '" + name + "'");
                }
                in_vertex_element = false; // trailing elements are ignored
            }
        } else if (tok == "property") {
            if (!in_vertex_element) continue;
            std::string type_name;
            ls >> type_name;
            if (type_name == "list") {
                throw IoError(path + ": list properties are not supported on vertices");
            }
            std::string prop_name;
            ls >> prop_name;
            header.property_types.push_back(ply_scalar_from_name(type_name, path));
            header.property_names.push_back(prop_name);
        } else if (tok == "end_header") {
            if (!saw_format) throw IoError(path + ": missing format line");
            if (!saw_vertex) throw IoError(path + ": missing vertex element");
            return header;
        } else {
            throw IoError(path + ": unrecognized header line '" + line + "'");
        }
    }
    throw IoError(path + ": truncated header (no end_header)");
}

// Half the median pairwise nearest-neighbor distance; the median is the lower
// median (sorted index (n-1)/2). Brute force: proxies here are small.
inline double default_radius_from_spacing(const std::vector<ProxyPoint>& pts,
                                          const std::string& path) {
    const std::size_t n = pts.size();
    if (n < 2) {
        throw IoError(path + ": cannot infer point radius from a single vertex; "
                             "add a 'radius' property");
    }
    std::vector<double> nn(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d2 = (pts[i].position - pts[j].position).norm_squared();
            if (d2 < nn[i]) nn[i] = d2;
            if (d2 < nn[j]) nn[j] = d2;
        }
    }
    std::nth_element(nn.begin(), nn.begin() + (n - 1) / 2, nn.end());
    const double median = std::sqrt(nn[(n - 1) / 2]);
    if (!(median > 0.0)) {
        throw IoError(path + ": duplicate vertices make the default radius zero; "
                             "add a 'radius' property");
    }
    return 0.5 * median;
}

} // namespace detail

inline std::vector<ProxyPoint> load_proxy_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open proxy file: " + path);
    const detail::PlyHeader header = detail::parse_ply_header(in, path);
    if (header.vertex_count == 0) throw IoError(path + ": empty vertex list");

    for (const char* required : {"x", "y", "z", "nx", "ny", "nz"}) {
        if (header.index_of(required) < 0) {
            throw IoError(path + ": missing vertex property '" + std::string(required) + "'");
        }
    }
    const int ix = header.index_of("x"), iy = header.index_of("y"), iz = header.index_of("z");
    const int inx = header.index_of("nx"), iny = header.index_of("ny"), inz = header.index_of("nz");
    const int ivds = header.index_of("vds");
    const int irad = header.index_of("radius");

    const std::size_t n_props = header.property_names.size();
    std::vector<ProxyPoint> points;
    points.reserve(header.vertex_count);
    std::vector<double> row(n_props);

    if (header.binary) {
        std::size_t row_bytes = 0;
        for (auto t : header.property_types) row_bytes += detail::ply_scalar_size(t);
        std::vector<unsigned char> buf(row_bytes);
        for (std::size_t v = 0; v < header.vertex_count; ++v) {
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(row_bytes));
            if (!in) throw IoError(path + ": truncated binary vertex data at vertex " +
                                   std::to_string(v));
            std::size_t off = 0;
            for (std::size_t p = 0; p < n_props; ++p) {
                row[p] = detail::ply_decode(header.property_types[p], buf.data() + off);
                off += detail::ply_scalar_size(header.property_types[p]);
            }
            ProxyPoint pt;
            pt.position = checked_vec3(row[ix], row[iy], row[iz], "vertex position");
            pt.normal = UnitVec3(Vec3{row[inx], row[iny], row[inz]});
            pt.vds = ivds >= 0 ? row[ivds] : 1.0;
            pt.radius = irad >= 0 ? row[irad] : 0.0;
            points.push_back(pt);
        }
    } else {
        for (std::size_t v = 0; v < header.vertex_count; ++v) {
            for (std::size_t p = 0; p < n_props; ++p) {
                if (!(in >> row[p])) {
                    throw IoError(path + ": truncated ASCII vertex data at vertex " +
                                  std::to_string(v));
                }
            }
            ProxyPoint pt;
            pt.position = checked_vec3(row[ix], row[iy], row[iz], "vertex position");
            pt.normal = UnitVec3(Vec3{row[inx], row[iny], row[inz]});
            pt.vds = ivds >= 0 ? row[ivds] : 1.0;
            pt.radius = irad >= 0 ? row[irad] : 0.0;
            points.push_back(pt);
        }
    }

    for (std::size_t v = 0; v < points.size(); ++v) {
        if (!std::isfinite(points[v].vds) || points[v].vds < 0.0) {
            throw IoError(path + ": vertex " + std::to_string(v) + " has invalid vds");
        }
        if (irad >= 0 && !(points[v].radius > 0.0 && std::isfinite(points[v].radius))) {
            throw IoError(path + ": vertex " + std::to_string(v) + " has non-positive radius");
        }
    }
    if (irad < 0) {
        const double r = detail::default_radius_from_spacing(points, path);
        for (auto& pt : points) pt.radius = r;
    }
    return points;
}

// Writes all four optional-and-required property groups (position, normal,
// vds, radius) so a round trip is lossless. Binary stores float64; ASCII uses
// max_digits10 which round-trips doubles exactly as well.
inline void write_proxy_ply(const std::string& path, const std::vector<ProxyPoint>& points,
                            bool binary = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "ply\n";
    out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
    out << "element vertex " << points.size() << "\n";
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz", "vds", "radius"}) {
        out << "property double " << name << "\n";
    }
    out << "end_header\n";

    for (const auto& pt : points) {
        const double vals[8] = {pt.position.x, pt.position.y,  pt.position.z, pt.normal.vec().x,
                                pt.normal.vec().y, pt.normal.vec().z, pt.vds, pt.radius};
        if (binary) {
            out.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        } else {
            char buf[32];
            for (int i = 0; i < 8; ++i) {
                auto res = std::to_chars(buf, buf + sizeof(buf), vals[i],
                                         std::chars_format::general, 17);
                out.write(buf, res.ptr - buf);
                out.put(i == 7 ? '\n' : ' ');
            }
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace camsplat
