// Copyright Contributors to the camsplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camsplat {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }

    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }

    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    constexpr double norm_squared() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm_squared()); }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Boundary-validated construction for data coming in from files or user input.
inline Vec3 checked_vec3(double x, double y, double z, const char* what = "vector") {
    Vec3 v{x, y, z};
    if (!v.is_finite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite component");
    }
    return v;
}

// A Vec3 constrained to unit length. Construction renormalizes; vectors that
// are already unit length (within 1e-12 in the squared norm) pass through
// bit-identically, which makes renormalization idempotent.
class UnitVec3 {
public:
    constexpr UnitVec3() : v_{0.0, 0.0, 1.0} {} // default: +Z
    explicit UnitVec3(const Vec3& v) : v_(normalize_or_throw(v)) {}
    UnitVec3(double x, double y, double z) : UnitVec3(Vec3{x, y, z}) {}

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }

    UnitVec3 renormalized() const { return UnitVec3(v_); }
    UnitVec3 operator-() const { return UnitVec3::unchecked(-v_); }

    bool operator==(const UnitVec3& o) const { return v_ == o.v_; }

    // Wraps a vector that is already known to be unit length (e.g. produced
    // by an explicit division by its norm). No validation.
    static UnitVec3 unchecked(const Vec3& v) { return UnitVec3(v, unchecked_tag{}); }

private:
    struct unchecked_tag {};
    UnitVec3(const Vec3& v, unchecked_tag) : v_(v) {}

    static Vec3 normalize_or_throw(const Vec3& v) {
        const double n2 = v.norm_squared();
        if (!std::isfinite(n2) || n2 == 0.0) {
            throw std::invalid_argument("UnitVec3: cannot normalize zero or non-finite vector");
        }
        if (std::abs(n2 - 1.0) <= 1e-12) {
            return v;
        }
        return v / std::sqrt(n2);
    }

    Vec3 v_;
};

inline double dot(const UnitVec3& a, const UnitVec3& b) { return dot(a.vec(), b.vec()); }

// Angle between two unit vectors in [0, pi]. The dot product is clamped to
// [-1, 1] so accumulated rounding in unit-vector chains cannot produce NaN.
inline double angular_distance(const UnitVec3& a, const UnitVec3& b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

// Column-major 3x3 rotation helper used for camera frame export.
struct Mat3 {
    Vec3 col0, col1, col2;

    Vec3 apply(const Vec3& v) const { return col0 * v.x + col1 * v.y + col2 * v.z; }
    double det() const { return dot(col0, cross(col1, col2)); }
};

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    return {a.apply(b.col0), a.apply(b.col1), a.apply(b.col2)};
}

// Roll-free camera-to-world rotation: columns are (right, up, forward) with
// forward equal to the viewing axis. When the axis is within ~1e-3 rad of
// world_up the fixed fallback up (+X) is used instead.
inline Mat3 look_at_frame(const UnitVec3& axis, const UnitVec3& world_up) {
    Vec3 up = world_up.vec();
    if (std::abs(dot(axis.vec(), up)) > 1.0 - 1e-6) {
        up = Vec3{1.0, 0.0, 0.0};
    }
    const Vec3 right_raw = cross(up, axis.vec());
    const Vec3 right = right_raw / right_raw.norm();
    const Vec3 cam_up = cross(axis.vec(), right);
    return {right, cam_up, axis.vec()};
}

inline UnitVec3 world_up_y() { return UnitVec3::unchecked({0.0, 1.0, 0.0}); }

} // namespace camsplat
