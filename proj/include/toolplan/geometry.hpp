#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace toolplan {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double px, double py, double pz) : x(px), y(py), z(pz) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    Vec2() = default;
    Vec2(double px, double py) : x(px), y(py) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Axis-aligned box in 3D, used for collision/overlap tests on world-frame extents.
struct Aabb {
    Vec3 lo;
    Vec3 hi;

    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }

    bool contains_xy(double px, double py) const {
        return px >= lo.x && px <= hi.x && py >= lo.y && py <= hi.y;
    }

    // Positive overlap depth along each axis (0 when merely touching).
    double overlap_x(const Aabb& o) const { return std::max(0.0, std::min(hi.x, o.hi.x) - std::max(lo.x, o.lo.x)); }
    double overlap_y(const Aabb& o) const { return std::max(0.0, std::min(hi.y, o.hi.y) - std::max(lo.y, o.lo.y)); }
    double overlap_z(const Aabb& o) const { return std::max(0.0, std::min(hi.z, o.hi.z) - std::max(lo.z, o.lo.z)); }

    bool intersects(const Aabb& o, double eps = 0.0) const {
        return overlap_x(o) > eps && overlap_y(o) > eps && overlap_z(o) > eps;
    }

    Aabb united(const Aabb& o) const {
        return {{std::min(lo.x, o.lo.x), std::min(lo.y, o.lo.y), std::min(lo.z, o.lo.z)},
                {std::max(hi.x, o.hi.x), std::max(hi.y, o.hi.y), std::max(hi.z, o.hi.z)}};
    }

    // Euclidean distance between boxes, 0 when touching or overlapping.
    double gap_to(const Aabb& o) const {
        double dx = std::max({lo.x - o.hi.x, o.lo.x - hi.x, 0.0});
        double dy = std::max({lo.y - o.hi.y, o.lo.y - hi.y, 0.0});
        double dz = std::max({lo.z - o.hi.z, o.lo.z - hi.z, 0.0});
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    }
};

// World-frame AABB of a yawed box (planar rotation about its center).
inline Aabb box_world_aabb(const Vec3& center, const Vec3& size, double yaw) {
    double c = std::abs(std::cos(yaw));
    double s = std::abs(std::sin(yaw));
    double ex = (c * size.x + s * size.y) * 0.5;
    double ey = (s * size.x + c * size.y) * 0.5;
    double ez = size.z * 0.5;
    return {{center.x - ex, center.y - ey, center.z - ez}, {center.x + ex, center.y + ey, center.z + ez}};
}

// Rotate an offset vector by yaw about the z axis.
inline Vec3 rotate_yaw(const Vec3& v, double yaw) {
    double c = std::cos(yaw);
    double s = std::sin(yaw);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

// Normalize to [-pi, pi).
inline double normalize_yaw(double yaw) {
    const double two_pi = 2.0 * M_PI;
    double r = std::fmod(yaw + M_PI, two_pi);
    if (r < 0) r += two_pi;
    return r - M_PI;
}

inline double yaw_difference(double a, double b) {
    double d = std::abs(normalize_yaw(a - b));
    return d;
}

// Fixed two-decimal formatting used by all rendered text; normalizes -0.00.
inline std::string fmt2(double v) {
    if (std::abs(v) < 0.005) v = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt2(const Vec3& v) {
    return "[" + fmt2(v.x) + ", " + fmt2(v.y) + ", " + fmt2(v.z) + "]";
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

}  // namespace toolplan
