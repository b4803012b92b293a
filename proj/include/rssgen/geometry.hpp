#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

namespace rssgen {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(dot(*this)); }
};

inline bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
}

/// Axis-aligned box given by center and full extent (side lengths).
struct Aabb {
    Vec3 center;
    Vec3 extent;

    Vec3 min_corner() const { return {center.x - extent.x / 2, center.y - extent.y / 2, center.z - extent.z / 2}; }
    Vec3 max_corner() const { return {center.x + extent.x / 2, center.y + extent.y / 2, center.z + extent.z / 2}; }

    bool contains(const Vec3& p) const {
        Vec3 lo = min_corner(), hi = max_corner();
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
    }
};

/// Intersection of the segment a->b with the box, as a parameter interval
/// [t0, t1] within [0, 1]. Empty optional when the segment misses the box.
inline std::optional<std::array<double, 2>> segment_box_interval(const Vec3& a, const Vec3& b, const Aabb& box) {
    const Vec3 d = b - a;
    const Vec3 lo = box.min_corner();
    const Vec3 hi = box.max_corner();
    double t0 = 0.0, t1 = 1.0;
    const double av[3] = {a.x, a.y, a.z};
    const double dv[3] = {d.x, d.y, d.z};
    const double lov[3] = {lo.x, lo.y, lo.z};
    const double hiv[3] = {hi.x, hi.y, hi.z};
    for (int i = 0; i < 3; ++i) {
        if (dv[i] == 0.0) {
            if (av[i] < lov[i] || av[i] > hiv[i]) return std::nullopt;
            continue;
        }
        double ta = (lov[i] - av[i]) / dv[i];
        double tb = (hiv[i] - av[i]) / dv[i];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return std::array<double, 2>{t0, t1};
}

/// Length of the chord the segment a->b cuts through the box, in the same
/// units as the endpoints. Zero when the segment only grazes the surface.
inline double segment_box_chord(const Vec3& a, const Vec3& b, const Aabb& box) {
    auto iv = segment_box_interval(a, b, box);
    if (!iv) return 0.0;
    return ((*iv)[1] - (*iv)[0]) * (b - a).norm();
}

} // namespace rssgen
