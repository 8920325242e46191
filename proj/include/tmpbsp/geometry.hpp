#pragma once

#include <cmath>
#include <numbers>

namespace tmpbsp {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

/// Planar robot pose. theta is always kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

    bool operator==(const Pose&) const = default;
};

inline double distance_xy(const Pose& a, const Pose& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

    bool contains(double x, double y) const {
        return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
    }
    bool strictly_contains(double x, double y) const {
        return x > xmin && x < xmax && y > ymin && y < ymax;
    }
    double area() const { return (xmax - xmin) * (ymax - ymin); }
    double cx() const { return 0.5 * (xmin + xmax); }
    double cy() const { return 0.5 * (ymin + ymax); }

    /// True when the interiors of the two rectangles intersect.
    bool interior_overlaps(const Rect& o) const {
        return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
    }
};

}  // namespace tmpbsp
