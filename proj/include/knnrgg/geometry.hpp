#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace knnrgg {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(const Point& a, const Point& b) noexcept {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

inline double distance(const Point& a, const Point& b) noexcept {
    return std::sqrt(squared_distance(a, b));
}

/// Closed axis-aligned rectangle.
struct Rect {
    double xmin = 0.0;
    double xmax = 0.0;
    double ymin = 0.0;
    double ymax = 0.0;

    static Rect checked(double xmin, double xmax, double ymin, double ymax) {
        if (!(xmin <= xmax) || !(ymin <= ymax)) {
            throw std::invalid_argument("Rect: require xmin <= xmax and ymin <= ymax");
        }
        return Rect{xmin, xmax, ymin, ymax};
    }

    /// Square of side `side` centred at the origin.
    static Rect centred_square(double side) {
        return checked(-0.5 * side, 0.5 * side, -0.5 * side, 0.5 * side);
    }

    double width() const noexcept { return xmax - xmin; }
    double height() const noexcept { return ymax - ymin; }

    bool contains(const Point& p) const noexcept {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }

    bool contains(const Rect& r) const noexcept {
        return r.xmin >= xmin && r.xmax <= xmax && r.ymin >= ymin && r.ymax <= ymax;
    }

    /// {s * p : p in this}.
    Rect scaled_about_origin(double s) const noexcept {
        return Rect{s * xmin, s * xmax, s * ymin, s * ymax};
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Disc {
    Point center;
    double radius = 0.0;

    bool contains(const Point& p) const noexcept {
        return squared_distance(center, p) <= radius * radius;
    }

    /// True when the disc lies inside the closed rectangle.
    bool inside(const Rect& r) const noexcept {
        return center.x - radius >= r.xmin && center.x + radius <= r.xmax &&
               center.y - radius >= r.ymin && center.y + radius <= r.ymax;
    }
};

/// Region between two concentric discs: inner radius < |p - c| <= outer radius.
struct Annulus {
    Point center;
    double inner_radius = 0.0;
    double outer_radius = 0.0;

    bool contains(const Point& p) const noexcept {
        const double d2 = squared_distance(center, p);
        return d2 > inner_radius * inner_radius && d2 <= outer_radius * outer_radius;
    }
};

inline double area(const Rect& r) noexcept { return r.width() * r.height(); }

inline double area(const Disc& d) noexcept { return std::numbers::pi * d.radius * d.radius; }

inline double area(const Annulus& a) noexcept {
    return std::numbers::pi * (a.outer_radius * a.outer_radius - a.inner_radius * a.inner_radius);
}

}  // namespace knnrgg
