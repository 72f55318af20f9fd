#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

namespace knnrgg {

/// Immutable list of planar points together with how it was generated.
/// Copies share the underlying storage.
class PointSet {
public:
    PointSet() : points_(std::make_shared<const std::vector<Point>>()) {}

    PointSet(std::vector<Point> points, Rect region, std::uint64_t seed, double intensity)
        : points_(std::make_shared<const std::vector<Point>>(std::move(points))),
          region_(region),
          seed_(seed),
          intensity_(intensity) {
        for (const auto& p : *points_) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw std::invalid_argument("PointSet: non-finite coordinate");
            }
            if (!region_.contains(p)) {
                throw std::invalid_argument("PointSet: point outside region");
            }
        }
    }

    std::span<const Point> points() const noexcept { return *points_; }
    const Point& operator[](std::size_t i) const noexcept { return (*points_)[i]; }
    std::size_t size() const noexcept { return points_->size(); }
    bool empty() const noexcept { return points_->empty(); }
    const Rect& region() const noexcept { return region_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double intensity() const noexcept { return intensity_; }

private:
    std::shared_ptr<const std::vector<Point>> points_;
    Rect region_{};
    std::uint64_t seed_ = 0;
    double intensity_ = 1.0;
};

namespace detail {

inline void append_uniform(std::vector<Point>& out, const Rect& region, std::uint64_t count,
                           Rng& rng) {
    out.reserve(out.size() + count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double x = rng.uniform(region.xmin, region.xmax);
        const double y = rng.uniform(region.ymin, region.ymax);
        out.push_back(Point{x, y});
    }
}

inline void append_uniform(std::vector<Point>& out, const Disc& disc, std::uint64_t count,
                           Rng& rng) {
    // Rejection from the bounding square, so membership agrees with Disc::contains.
    out.reserve(out.size() + count);
    const double r = disc.radius;
    for (std::uint64_t i = 0; i < count;) {
        const Point p{disc.center.x + rng.uniform(-r, r), disc.center.y + rng.uniform(-r, r)};
        if (disc.contains(p)) {
            out.push_back(p);
            ++i;
        }
    }
}

}  // namespace detail

/// Poisson process of the given intensity on `region`. The count is drawn
/// first, then the coordinates, all from the stream `seed`.
inline PointSet sample_poisson(const Rect& region, double intensity, std::uint64_t seed) {
    if (!std::isfinite(intensity) || intensity < 0.0) {
        throw std::invalid_argument("sample_poisson: intensity must be finite and non-negative");
    }
    Rng rng(seed);
    const std::uint64_t count = poisson_variate(rng, intensity * area(region));
    std::vector<Point> pts;
    detail::append_uniform(pts, region, count, rng);
    return PointSet(std::move(pts), region, seed, intensity);
}

/// The three concentric discs D1, D3, D5 of radii r, 3r, 5r with pi r^2 = k + 1.
struct DiscTriple {
    Disc d1;
    Disc d3;
    Disc d5;

    static DiscTriple for_k(int k, Point center) {
        if (k < 0) throw std::invalid_argument("DiscTriple: k must be non-negative");
        const double r = std::sqrt((k + 1.0) / std::numbers::pi);
        return DiscTriple{Disc{center, r}, Disc{center, 3.0 * r}, Disc{center, 5.0 * r}};
    }

    double r() const noexcept { return d1.radius; }
    Annulus empty_annulus() const noexcept { return Annulus{d1.center, d1.radius, d3.radius}; }
};

struct ConditionedSample {
    PointSet points;
    DiscTriple discs;
    /// Number of D1 counts drawn before one reached k + 1.
    std::uint64_t d1_attempts = 0;
};

/// Poisson process on `outer` conditioned on D1 holding at least k + 1 points
/// and D3 \ D1 holding none. The D1 count is redrawn until it reaches k + 1;
/// the exterior outer \ D3 is an unconditioned process obtained by restricting
/// a full sample of `outer`. D1 points come first in the output.
inline ConditionedSample sample_disc_conditioned(int k, const Rect& outer, Point center,
                                                 std::uint64_t seed,
                                                 double exterior_intensity = 1.0) {
    const DiscTriple discs = DiscTriple::for_k(k, center);
    if (!discs.d5.inside(outer)) {
        throw std::invalid_argument("sample_disc_conditioned: D5 does not fit in the outer region");
    }

    Rng d1_rng(derive_seed(seed, "disc-d1", 0));
    const double d1_mean = area(discs.d1);
    std::uint64_t attempts = 0;
    std::uint64_t d1_count = 0;
    do {
        d1_count = poisson_variate(d1_rng, d1_mean);
        ++attempts;
    } while (d1_count < static_cast<std::uint64_t>(k) + 1);

    std::vector<Point> pts;
    detail::append_uniform(pts, discs.d1, d1_count, d1_rng);

    const PointSet exterior =
        sample_poisson(outer, exterior_intensity, derive_seed(seed, "disc-exterior", 0));
    for (const auto& p : exterior.points()) {
        if (!discs.d3.contains(p)) pts.push_back(p);
    }
    return ConditionedSample{PointSet(std::move(pts), outer, seed, exterior_intensity), discs,
                             attempts};
}

}  // namespace knnrgg
