#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geometry.hpp"
#include "knn_graph.hpp"
#include "sampling.hpp"

namespace knnrgg {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) noexcept {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) noexcept {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

struct ComponentSummary {
    std::size_t id = 0;
    std::vector<VertexId> vertex_ids;
    std::size_t size = 0;
    Rect bbox;
    double diameter = 0.0;
};

namespace detail {

inline double cross(const Point& o, const Point& a, const Point& b) noexcept {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain; collinear points dropped.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(),
              [](const Point& a, const Point& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t h = 0;
    for (const auto& p : pts) {
        while (h >= 2 && cross(hull[h - 2], hull[h - 1], p) <= 0.0) --h;
        hull[h++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = h + 1; i-- > 0;) {
        while (h >= lower && cross(hull[h - 2], hull[h - 1], pts[i]) <= 0.0) --h;
        hull[h++] = pts[i];
    }
    hull.resize(h - 1);
    return hull;
}

inline double max_pairwise_distance(std::span<const Point> pts) {
    double best = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            best = std::max(best, squared_distance(pts[i], pts[j]));
        }
    }
    return std::sqrt(best);
}

}  // namespace detail

/// Euclidean diameter of a vertex set. Above 1000 vertices the pairwise scan
/// runs over the convex hull only, which contains every diametral pair.
inline double component_diameter(std::span<const VertexId> vertex_ids, const PointSet& points) {
    std::vector<Point> pts;
    pts.reserve(vertex_ids.size());
    for (VertexId v : vertex_ids) pts.push_back(points[v]);
    if (pts.size() > 1000) pts = detail::convex_hull(std::move(pts));
    return detail::max_pairwise_distance(pts);
}

inline double component_diameter(const ComponentSummary& c, const PointSet& points) {
    return component_diameter(c.vertex_ids, points);
}

/// Component index for each vertex; components are numbered by smallest member.
inline std::vector<std::size_t> component_labels(const KnnGraph& graph, std::size_t* count = nullptr) {
    const std::size_t m = graph.vertex_count();
    DisjointSets sets(m);
    for (const auto& [a, b] : graph.undirected_edges()) sets.unite(a, b);
    std::vector<std::size_t> root_label(m, SIZE_MAX);
    std::vector<std::size_t> label(m);
    std::size_t next = 0;
    for (std::size_t v = 0; v < m; ++v) {
        const std::size_t r = sets.find(v);
        if (root_label[r] == SIZE_MAX) root_label[r] = next++;
        label[v] = root_label[r];
    }
    if (count) *count = next;
    return label;
}

inline std::vector<ComponentSummary> components(const KnnGraph& graph) {
    std::size_t count = 0;
    const auto label = component_labels(graph, &count);
    std::vector<ComponentSummary> out(count);
    for (std::size_t c = 0; c < count; ++c) out[c].id = c;
    for (std::size_t v = 0; v < label.size(); ++v) {
        out[label[v]].vertex_ids.push_back(static_cast<VertexId>(v));
    }
    const PointSet& pts = graph.points();
    for (auto& c : out) {
        c.size = c.vertex_ids.size();
        const Point& first = pts[c.vertex_ids.front()];
        c.bbox = Rect{first.x, first.x, first.y, first.y};
        for (VertexId v : c.vertex_ids) {
            c.bbox.xmin = std::min(c.bbox.xmin, pts[v].x);
            c.bbox.xmax = std::max(c.bbox.xmax, pts[v].x);
            c.bbox.ymin = std::min(c.bbox.ymin, pts[v].y);
            c.bbox.ymax = std::max(c.bbox.ymax, pts[v].y);
        }
        c.diameter = component_diameter(c.vertex_ids, pts);
    }
    return out;
}

/// Graphs on at most one vertex count as connected.
inline bool is_connected(const KnnGraph& graph) {
    if (graph.vertex_count() <= 1) return true;
    std::size_t count = 0;
    component_labels(graph, &count);
    return count == 1;
}

enum class EventKind { A, APrime, B, BPrime };

inline std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::A: return "A";
        case EventKind::APrime: return "A'";
        case EventKind::B: return "B";
        case EventKind::BPrime: return "B'";
    }
    return "?";
}

inline EventKind parse_event_kind(std::string_view s) {
    if (s == "A") return EventKind::A;
    if (s == "A'" || s == "Aprime" || s == "A-prime") return EventKind::APrime;
    if (s == "B") return EventKind::B;
    if (s == "B'" || s == "Bprime" || s == "B-prime") return EventKind::BPrime;
    throw std::invalid_argument("unknown event kind: " + std::string(s));
}

struct EventSpec {
    EventKind kind = EventKind::A;
    int M = 1;
    int k = 0;

    void validate() const {
        if (M < 1) throw std::invalid_argument("EventSpec: M must be >= 1");
        if (k < 0) throw std::invalid_argument("EventSpec: k must be >= 0");
    }
};

struct EventRegions {
    Rect outer;
    Rect inner;
};

/// S = [-L/2, L/2]^2 for A-type events and R = [0, L] x [-L/2, L/2] for B-type,
/// with L = M sqrt(k). Inner regions are the outer scaled about the origin by
/// 1/2 (A, B) or 3/4 (A', B'), so R and its inner regions share the left edge.
/// k = 0 would give empty regions and takes L = M instead.
inline EventRegions event_regions(const EventSpec& spec) {
    spec.validate();
    const double side = spec.M * std::sqrt(static_cast<double>(std::max(spec.k, 1)));
    const bool square = spec.kind == EventKind::A || spec.kind == EventKind::APrime;
    const Rect outer = square ? Rect::centred_square(side) : Rect{0.0, side, -0.5 * side, 0.5 * side};
    const double scale = (spec.kind == EventKind::A || spec.kind == EventKind::B) ? 0.5 : 0.75;
    return EventRegions{outer, outer.scaled_about_origin(scale)};
}

/// True iff some component lies entirely inside the inner region (closed).
/// An empty point set has no component, so the event is false.
inline bool event_small_component(const KnnGraph& graph, const EventSpec& spec) {
    const Rect inner = event_regions(spec).inner;
    std::size_t count = 0;
    const auto label = component_labels(graph, &count);
    std::vector<char> outside(count, 0);
    const PointSet& pts = graph.points();
    for (std::size_t v = 0; v < label.size(); ++v) {
        if (!inner.contains(pts[v])) outside[label[v]] = 1;
    }
    return std::find(outside.begin(), outside.end(), 0) != outside.end();
}

/// Number of net points t = ceil(3 pi / eps) on the boundary of D3.
inline int condition_iii_net_size(double eps_net) {
    if (!(eps_net > 0.0) || eps_net >= 2.0) {
        throw std::invalid_argument("condition III: eps_net must lie in (0, 2)");
    }
    return static_cast<int>(std::ceil(3.0 * std::numbers::pi / eps_net));
}

/// Condition (III) of the disc construction, checked through an eps-net:
/// t = ceil(3 pi / eps) equally spaced points x_i on the boundary of D3, and for
/// each the disc of radius (2 - eps) r about x_i must hold at least k + 1
/// points of D5 \ D3. Every boundary point lies within eps r of some x_i, so the
/// radius-2r disc about it contains one of the checked discs.
inline bool check_condition_III(const PointSet& points, int k, Point center,
                                double eps_net = 0.05) {
    const int t = condition_iii_net_size(eps_net);
    const DiscTriple discs = DiscTriple::for_k(k, center);
    const Annulus ring{center, discs.d3.radius, discs.d5.radius};
    std::vector<Point> candidates;
    for (const auto& p : points.points()) {
        if (ring.contains(p)) candidates.push_back(p);
    }
    const auto need = static_cast<std::size_t>(k) + 1;
    if (candidates.size() < need) return false;

    const double probe = (2.0 - eps_net) * discs.r();
    const double probe2 = probe * probe;
    for (int i = 0; i < t; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / t;
        const Point x{center.x + discs.d3.radius * std::cos(phi),
                      center.y + discs.d3.radius * std::sin(phi)};
        std::size_t hits = 0;
        for (const auto& p : candidates) {
            if (squared_distance(x, p) <= probe2 && ++hits >= need) break;
        }
        if (hits < need) return false;
    }
    return true;
}

}  // namespace knnrgg
