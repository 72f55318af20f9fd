#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "parallel.hpp"
#include "sampling.hpp"

namespace knnrgg {

using VertexId = std::uint32_t;
using Edge = std::pair<VertexId, VertexId>;

/// Total order used to rank neighbours: squared distance, then x, then y, then id.
struct NeighbourKey {
    double d2;
    double x;
    double y;
    VertexId id;

    friend bool operator<(const NeighbourKey& a, const NeighbourKey& b) noexcept {
        if (a.d2 != b.d2) return a.d2 < b.d2;
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.id < b.id;
    }
};

inline NeighbourKey neighbour_key(const Point& from, const Point& to, VertexId id) noexcept {
    return NeighbourKey{squared_distance(from, to), to.x, to.y, id};
}

/// Uniform bucket grid over the region of a PointSet. Buckets are stored in
/// CSR form; ids inside a bucket are ascending.
class GridIndex {
public:
    GridIndex(PointSet points, double cell_size) : points_(std::move(points)) {
        if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
            throw std::invalid_argument("GridIndex: cell_size must be positive and finite");
        }
        const Rect& r = points_.region();
        // Very small cells only waste memory; coarsen until the grid has O(m) cells.
        const double limit = 4.0 * static_cast<double>(points_.size()) + 64.0;
        cell_ = cell_size;
        while (true) {
            nx_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r.width() / cell_)));
            ny_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(r.height() / cell_)));
            if (static_cast<double>(nx_) * static_cast<double>(ny_) <= limit) break;
            cell_ *= 2.0;
        }

        start_.assign(nx_ * ny_ + 1, 0);
        std::vector<std::uint32_t> cell_of_point(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto [ix, iy] = cell_of(points_[i]);
            cell_of_point[i] = static_cast<std::uint32_t>(iy * nx_ + ix);
            ++start_[cell_of_point[i] + 1];
        }
        for (std::size_t c = 0; c < nx_ * ny_; ++c) start_[c + 1] += start_[c];
        ids_.resize(points_.size());
        std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points_.size(); ++i) {
            ids_[fill[cell_of_point[i]]++] = static_cast<VertexId>(i);
        }
    }

    const PointSet& points() const noexcept { return points_; }
    double cell_size() const noexcept { return cell_; }
    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }

    std::pair<std::size_t, std::size_t> cell_of(const Point& p) const noexcept {
        const Rect& r = points_.region();
        const auto clamp_index = [](double t, std::size_t n) {
            if (!(t > 0.0)) return std::size_t{0};
            const auto i = static_cast<std::size_t>(t);
            return std::min(i, n - 1);
        };
        return {clamp_index(std::floor((p.x - r.xmin) / cell_), nx_),
                clamp_index(std::floor((p.y - r.ymin) / cell_), ny_)};
    }

    std::span<const VertexId> bucket(std::size_t ix, std::size_t iy) const noexcept {
        const std::size_t c = iy * nx_ + ix;
        return std::span<const VertexId>(ids_).subspan(start_[c], start_[c + 1] - start_[c]);
    }

private:
    PointSet points_;
    double cell_ = 1.0;
    std::size_t nx_ = 1;
    std::size_t ny_ = 1;
    std::vector<std::uint32_t> start_;
    std::vector<VertexId> ids_;
};

inline GridIndex build_index(const PointSet& points, double cell_size) {
    return GridIndex(points, cell_size);
}

inline double default_cell_size(const PointSet& points, int k) {
    const double side = std::max(points.region().width(), points.region().height());
    double cs = std::sqrt(static_cast<double>(std::max(k, 1)));
    if (side > 0.0) cs = std::min(cs, side);
    return cs;
}

/// The min(k, m-1) nearest points to u in NeighbourKey order. Rings of cells
/// around u's cell are scanned until the k-th candidate is strictly closer than
/// anything in an unscanned cell could be.
inline std::vector<VertexId> k_nearest(const GridIndex& index, VertexId u, int k) {
    const PointSet& pts = index.points();
    const std::size_t m = pts.size();
    if (k <= 0 || m <= 1) return {};
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);

    const Point q = pts[u];
    const Rect& region = pts.region();
    const double cs = index.cell_size();
    const auto [cxu, cyu] = index.cell_of(q);
    const auto cx = static_cast<std::ptrdiff_t>(cxu);
    const auto cy = static_cast<std::ptrdiff_t>(cyu);
    const auto nx = static_cast<std::ptrdiff_t>(index.nx());
    const auto ny = static_cast<std::ptrdiff_t>(index.ny());
    // Slack for floor() landing a point one cell over through rounding.
    const double slack = 1e-9 * (cs + std::fabs(region.xmin) + std::fabs(region.xmax) +
                                 std::fabs(region.ymin) + std::fabs(region.ymax));

    std::vector<NeighbourKey> heap;
    heap.reserve(want + 1);
    const auto visit = [&](std::ptrdiff_t ix, std::ptrdiff_t iy) {
        for (VertexId v : index.bucket(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy))) {
            if (v == u) continue;
            const NeighbourKey key = neighbour_key(q, pts[v], v);
            if (heap.size() < want) {
                heap.push_back(key);
                std::push_heap(heap.begin(), heap.end());
            } else if (key < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = key;
                std::push_heap(heap.begin(), heap.end());
            }
        }
    };

    for (std::ptrdiff_t r = 0;; ++r) {
        for (std::ptrdiff_t iy = cy - r; iy <= cy + r; ++iy) {
            if (iy < 0 || iy >= ny) continue;
            if (iy == cy - r || iy == cy + r) {
                for (std::ptrdiff_t ix = std::max<std::ptrdiff_t>(0, cx - r);
                     ix <= std::min(nx - 1, cx + r); ++ix) {
                    visit(ix, iy);
                }
            } else {
                if (cx - r >= 0) visit(cx - r, iy);
                if (r > 0 && cx + r < nx) visit(cx + r, iy);
            }
        }

        const bool left_open = cx - r > 0;
        const bool right_open = cx + r < nx - 1;
        const bool bottom_open = cy - r > 0;
        const bool top_open = cy + r < ny - 1;
        if (!left_open && !right_open && !bottom_open && !top_open) break;
        if (heap.size() < want) continue;

        double lb = std::numeric_limits<double>::infinity();
        if (left_open) lb = std::min(lb, q.x - (region.xmin + static_cast<double>(cx - r) * cs));
        if (right_open) lb = std::min(lb, region.xmin + static_cast<double>(cx + r + 1) * cs - q.x);
        if (bottom_open) lb = std::min(lb, q.y - (region.ymin + static_cast<double>(cy - r) * cs));
        if (top_open) lb = std::min(lb, region.ymin + static_cast<double>(cy + r + 1) * cs - q.y);
        lb -= slack;
        if (lb > 0.0 && heap.front().d2 < lb * lb) break;
    }

    std::sort_heap(heap.begin(), heap.end());
    std::vector<VertexId> out;
    out.reserve(heap.size());
    for (const auto& key : heap) out.push_back(key.id);
    return out;
}

/// Directed k-nearest lists (flat, fixed stride) plus the symmetrized edge set.
class KnnGraph {
public:
    KnnGraph() = default;

    KnnGraph(PointSet points, int k, std::vector<VertexId> out_flat, std::size_t stride)
        : points_(std::move(points)), k_(k), stride_(stride), out_(std::move(out_flat)) {
        edges_.reserve(out_.size());
        for (std::size_t u = 0; u < points_.size(); ++u) {
            for (VertexId v : out_neighbours(static_cast<VertexId>(u))) {
                const auto a = static_cast<VertexId>(u);
                edges_.emplace_back(std::min(a, v), std::max(a, v));
            }
        }
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    }

    const PointSet& points() const noexcept { return points_; }
    int k() const noexcept { return k_; }
    std::size_t vertex_count() const noexcept { return points_.size(); }
    std::size_t out_degree() const noexcept { return stride_; }

    std::span<const VertexId> out_neighbours(VertexId u) const noexcept {
        return std::span<const VertexId>(out_).subspan(u * stride_, stride_);
    }

    /// Sorted, duplicate-free pairs (u, v) with u < v.
    const std::vector<Edge>& undirected_edges() const noexcept { return edges_; }

    bool has_edge(VertexId a, VertexId b) const noexcept {
        const Edge e{std::min(a, b), std::max(a, b)};
        return std::binary_search(edges_.begin(), edges_.end(), e);
    }

    /// The graph for a smaller k, read off as prefixes of the neighbour lists.
    KnnGraph truncated(int k) const {
        if (k > k_) throw std::invalid_argument("KnnGraph::truncated: k exceeds built k");
        const std::size_t m = points_.size();
        const std::size_t stride =
            (k <= 0 || m <= 1) ? 0 : std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);
        std::vector<VertexId> flat;
        flat.reserve(m * stride);
        for (std::size_t u = 0; u < m; ++u) {
            const auto row = out_neighbours(static_cast<VertexId>(u));
            flat.insert(flat.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(stride));
        }
        return KnnGraph(points_, k, std::move(flat), stride);
    }

private:
    PointSet points_;
    int k_ = 0;
    std::size_t stride_ = 0;
    std::vector<VertexId> out_;
    std::vector<Edge> edges_;
};

/// G_{S,k}: every point joined to its k nearest neighbours, edges undirected.
/// A cell_size of 0 selects the default sqrt(k).
inline KnnGraph build_knn_graph(const PointSet& points, int k, double cell_size = 0.0,
                                unsigned workers = 1) {
    if (k < 0) throw std::invalid_argument("build_knn_graph: k must be non-negative");
    const std::size_t m = points.size();
    const std::size_t stride =
        (k == 0 || m <= 1) ? 0 : std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);
    std::vector<VertexId> flat(m * stride);
    if (stride > 0) {
        const GridIndex index(points, cell_size > 0.0 ? cell_size : default_cell_size(points, k));
        parallel_for(m, workers, [&](std::size_t u) {
            const auto nn = k_nearest(index, static_cast<VertexId>(u), k);
            std::copy(nn.begin(), nn.end(), flat.begin() + static_cast<std::ptrdiff_t>(u * stride));
        });
    }
    return KnnGraph(points, k, std::move(flat), stride);
}

/// O(m^2) reference construction with the same tie-break.
inline KnnGraph brute_force_knn(const PointSet& points, int k) {
    if (k < 0) throw std::invalid_argument("brute_force_knn: k must be non-negative");
    const std::size_t m = points.size();
    const std::size_t stride =
        (k == 0 || m <= 1) ? 0 : std::min<std::size_t>(static_cast<std::size_t>(k), m - 1);
    std::vector<VertexId> flat;
    flat.reserve(m * stride);
    std::vector<NeighbourKey> keys;
    for (std::size_t u = 0; u < m && stride > 0; ++u) {
        keys.clear();
        for (std::size_t v = 0; v < m; ++v) {
            if (v != u) keys.push_back(neighbour_key(points[u], points[v], static_cast<VertexId>(v)));
        }
        std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(stride), keys.end());
        for (std::size_t j = 0; j < stride; ++j) flat.push_back(keys[j].id);
    }
    return KnnGraph(points, k, std::move(flat), stride);
}

inline double longest_edge(const KnnGraph& graph) {
    double best = 0.0;
    for (const auto& [a, b] : graph.undirected_edges()) {
        best = std::max(best, squared_distance(graph.points()[a], graph.points()[b]));
    }
    return std::sqrt(best);
}

}  // namespace knnrgg
