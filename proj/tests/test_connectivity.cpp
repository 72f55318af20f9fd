#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "knnrgg/connectivity.hpp"
#include "knnrgg/estimate.hpp"
#include "knnrgg/knn_graph.hpp"
#include "knnrgg/sampling.hpp"

using namespace knnrgg;

namespace {

PointSet make_points(std::vector<Point> pts, Rect region = Rect{-200, 200, -200, 200}) {
    return PointSet(std::move(pts), region, 0, 1.0);
}

double brute_diameter(const std::vector<Point>& pts) {
    double best = 0.0;
    for (const auto& a : pts) {
        for (const auto& b : pts) best = std::max(best, distance(a, b));
    }
    return best;
}

}  // namespace

TEST(Components, EmptyGraph) { EXPECT_TRUE(components(build_knn_graph(make_points({}), 3)).empty()); }

TEST(Components, CompleteWhenFewPoints) {
    const auto pts = make_points({Point{0, 0}, Point{10, 0}, Point{0, 50}, Point{-30, 2}});
    const auto cs = components(build_knn_graph(pts, 3));
    ASSERT_EQ(cs.size(), 1u);
    EXPECT_EQ(cs[0].size, 4u);
}

TEST(Components, TwoSeparatedClusters) {
    std::vector<Point> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(Point{0.2 * i, 0.1 * (i % 2)});
    for (int i = 0; i < 5; ++i) pts.push_back(Point{100.0 + 0.2 * i, 0.1 * (i % 3)});
    const auto set = make_points(pts);
    const auto g = build_knn_graph(set, 4);
    const auto cs = components(g);
    ASSERT_EQ(cs.size(), 2u);
    EXPECT_EQ(cs[0].size, 5u);
    EXPECT_EQ(cs[1].size, 5u);
    // Brute-force cross-check: no edge between the clusters.
    const auto brute = brute_force_knn(set, 4);
    for (const auto& [a, b] : brute.undirected_edges()) EXPECT_EQ(a < 5, b < 5);
}

TEST(Components, PartitionVertices) {
    const auto pts = sample_poisson(Rect{0, 40, 0, 40}, 1.0, 77);
    const auto cs = components(build_knn_graph(pts, 2));
    std::vector<int> seen(pts.size(), 0);
    std::size_t total = 0;
    for (const auto& c : cs) {
        EXPECT_EQ(c.size, c.vertex_ids.size());
        EXPECT_GE(c.size, 1u);
        EXPECT_EQ(c.diameter == 0.0, c.size == 1 || std::all_of(c.vertex_ids.begin(), c.vertex_ids.end(), [&](VertexId v) {
                                          return pts[v] == pts[c.vertex_ids[0]];
                                      }));
        total += c.size;
        for (VertexId v : c.vertex_ids) {
            ++seen[v];
            EXPECT_TRUE(c.bbox.contains(pts[v]));
        }
    }
    EXPECT_EQ(total, pts.size());
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST(ComponentDiameter, Examples) {
    const auto pts = make_points({Point{0, 0}, Point{7, 0}, Point{0, 1}, Point{1, 1}, Point{1, 0}});
    const std::vector<VertexId> single{0};
    const std::vector<VertexId> pair{0, 1};
    const std::vector<VertexId> square{0, 2, 3, 4};
    EXPECT_EQ(component_diameter(single, pts), 0.0);
    EXPECT_DOUBLE_EQ(component_diameter(pair, pts), 7.0);
    EXPECT_DOUBLE_EQ(component_diameter(square, pts), std::numbers::sqrt2);
}

TEST(ComponentDiameter, HullRouteMatchesBruteForce) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto pts = sample_poisson(Rect{0, 40, 0, 60}, 1.0, seed);
        ASSERT_GT(pts.size(), 1000u);
        std::vector<VertexId> all(pts.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<VertexId>(i);
        const std::vector<Point> raw(pts.points().begin(), pts.points().end());
        EXPECT_DOUBLE_EQ(component_diameter(all, pts), brute_diameter(raw));
    }
}

TEST(EventRegions, Examples) {
    const auto a = event_regions(EventSpec{EventKind::A, 8, 4});
    EXPECT_DOUBLE_EQ(a.outer.width(), 16.0);
    EXPECT_DOUBLE_EQ(a.inner.width(), 8.0);
    EXPECT_DOUBLE_EQ(a.outer.xmin + a.outer.xmax, 0.0);
    EXPECT_DOUBLE_EQ(a.inner.ymin + a.inner.ymax, 0.0);

    const auto ap = event_regions(EventSpec{EventKind::APrime, 8, 4});
    EXPECT_DOUBLE_EQ(ap.inner.width(), 12.0);
    EXPECT_DOUBLE_EQ(area(ap.inner), 144.0);

    const auto b = event_regions(EventSpec{EventKind::B, 8, 4});
    EXPECT_DOUBLE_EQ(b.outer.xmin, 0.0);
    EXPECT_DOUBLE_EQ(b.outer.xmax, 16.0);
    EXPECT_DOUBLE_EQ(b.outer.ymin, -8.0);
    EXPECT_DOUBLE_EQ(b.inner.xmin, 0.0);
    EXPECT_DOUBLE_EQ(b.inner.xmax, 8.0);
    EXPECT_DOUBLE_EQ(b.inner.ymax, 4.0);

    const auto bp = event_regions(EventSpec{EventKind::BPrime, 8, 4});
    EXPECT_DOUBLE_EQ(bp.inner.xmax, 12.0);
    EXPECT_DOUBLE_EQ(bp.inner.ymin, -6.0);

    EXPECT_THROW(event_regions(EventSpec{EventKind::A, 0, 4}), std::invalid_argument);
    EXPECT_THROW(event_regions(EventSpec{EventKind::A, 1, -1}), std::invalid_argument);
}

TEST(EventKind, ParseAndPrint) {
    for (EventKind k : {EventKind::A, EventKind::APrime, EventKind::B, EventKind::BPrime}) {
        EXPECT_EQ(parse_event_kind(to_string(k)), k);
    }
    EXPECT_EQ(parse_event_kind("Aprime"), EventKind::APrime);
    EXPECT_THROW(parse_event_kind("C"), std::invalid_argument);
}

TEST(EventSmallComponent, EmptyAndSingleton) {
    const EventSpec spec{EventKind::A, 8, 4};
    const Rect outer = event_regions(spec).outer;
    EXPECT_FALSE(event_small_component(build_knn_graph(make_points({}, outer), 4), spec));
    EXPECT_TRUE(event_small_component(build_knn_graph(make_points({Point{0, 0}}, outer), 4), spec));
    EXPECT_FALSE(event_small_component(build_knn_graph(make_points({Point{7.9, 0}}, outer), 4), spec));
}

TEST(EventSmallComponent, InnerBoundaryCountsAsInside) {
    const EventSpec spec{EventKind::A, 8, 4};
    const Rect outer = event_regions(spec).outer;
    EXPECT_TRUE(event_small_component(build_knn_graph(make_points({Point{4.0, -4.0}}, outer), 1), spec));
}

TEST(EventRegions, KZeroUsesUnitScale) {
    const auto r = event_regions(EventSpec{EventKind::A, 6, 0});
    EXPECT_DOUBLE_EQ(r.outer.width(), 6.0);
}

TEST(EventNesting, PerSampleImplications) {
    const int k = 2;
    const int M = 8;
    const EventKind square[] = {EventKind::A, EventKind::APrime};
    const EventKind boundary[] = {EventKind::B, EventKind::BPrime};
    const auto s = event_outcomes(M, k, square, 300, 12);
    const auto r = event_outcomes(M, k, boundary, 300, 12);
    for (std::size_t i = 0; i < 300; ++i) {
        EXPECT_LE(s[0][i], s[1][i]);
        EXPECT_LE(r[0][i], r[1][i]);
    }
    EXPECT_THROW(event_outcomes(M, k, std::vector<EventKind>{EventKind::A, EventKind::B}, 1, 1), std::invalid_argument);
}

TEST(ConnectivityMonotone, ConnectedAtKImpliesAtKPlusOne) {
    for (std::uint64_t t = 0; t < 50; ++t) {
        const auto pts = sample_poisson(Rect::centred_square(30.0), 1.0, derive_seed(3, "mono", t));
        const auto g = build_knn_graph(pts, 10);
        for (int k = 0; k < 10; ++k) {
            if (connected_at(g, k)) {
                EXPECT_TRUE(connected_at(g, k + 1));
            }
            EXPECT_EQ(connected_at(g, k), is_connected(g.truncated(k)));
        }
    }
}

TEST(ConditionIII, EmptyRegionFails) {
    EXPECT_FALSE(check_condition_III(make_points({}), 3, Point{0, 0}));
    EXPECT_THROW(condition_iii_net_size(0.0), std::invalid_argument);
    EXPECT_EQ(condition_iii_net_size(0.05), 189);
}

TEST(ConditionIII, DenseExteriorAlmostAlwaysPasses) {
    const int k = 4;
    const Rect outer = event_regions(EventSpec{EventKind::A, 8, k}).outer;
    int passes = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        const auto cs = sample_disc_conditioned(k, outer, Point{0, 0}, derive_seed(8, "dense", t), 3.0);
        passes += check_condition_III(cs.points, k, Point{0, 0}) ? 1 : 0;
    }
    EXPECT_GT(static_cast<double>(passes) / trials, 0.99);
}

TEST(ConditionIII, PassingSamplesIsolateTheInnerDisc) {
    int checked = 0;
    for (int k = 1; k <= 5; ++k) {
        const EventSpec spec{EventKind::A, 8, k};
        const Rect outer = event_regions(spec).outer;
        for (int t = 0; t < 60; ++t) {
            const auto cs = sample_disc_conditioned(k, outer, Point{0, 0}, derive_seed(k, "iso", t));
            if (!check_condition_III(cs.points, k, Point{0, 0})) continue;
            ++checked;
            const auto g = build_knn_graph(cs.points, k);
            EXPECT_TRUE(event_small_component(g, spec));
            for (const auto& [a, b] : g.undirected_edges()) {
                const bool ia = cs.discs.d1.contains(cs.points[a]);
                const bool ib = cs.discs.d1.contains(cs.points[b]);
                if (ia != ib) ADD_FAILURE() << "edge leaves D1 at k=" << k;
            }
        }
    }
    EXPECT_GT(checked, 0);
}
