#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "knnrgg/analytic_bounds.hpp"
#include "knnrgg/configuration.hpp"
#include "knnrgg/knn_graph.hpp"
#include "knnrgg/rng.hpp"
#include "knnrgg/sampling.hpp"

using namespace knnrgg;

namespace {

Configuration random_configuration(const Tiling& t, std::uint64_t seed, int max_units) {
    Rng rng(seed);
    Configuration c = uniform_configuration(t, Label::zero());
    for (auto& d : c.labels) {
        int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(max_units) + 1));
        while (u > 0 && !is_realizable(Label{u}, t.k, t.N)) --u;
        d = Label{u};
    }
    return c;
}

// Largest label sum over all circles, one annulus at a time.
double naive_max_load(const Configuration& config) {
    double best = 0.0;
    for (const auto& circle : circle_family(config.tiling)) {
        double sum = 0.0;
        for (CellIndex q : build_annulus_squares(config.tiling, circle).cells) sum += config.labels[q].value(config.tiling.N);
        best = std::max(best, sum);
    }
    return best;
}

// Largest distance from a point of the cell to the circle, from the corners and the nearest point.
double cell_distance_to_circle(const Tiling& t, CellIndex q, const Circle& circle) {
    const double cx = t.column(circle.center);
    const double cy = t.row(circle.center);
    const double x0 = t.column(q) - 0.5;
    const double y0 = t.row(q) - 0.5;
    const double R = circle.radius();
    double far = 0.0;
    for (double x : {x0, x0 + 1}) {
        for (double y : {y0, y0 + 1}) far = std::max(far, std::hypot(x - cx, y - cy) - R);
    }
    const double nx = std::clamp(cx, x0, x0 + 1);
    const double ny = std::clamp(cy, y0, y0 + 1);
    return std::max(far, R - std::hypot(nx - cx, ny - cy));
}

}  // namespace

TEST(Tile, Examples) {
    const auto a = tile(1, 1, 4);
    EXPECT_EQ(a.cell_count(), 1u);
    EXPECT_DOUBLE_EQ(a.ell, 2.0);
    const auto b = tile(2, 3, 9);
    EXPECT_EQ(b.cell_count(), 36u);
    EXPECT_DOUBLE_EQ(b.ell, 1.0);
    double total = 0.0;
    for (CellIndex c = 0; c < b.cell_count(); ++c) total += area(b.cell_rect(c));
    EXPECT_NEAR(total, 4.0 * 9.0, 1e-9);
    EXPECT_THROW(tile(0, 1, 1), std::invalid_argument);
    EXPECT_THROW(tile(1, 1, 0), std::invalid_argument);
}

TEST(Tile, CellOfInvertsCellRect) {
    const auto t = tile(3, 4, 16);
    for (CellIndex c = 0; c < t.cell_count(); ++c) {
        EXPECT_EQ(t.cell_of(t.cell_center(c)), c);
        EXPECT_TRUE(t.region.contains(t.cell_rect(c)));
    }
}

TEST(Tile, CentralSquareCells) {
    const auto t = tile(8, 2, 4);
    int inside = 0;
    for (CellIndex c = 0; c < t.cell_count(); ++c) {
        const Rect r = t.cell_rect(c);
        const bool geometric = t.region.scaled_about_origin(0.5).contains(r);
        EXPECT_EQ(t.cell_in_central_square(c), geometric);
        inside += geometric ? 1 : 0;
    }
    EXPECT_EQ(inside, 64);
}

TEST(Label, Examples) {
    EXPECT_EQ(label_for_count(0, 8, 2), Label::zero());
    EXPECT_EQ(label_for_count(3, 8, 2), Label{3});
    EXPECT_DOUBLE_EQ(label_for_count(3, 8, 2).value(2), 1.5);
    EXPECT_EQ(label_for_count(9, 8, 2), Label::infinite());
    EXPECT_EQ(label_for_count(8, 8, 2), Label{8});
}

TEST(CountInterval, Examples) {
    const auto z = count_interval(Label::zero(), 8, 2);
    EXPECT_EQ(z.rmin, 0);
    EXPECT_EQ(z.rmax, 0);
    const auto a = count_interval(Label{3}, 8, 2);
    EXPECT_EQ(a.rmin, 3);
    EXPECT_EQ(a.rmax, 3);
    EXPECT_TRUE(count_interval(Label{3}, 1, 4).empty());
    EXPECT_THROW(count_interval(Label::infinite(), 8, 2), std::invalid_argument);
    EXPECT_EQ(min_count(Label::infinite(), 8, 2), 9);
}

TEST(CountInterval, InvertsLabelling) {
    for (int N : {1, 2, 3, 5}) {
        for (int k : {1, 7, 27, 64, 300}) {
            for (std::int64_t r = 0; r <= k; ++r) {
                const Label d = label_for_count(r, k, N);
                EXPECT_TRUE(count_interval(d, k, N).contains(r)) << N << " " << k << " " << r;
            }
            const std::int32_t top = N * N * N;
            for (std::int32_t u = 0; u <= top; ++u) {
                const auto iv = count_interval(Label{u}, k, N);
                for (std::int64_t r = iv.rmin; r <= iv.rmax; ++r) EXPECT_EQ(label_for_count(r, k, N), Label{u});
            }
        }
    }
}

TEST(LabelConfiguration, RoundTripOnPoissonSamples) {
    const auto t = tile(2, 3, 27);
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto pts = sample_poisson(t.region, 1.0, derive_seed(4, "roundtrip", s));
        const auto counts = cell_counts(pts, t);
        const auto config = label_configuration(pts, t);
        for (CellIndex c = 0; c < t.cell_count(); ++c) {
            if (config.labels[c].is_infinite()) {
                ASSERT_GT(counts[c], t.k);
            } else {
                ASSERT_TRUE(count_interval(config.labels[c], t.k, t.N).contains(counts[c]));
            }
        }
    }
}

TEST(SampleConsistent, RelabelsToTheConfiguration) {
    const auto t = tile(3, 2, 8);
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto config = random_configuration(t, s, 8);
        if (s % 5 == 0) config.labels[s % t.cell_count()] = Label::infinite();
        EXPECT_EQ(label_configuration(sample_consistent(config, s), t).labels, config.labels);
    }
}

TEST(TypeA, Examples) {
    const auto t = tile(1, 21, 1);
    auto config = uniform_configuration(t, Label::zero());
    EXPECT_FALSE(is_type_A(config));
    config.labels[7] = Label::infinite();
    EXPECT_TRUE(is_type_A(config));
    config.labels[7] = Label{22 * 21};
    EXPECT_TRUE(is_type_A(config));
    config.labels[7] = Label{21 * 21};
    EXPECT_FALSE(is_type_A(config));
    EXPECT_TRUE(is_type_A(config, 20.0));
}

TEST(AnnulusSquares, SmallRadiusGivesBlob) {
    const auto t = tile(2, 5, 25);
    const CellIndex centre = t.index(5, 5);
    for (std::int64_t r2 : {1, 2, 4}) {
        const Circle circle{centre, r2};
        const auto cells = build_annulus_squares(t, circle).cells;
        EXPECT_NE(std::find(cells.begin(), cells.end(), centre), cells.end());
        for (CellIndex q = 0; q < t.cell_count(); ++q) {
            const bool expected = cell_distance_to_circle(t, q, circle) <= kAnnulusHalfWidth;
            EXPECT_EQ(std::find(cells.begin(), cells.end(), q) != cells.end(), expected);
        }
    }
}

TEST(AnnulusSquares, MatchesGeometryAndSizeBound) {
    for (auto [M, N] : {std::pair{1, 6}, std::pair{2, 4}, std::pair{3, 3}}) {
        const auto t = tile(M, N, N * N);
        const auto family = circle_family(t);
        EXPECT_LE(family.size(), static_cast<std::size_t>(std::pow(M * N, 4)));
        for (const auto& circle : family) {
            const auto cells = build_annulus_squares(t, circle).cells;
            EXPECT_LE(cells.size(), static_cast<std::size_t>(30 * M * N));
            for (CellIndex q : cells) EXPECT_LE(cell_distance_to_circle(t, q, circle), kAnnulusHalfWidth + 1e-12);
        }
    }
}

TEST(AnnulusSquares, ExcludesCellAtThreeRootTwo) {
    const auto t = tile(4, 5, 25);
    const Circle circle{t.index(2, 2), 9};
    // Cell centre (2 + 3 + 5, 2): its nearest point is 4.5 from the circle, its farthest more.
    const auto cells = build_annulus_squares(t, circle).cells;
    EXPECT_EQ(std::find(cells.begin(), cells.end(), t.index(10, 2)), cells.end());
    // Diagonal cell whose centre lies 5 sqrt 2 - 3 (about 4.07) beyond the circle.
    EXPECT_EQ(std::find(cells.begin(), cells.end(), t.index(2 + 5, 2 + 5)), cells.end());
}

TEST(CircleFamily, OneCirclePerRadiusAndCentre) {
    const auto t = tile(1, 3, 9);
    const auto family = circle_family(t);
    // Corner centre: squared radii {1, 2, 4, 5, 8}; edge centre: {1, 2, 4, 5};
    // middle: {1, 2}. Four corners, four edges, one middle.
    EXPECT_EQ(family.size(), 4u * 5 + 4u * 4 + 2u);
}

TEST(TypeB, AllZeroIsNotTypeB) {
    EXPECT_FALSE(is_type_B(uniform_configuration(tile(2, 4, 64), Label::zero()), 0.4));
}

TEST(TypeB, FilledAnnulusIsTypeB) {
    const auto t = tile(2, 4, 64);
    const double eps = 0.4;
    const Circle circle{t.index(3, 3), 9};
    const auto cells = build_annulus_squares(t, circle).cells;
    ASSERT_FALSE(cells.empty());
    // Spread eps N^2 / 2 over the annulus, one label unit of margin per cell.
    const double need = eps * t.N * t.N / 2.0;
    const int units = static_cast<int>(std::ceil(need * t.N / cells.size())) + 1;
    auto config = uniform_configuration(t, Label::zero());
    for (CellIndex q : cells) config.labels[q] = Label{units};
    EXPECT_TRUE(is_type_B(config, eps));
    EXPECT_GE(max_annulus_load(config).max_label_sum, need);
}

TEST(TypeB, InfiniteLabelForcesTypeB) {
    const auto t = tile(2, 4, 64);
    auto config = uniform_configuration(t, Label::zero());
    config.labels[10] = Label::infinite();
    EXPECT_TRUE(is_type_B(config, 0.1));
}

TEST(TypeB, SparseConfigurationIsNotTypeB) {
    const auto t = tile(2, 4, 64);
    auto config = uniform_configuration(t, Label::zero());
    config.labels[0] = Label{1};
    config.labels[t.cell_count() - 1] = Label{1};
    // Total mass 2/N = 0.5 < eps N^2 / 2 = 3.2.
    EXPECT_FALSE(is_type_B(config, 0.4));
}

TEST(TypeB, DensityOneIsTypeBAtDeskScale) {
    const auto t = tile(6, 8, 64);
    EXPECT_TRUE(is_type_B(uniform_configuration(t, Label{8}), 0.4));
}

TEST(TypeB, SweepMatchesNaiveScan) {
    for (auto [M, N] : {std::pair{1, 5}, std::pair{2, 3}, std::pair{2, 4}}) {
        const auto t = tile(M, N, N * N * N);
        for (std::uint64_t s = 0; s < 6; ++s) {
            const auto config = random_configuration(t, derive_seed(M * 10 + N, "sweep", s), 2 * N);
            EXPECT_NEAR(max_annulus_load(config).max_label_sum, naive_max_load(config), 1e-9);
        }
    }
}

TEST(TypeB, RejectsEpsOutOfRange) {
    const auto config = uniform_configuration(tile(1, 2, 8), Label::zero());
    EXPECT_THROW(is_type_B(config, 0.0), std::invalid_argument);
    EXPECT_THROW(is_type_B(config, 0.5), std::invalid_argument);
}

TEST(Theta, Examples) {
    EXPECT_EQ(theta(uniform_configuration(tile(3, 4, 16), Label{4})), 0.0);

    const auto t = tile(4, 4, 16);
    auto config = uniform_configuration(t, Label{4});
    for (CellIndex c = 0; c < 8 * 16; ++c) config.labels[c] = Label::zero();
    EXPECT_NEAR(theta(config), 8.0, 1e-12);

    auto single = uniform_configuration(t, Label{4});
    single.labels[5] = Label{8};
    const double rho = 1.75;
    EXPECT_NEAR(theta(single), (rho * std::log(rho) - rho + 1.0) / 16.0, 1e-15);
    EXPECT_NEAR(theta(single), 0.01433, 1e-5);

    single.labels[5] = Label::infinite();
    EXPECT_THROW(theta(single), std::invalid_argument);
}

TEST(Theta, NonNegativeAndZeroOnlyAtDensityOne) {
    const auto t = tile(2, 3, 27);
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto config = random_configuration(t, derive_seed(7, "theta", s), 27);
        const double th = theta(config);
        EXPECT_GE(th, 0.0);
        const bool all_one = std::all_of(config.labels.begin(), config.labels.end(),
                                         [&](Label d) { return effective_density(d, t.N) == 1.0; });
        EXPECT_EQ(th == 0.0, all_one);
    }
    // Label 1 + 1/N has effective density exactly 1.
    EXPECT_EQ(theta(uniform_configuration(t, Label{4})), 0.0);
}

TEST(ConfigurationCount, Examples) {
    EXPECT_EQ(configuration_count(1, 1), 3);
    EXPECT_EQ(configuration_count(1, 2), 10000);
    EXPECT_EQ(configuration_count(2, 1), 81);
    EXPECT_EQ(configuration_count(2, 2).str().size(), 17u);  // 10^16
}

TEST(NoEdgeCertificate, Examples) {
    const auto t = tile(4, 2, 8);
    auto config = uniform_configuration(t, Label{2});
    EXPECT_FALSE(no_edge_certificate(config, t.index(3, 3), t.index(4, 3)));
    EXPECT_TRUE(no_edge_certificate(config, t.index(0, 0), t.index(7, 7)));
    config.labels[t.index(3, 3)] = Label::zero();
    EXPECT_TRUE(no_edge_certificate(config, t.index(3, 3), t.index(4, 3)));
    EXPECT_THROW(no_edge_certificate(config, 1, 1), std::invalid_argument);
}

// Every certified pair, checked against graphs of 100 consistent point sets.
TEST(NoEdgeCertificate, NoEdgesOnConsistentSamples) {
    const auto t = tile(4, 2, 8);
    const auto config = random_configuration(t, 11, 4);
    std::vector<std::pair<CellIndex, CellIndex>> certified;
    for (CellIndex a = 0; a < t.cell_count(); ++a) {
        for (CellIndex b = a + 1; b < t.cell_count(); ++b) {
            if (!config.labels[a].is_zero() && !config.labels[b].is_zero() && no_edge_certificate(config, a, b)) {
                certified.emplace_back(a, b);
            }
        }
    }
    ASSERT_GT(certified.size(), 100u);
    std::vector<char> pair_ok(t.cell_count() * t.cell_count(), 0);
    for (auto [a, b] : certified) pair_ok[a * t.cell_count() + b] = pair_ok[b * t.cell_count() + a] = 1;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto pts = sample_consistent(config, derive_seed(12, "noedge", s));
        const auto g = build_knn_graph(pts, t.k);
        for (const auto& [u, v] : g.undirected_edges()) {
            const CellIndex a = t.cell_of(pts[u]);
            const CellIndex b = t.cell_of(pts[v]);
            ASSERT_FALSE(pair_ok[a * t.cell_count() + b]) << "edge between certified cells " << a << " " << b;
        }
    }
}

TEST(NoEdgeCertificate, SurvivesExteriorAugmentation) {
    const auto t = tile(5, 2, 8);
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        auto config = random_configuration(t, derive_seed(22, "aug", trial), 4);
        const auto a = static_cast<CellIndex>(rng.below(t.cell_count()));
        const auto b = static_cast<CellIndex>(rng.below(t.cell_count()));
        if (a == b || !no_edge_certificate(config, a, b)) continue;
        const double d = std::hypot(t.column(a) - t.column(b), t.row(a) - t.row(b));
        for (CellIndex q = 0; q < t.cell_count(); ++q) {
            const double dmin = detail::cell_min_distance(t.column(q) - t.column(a), t.row(q) - t.row(a));
            if (dmin > d + kAnnulusHalfWidth && rng.below(2) == 0) {
                const int u = config.labels[q].units + 2;
                config.labels[q] = u > 8 ? Label::infinite() : Label{u};
            }
        }
        EXPECT_TRUE(no_edge_certificate(config, a, b));
    }
}

TEST(Json, RoundTrip) {
    const auto t = tile(2, 3, 27);
    auto config = random_configuration(t, 5, 27);
    config.labels[4] = Label::infinite();
    const CellSet T{9, 2, 3, 2};
    const auto [back, backT] = configuration_from_json(nlohmann::json::parse(configuration_to_json(config, T).dump()));
    EXPECT_EQ(back.tiling, config.tiling);
    EXPECT_EQ(back.labels, config.labels);
    EXPECT_EQ(backT, (CellSet{2, 3, 9}));
    auto bad = configuration_to_json(config, T);
    bad["labels"].erase(0);
    EXPECT_THROW(configuration_from_json(bad), std::invalid_argument);
    bad = configuration_to_json(config, CellSet{1000});
    EXPECT_THROW(configuration_from_json(bad), std::invalid_argument);
}

TEST(Refine, PreservesDensity) {
    const auto t = tile(2, 3, 27);
    const auto config = random_configuration(t, 8, 9);
    const CellSet T{0, 7};
    const auto [fine, fineT] = refine_configuration(config, T, 2);
    EXPECT_EQ(fine.tiling.N, 6);
    EXPECT_EQ(fineT.size(), 8u);
    for (CellIndex q = 0; q < fine.tiling.cell_count(); ++q) {
        const CellIndex parent = t.cell_of(fine.tiling.cell_center(q));
        EXPECT_DOUBLE_EQ(fine.labels[q].value(6), config.labels[parent].value(3));
    }
    // Below density one the cell term has no grid shift, so theta carries over.
    auto low = config;
    for (auto& d : low.labels) {
        if (d.is_infinite() || d.units > 3) d = Label{3};
    }
    EXPECT_NEAR(theta(refine_configuration(low, T, 2).first), theta(low), 1e-12);
}

// Frequencies under Poisson sampling against the analytic bounds. At desk scale
// the Type B bound is vacuous (1); the Type A bound is not.
TEST(BadConfigurations, FrequencyBelowBounds) {
    const int M = 6;
    const int N = 8;
    const int k = 1024;
    const double eps = 0.4;
    const auto t = tile(M, N, k);
    const int samples = 40;
    int type_a = 0;
    int type_b = 0;
    for (int s = 0; s < samples; ++s) {
        const auto config = label_configuration(sample_poisson(t.region, 1.0, derive_seed(30, "bad", s)), t);
        type_a += is_type_A(config) ? 1 : 0;
        type_b += is_type_B(config, eps) ? 1 : 0;
    }
    const double bound_a = type_a_probability_bound(M, N, k);
    const double bound_b = type_b_probability_bound(M, N, k, eps);
    EXPECT_LT(bound_a, 1e-4);
    EXPECT_EQ(type_a, 0);
    EXPECT_LE(static_cast<double>(type_a + type_b) / samples, bound_a + bound_b);
}
