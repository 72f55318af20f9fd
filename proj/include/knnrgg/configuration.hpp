#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

#include "geometry.hpp"
#include "sampling.hpp"

namespace knnrgg {

using CellIndex = std::uint32_t;

/// (MN)^2 square cells of side ell = sqrt(k)/N covering S = [-M sqrt(k)/2, M sqrt(k)/2]^2.
/// Cell (i, j) has column i (x) and row j (y), both counted from the lower-left
/// corner; its flat index is j * side + i.
struct Tiling {
    int M = 1;
    int N = 1;
    int k = 1;
    double ell = 1.0;
    Rect region;

    int side() const noexcept { return M * N; }
    std::size_t cell_count() const noexcept {
        return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
    }
    CellIndex index(int i, int j) const noexcept { return static_cast<CellIndex>(j * side() + i); }
    int column(CellIndex c) const noexcept { return static_cast<int>(c) % side(); }
    int row(CellIndex c) const noexcept { return static_cast<int>(c) / side(); }

    Rect cell_rect(CellIndex c) const noexcept {
        const double x0 = region.xmin + column(c) * ell;
        const double y0 = region.ymin + row(c) * ell;
        return Rect{x0, x0 + ell, y0, y0 + ell};
    }

    Point cell_center(CellIndex c) const noexcept {
        return Point{region.xmin + (column(c) + 0.5) * ell, region.ymin + (row(c) + 0.5) * ell};
    }

    /// Cell containing p (points on shared edges go to the upper/right cell,
    /// points on the outer boundary to the adjacent edge cell).
    CellIndex cell_of(const Point& p) const noexcept {
        const auto clamp_index = [this](double t) {
            const int i = static_cast<int>(std::floor(t));
            return std::clamp(i, 0, side() - 1);
        };
        return index(clamp_index((p.x - region.xmin) / ell), clamp_index((p.y - region.ymin) / ell));
    }

    /// Whether the cell lies in the closed central square S' = S/2. Exact: in
    /// cell units S' spans [side/4, 3 side/4].
    bool cell_in_central_square(CellIndex c) const noexcept {
        const int s = side();
        const int i = column(c);
        const int j = row(c);
        return 4 * i >= s && 4 * (i + 1) <= 3 * s && 4 * j >= s && 4 * (j + 1) <= 3 * s;
    }

    friend bool operator==(const Tiling& a, const Tiling& b) noexcept {
        return a.M == b.M && a.N == b.N && a.k == b.k;
    }
};

inline Tiling tile(int M, int N, int k) {
    if (M < 1 || N < 1 || k < 1) throw std::invalid_argument("tile: M, N, k must be >= 1");
    const double side = M * std::sqrt(static_cast<double>(k));
    return Tiling{M, N, k, std::sqrt(static_cast<double>(k)) / N, Rect::centred_square(side)};
}

/// Approximate density label: 0, j/N for j = 1..N^3, or infinity. Stored as
/// the integer j (the label times N).
struct Label {
    static constexpr std::int32_t kInfinite = -1;
    std::int32_t units = 0;

    static constexpr Label zero() noexcept { return Label{0}; }
    static constexpr Label infinite() noexcept { return Label{kInfinite}; }

    bool is_infinite() const noexcept { return units == kInfinite; }
    bool is_zero() const noexcept { return units == 0; }
    double value(int N) const noexcept {
        return is_infinite() ? std::numeric_limits<double>::infinity()
                             : static_cast<double>(units) / N;
    }

    friend bool operator==(Label, Label) = default;
};

/// d = 0 for no points, ceil(N^3 r / k) / N for 1 <= r <= k, infinity above k.
inline Label label_for_count(std::int64_t r, int k, int N) {
    if (r <= 0) return Label::zero();
    if (r > k) return Label::infinite();
    const std::int64_t n3 = static_cast<std::int64_t>(N) * N * N;
    return Label{static_cast<std::int32_t>((n3 * r + k - 1) / k)};
}

struct Configuration {
    Tiling tiling;
    std::vector<Label> labels;

    Label operator[](CellIndex c) const noexcept { return labels[c]; }
};

inline Configuration uniform_configuration(const Tiling& tiling, Label label) {
    return Configuration{tiling, std::vector<Label>(tiling.cell_count(), label)};
}

inline std::vector<std::int64_t> cell_counts(const PointSet& points, const Tiling& tiling) {
    std::vector<std::int64_t> counts(tiling.cell_count(), 0);
    for (const auto& p : points.points()) {
        if (!tiling.region.contains(p)) {
            throw std::invalid_argument("label_configuration: point outside the tiled square");
        }
        ++counts[tiling.cell_of(p)];
    }
    return counts;
}

inline Configuration label_configuration(const PointSet& points, const Tiling& tiling) {
    const auto counts = cell_counts(points, tiling);
    Configuration config{tiling, std::vector<Label>(tiling.cell_count())};
    for (std::size_t c = 0; c < counts.size(); ++c) {
        config.labels[c] = label_for_count(counts[c], tiling.k, tiling.N);
    }
    return config;
}

struct CountInterval {
    std::int64_t rmin = 0;
    std::int64_t rmax = 0;

    bool empty() const noexcept { return rmin > rmax; }
    bool contains(std::int64_t r) const noexcept { return r >= rmin && r <= rmax; }
};

/// Integers r whose label is d: k(dN - 1)/N^3 < r <= k dN / N^3, or {0} for
/// d = 0. The interval is empty when no count produces d at this k.
inline CountInterval count_interval(Label d, int k, int N) {
    if (d.is_infinite()) throw std::invalid_argument("count_interval: label must be finite");
    if (d.is_zero()) return {0, 0};
    const std::int64_t n3 = static_cast<std::int64_t>(N) * N * N;
    const std::int64_t j = d.units;
    return {(static_cast<std::int64_t>(k) * (j - 1)) / n3 + 1, (static_cast<std::int64_t>(k) * j) / n3};
}

inline bool is_realizable(Label d, int k, int N) {
    return d.is_infinite() || !count_interval(d, k, N).empty();
}

/// Smallest point count any consistent point set can have in a cell with this
/// label: the interval minimum, or k + 1 for infinity.
inline std::int64_t min_count(Label d, int k, int N) {
    if (d.is_infinite()) return static_cast<std::int64_t>(k) + 1;
    return count_interval(d, k, N).rmin;
}

inline double type_a_threshold(int N) { return static_cast<double>(N) * N / 21.0; }

/// Some cell with d > threshold (infinity included).
inline bool is_type_A(const Configuration& config, std::optional<double> threshold = std::nullopt) {
    const double t = threshold.value_or(type_a_threshold(config.tiling.N));
    return std::any_of(config.labels.begin(), config.labels.end(),
                       [&](Label d) { return d.is_infinite() || d.value(config.tiling.N) > t; });
}

// ---------------------------------------------------------------------------
// Circle family and annulus squares. Geometry below is in cell units (ell = 1,
// cell centres at integer offsets from each other).

/// Circle centred at a cell centre; radius^2 is an integer in cell units.
struct Circle {
    CellIndex center = 0;
    std::int64_t radius_sq = 0;

    double radius() const noexcept { return std::sqrt(static_cast<double>(radius_sq)); }
    friend bool operator==(const Circle&, const Circle&) = default;
};

/// (5/2) sqrt(2) in cell units.
inline const double kAnnulusHalfWidth = 2.5 * std::numbers::sqrt2;

namespace detail {

/// Nearest and farthest distance from the origin to the unit cell centred at (dx, dy).
inline double cell_min_distance(int dx, int dy) noexcept {
    const double ax = std::max(0.0, std::abs(dx) - 0.5);
    const double ay = std::max(0.0, std::abs(dy) - 0.5);
    return std::sqrt(ax * ax + ay * ay);
}

inline double cell_max_distance(int dx, int dy) noexcept {
    const double ax = std::abs(dx) + 0.5;
    const double ay = std::abs(dy) + 0.5;
    return std::sqrt(ax * ax + ay * ay);
}

inline bool cell_in_annulus(int dx, int dy, double radius) noexcept {
    return cell_max_distance(dx, dy) <= radius + kAnnulusHalfWidth &&
           cell_min_distance(dx, dy) >= radius - kAnnulusHalfWidth;
}

}  // namespace detail

/// Every circle centred at a cell centre and passing through another cell
/// centre, one per distinct radius for each centre.
inline std::vector<Circle> circle_family(const Tiling& tiling) {
    const int s = tiling.side();
    std::vector<Circle> out;
    std::vector<std::int64_t> radii;
    for (CellIndex c = 0; c < tiling.cell_count(); ++c) {
        radii.clear();
        const int ci = tiling.column(c);
        const int cj = tiling.row(c);
        for (int j = 0; j < s; ++j) {
            for (int i = 0; i < s; ++i) {
                if (i == ci && j == cj) continue;
                radii.push_back(static_cast<std::int64_t>(i - ci) * (i - ci) +
                                static_cast<std::int64_t>(j - cj) * (j - cj));
            }
        }
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
        for (auto r2 : radii) out.push_back(Circle{c, r2});
    }
    return out;
}

struct AnnulusSquares {
    Circle circle;
    std::vector<CellIndex> cells;
};

/// R_Gamma: cells lying entirely within distance (5/2) ell sqrt(2) of the circle.
inline AnnulusSquares build_annulus_squares(const Tiling& tiling, const Circle& circle) {
    AnnulusSquares out{circle, {}};
    const int ci = tiling.column(circle.center);
    const int cj = tiling.row(circle.center);
    const double radius = circle.radius();
    for (CellIndex q = 0; q < tiling.cell_count(); ++q) {
        if (detail::cell_in_annulus(tiling.column(q) - ci, tiling.row(q) - cj, radius)) {
            out.cells.push_back(q);
        }
    }
    return out;
}

struct AnnulusLoad {
    /// Largest sum of d over an R_Gamma (infinity if an infinite label is covered).
    double max_label_sum = 0.0;
    std::optional<Circle> argmax;
};

/// Maximum of sum_{R_Gamma} d over the circle family. For a fixed centre each
/// cell belongs to R_Gamma exactly for radii in [dmax - w, dmin + w], so one
/// difference-array sweep over the sorted radii handles all circles of that centre.
inline AnnulusLoad max_annulus_load(const Configuration& config) {
    const Tiling& tiling = config.tiling;
    const int s = tiling.side();
    const int N = tiling.N;
    AnnulusLoad best;
    std::vector<std::int64_t> radii;
    std::vector<double> roots;
    std::vector<std::int64_t> diff;
    std::vector<std::int64_t> inf_diff;
    for (CellIndex c = 0; c < tiling.cell_count(); ++c) {
        const int ci = tiling.column(c);
        const int cj = tiling.row(c);
        radii.clear();
        for (int j = 0; j < s; ++j) {
            for (int i = 0; i < s; ++i) {
                if (i == ci && j == cj) continue;
                radii.push_back(static_cast<std::int64_t>(i - ci) * (i - ci) +
                                static_cast<std::int64_t>(j - cj) * (j - cj));
            }
        }
        if (radii.empty()) continue;
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
        roots.resize(radii.size());
        for (std::size_t r = 0; r < radii.size(); ++r) roots[r] = std::sqrt(static_cast<double>(radii[r]));
        diff.assign(radii.size() + 1, 0);
        inf_diff.assign(radii.size() + 1, 0);

        for (CellIndex q = 0; q < tiling.cell_count(); ++q) {
            const Label d = config.labels[q];
            if (d.is_zero()) continue;
            const int dx = tiling.column(q) - ci;
            const int dy = tiling.row(q) - cj;
            const double lo = detail::cell_max_distance(dx, dy) - kAnnulusHalfWidth;
            const double hi = detail::cell_min_distance(dx, dy) + kAnnulusHalfWidth;
            const auto first = static_cast<std::size_t>(
                std::lower_bound(roots.begin(), roots.end(), lo) - roots.begin());
            const auto last = static_cast<std::size_t>(
                std::upper_bound(roots.begin(), roots.end(), hi) - roots.begin());
            if (first >= last) continue;
            auto& target = d.is_infinite() ? inf_diff : diff;
            const std::int64_t w = d.is_infinite() ? 1 : d.units;
            target[first] += w;
            target[last] -= w;
        }

        std::int64_t run = 0;
        std::int64_t inf_run = 0;
        for (std::size_t r = 0; r < radii.size(); ++r) {
            run += diff[r];
            inf_run += inf_diff[r];
            const double sum = inf_run > 0 ? std::numeric_limits<double>::infinity()
                                           : static_cast<double>(run) / N;
            if (!best.argmax || sum > best.max_label_sum) {
                best.max_label_sum = sum;
                best.argmax = Circle{c, radii[r]};
            }
        }
    }
    return best;
}

/// (k / N^2) sum_{R_Gamma} d >= eps k / 2 for some circle, i.e. sum d >= eps N^2 / 2.
inline bool is_type_B(const Configuration& config, double eps) {
    if (!(eps > 0.0) || !(eps < 0.5)) throw std::invalid_argument("is_type_B: eps must lie in (0, 1/2)");
    const AnnulusLoad load = max_annulus_load(config);
    if (!load.argmax) return false;
    const double n = config.tiling.N;
    return load.max_label_sum >= eps * n * n / 2.0;
}

// ---------------------------------------------------------------------------
// Rate functional.

/// rho' = d when d <= 1, d - 1/N when d > 1.
inline double effective_density(Label d, int N) {
    if (d.is_infinite()) throw std::invalid_argument("theta: infinite label");
    const double v = d.value(N);
    return v <= 1.0 ? v : v - 1.0 / N;
}

/// -(rho' - 1 - rho' log rho') / N^2, with 0 log 0 = 0.
inline double theta_cell_term(Label d, int N) {
    const double rho = effective_density(d, N);
    const double rate = rho == 0.0 ? -1.0 : rho - 1.0 - rho * std::log(rho);
    return -rate / (static_cast<double>(N) * N);
}

inline double theta(const Configuration& config) {
    double total = 0.0;
    for (Label d : config.labels) total += theta_cell_term(d, config.tiling.N);
    return total;
}

/// (N^3 + 2)^((MN)^2), exactly.
inline boost::multiprecision::cpp_int configuration_count(int M, int N) {
    if (M < 1 || N < 1) throw std::invalid_argument("configuration_count: M, N must be >= 1");
    const boost::multiprecision::cpp_int base = boost::multiprecision::cpp_int(N) * N * N + 2;
    const auto exponent = static_cast<unsigned>(M * N) * static_cast<unsigned>(M * N);
    return boost::multiprecision::pow(base, exponent);
}

// ---------------------------------------------------------------------------
// No-edge certificates.

/// (3/2) sqrt(2) in cell units.
inline const double kCertificateSlack = 1.5 * std::numbers::sqrt2;

/// Comparisons against the (irrational) certificate radii carry this margin,
/// always in the direction that withholds certification.
inline constexpr double kCertificateTolerance = 1e-9;

/// Sum of min_count over cells lying strictly inside the disc of the given
/// radius (cell units, less the tolerance) about the centre of cell `c`.
inline std::int64_t min_count_in_ball(const Configuration& config, CellIndex c, double radius) {
    const Tiling& t = config.tiling;
    std::int64_t total = 0;
    for (CellIndex q = 0; q < t.cell_count(); ++q) {
        if (detail::cell_max_distance(t.column(q) - t.column(c), t.row(q) - t.row(c)) <
            radius - kCertificateTolerance) {
            total += min_count(config.labels[q], t.k, t.N);
        }
    }
    return total;
}

/// True when no point set consistent with `config` can have an edge of
/// G_{S,k} between cells s1 and s2. Either cell is empty, or for both ends the
/// cells strictly inside B(z_i, d - (3/2) ell sqrt 2) hold at least k + 2
/// points: that ball lies inside B(y_i, |y_1 - y_2|) for any y_i in s_i, so
/// neither endpoint can rank the other among its k nearest.
inline bool no_edge_certificate(const Configuration& config, CellIndex s1, CellIndex s2) {
    if (s1 == s2) throw std::invalid_argument("no_edge_certificate: cells must differ");
    if (config.labels[s1].is_zero() || config.labels[s2].is_zero()) return true;
    const Tiling& t = config.tiling;
    const int dx = t.column(s2) - t.column(s1);
    const int dy = t.row(s2) - t.row(s1);
    const double d = std::sqrt(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy);
    const double radius = d - kCertificateSlack;
    const std::int64_t need = static_cast<std::int64_t>(t.k) + 2;
    return min_count_in_ball(config, s1, radius) >= need && min_count_in_ball(config, s2, radius) >= need;
}

/// A point set whose labelling is `config`: each cell gets a count drawn
/// uniformly from its interval (k+1..2k+1 for infinity), placed uniformly in
/// the cell. Points are redrawn until cell_of agrees, so rounding at cell
/// edges cannot move a point to a neighbour.
inline PointSet sample_consistent(const Configuration& config, std::uint64_t seed) {
    const Tiling& t = config.tiling;
    Rng rng(seed);
    std::vector<Point> pts;
    for (CellIndex c = 0; c < t.cell_count(); ++c) {
        const Label d = config.labels[c];
        CountInterval iv = d.is_infinite() ? CountInterval{t.k + 1LL, 2LL * t.k + 1}
                                           : count_interval(d, t.k, t.N);
        if (iv.empty()) throw std::invalid_argument("sample_consistent: unrealizable label");
        const auto count = iv.rmin + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(iv.rmax - iv.rmin + 1)));
        const Rect cell = t.cell_rect(c);
        for (std::int64_t i = 0; i < count;) {
            const Point p{rng.uniform(cell.xmin, cell.xmax), rng.uniform(cell.ymin, cell.ymax)};
            if (t.cell_of(p) != c || !t.region.contains(p)) continue;
            pts.push_back(p);
            ++i;
        }
    }
    return PointSet(std::move(pts), t.region, seed, 1.0);
}

using CellSet = std::vector<CellIndex>;

inline std::vector<char> membership(const Tiling& tiling, std::span<const CellIndex> cells) {
    std::vector<char> in(tiling.cell_count(), 0);
    for (CellIndex c : cells) {
        if (c >= tiling.cell_count()) throw std::invalid_argument("cell index out of range");
        in[c] = 1;
    }
    return in;
}

// ---------------------------------------------------------------------------
// Refinement and serialization.

/// Splits every cell into factor^2 cells carrying the same density, so the
/// label units scale by `factor`. T maps to all children of its cells.
inline std::pair<Configuration, CellSet> refine_configuration(const Configuration& config,
                                                              std::span<const CellIndex> T,
                                                              int factor) {
    if (factor < 1) throw std::invalid_argument("refine_configuration: factor must be >= 1");
    const Tiling& coarse = config.tiling;
    const Tiling fine = tile(coarse.M, coarse.N * factor, coarse.k);
    Configuration out{fine, std::vector<Label>(fine.cell_count())};
    const auto in_t = membership(coarse, T);
    CellSet fine_t;
    for (CellIndex q = 0; q < fine.cell_count(); ++q) {
        const CellIndex parent = coarse.index(fine.column(q) / factor, fine.row(q) / factor);
        const Label d = config.labels[parent];
        out.labels[q] = d.is_infinite() ? d : Label{d.units * factor};
        if (in_t[parent]) fine_t.push_back(q);
    }
    return {std::move(out), std::move(fine_t)};
}

/// {"M","N","k","labels": row-major d values with "inf" for infinity, "T": cell indices}.
inline nlohmann::json configuration_to_json(const Configuration& config, std::span<const CellIndex> T) {
    nlohmann::json labels = nlohmann::json::array();
    for (Label d : config.labels) {
        if (d.is_infinite()) {
            labels.push_back("inf");
        } else {
            labels.push_back(d.value(config.tiling.N));
        }
    }
    return nlohmann::json{{"M", config.tiling.M},
                          {"N", config.tiling.N},
                          {"k", config.tiling.k},
                          {"labels", std::move(labels)},
                          {"T", std::vector<CellIndex>(T.begin(), T.end())}};
}

inline std::pair<Configuration, CellSet> configuration_from_json(const nlohmann::json& j) {
    const Tiling tiling = tile(j.at("M").get<int>(), j.at("N").get<int>(), j.at("k").get<int>());
    const auto& labels = j.at("labels");
    if (!labels.is_array() || labels.size() != tiling.cell_count()) {
        throw std::invalid_argument("configuration JSON: labels must have (MN)^2 entries");
    }
    Configuration config{tiling, std::vector<Label>(tiling.cell_count())};
    const auto n3 = static_cast<double>(tiling.N) * tiling.N * tiling.N;
    for (std::size_t c = 0; c < labels.size(); ++c) {
        const auto& v = labels[c];
        if (v.is_string()) {
            if (v.get<std::string>() != "inf") throw std::invalid_argument("configuration JSON: bad label");
            config.labels[c] = Label::infinite();
            continue;
        }
        const double units = std::round(v.get<double>() * tiling.N);
        if (units < 0.0 || units > n3) throw std::invalid_argument("configuration JSON: label out of range");
        config.labels[c] = Label{static_cast<std::int32_t>(units)};
    }
    CellSet T;
    if (j.contains("T")) {
        T = j.at("T").get<CellSet>();
        for (CellIndex c : T) {
            if (c >= tiling.cell_count()) throw std::invalid_argument("configuration JSON: T index out of range");
        }
        std::sort(T.begin(), T.end());
        T.erase(std::unique(T.begin(), T.end()), T.end());
    }
    return {std::move(config), std::move(T)};
}

}  // namespace knnrgg
