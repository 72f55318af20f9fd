#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "configuration.hpp"

namespace knnrgg {

namespace detail {

struct Offset {
    int dx = 0;
    int dy = 0;
    double dist = 0.0;
};

/// All offsets reachable on a side x side grid, sorted by `key`.
template <class Key>
std::vector<Offset> sorted_offsets(int side, Key key) {
    std::vector<Offset> out;
    out.reserve(static_cast<std::size_t>(2 * side - 1) * static_cast<std::size_t>(2 * side - 1));
    for (int dy = -(side - 1); dy < side; ++dy) {
        for (int dx = -(side - 1); dx < side; ++dx) out.push_back(Offset{dx, dy, key(dx, dy)});
    }
    std::stable_sort(out.begin(), out.end(), [](const Offset& a, const Offset& b) { return a.dist < b.dist; });
    return out;
}

}  // namespace detail

/// Small-component certificate for (configuration, T), maintained under single
/// cell changes.
///
/// For a nonempty cell s let g(s) be the least v such that the cells with farthest-point
/// distance <= v from the centre of s have min_count summing to k + 2 (infinity
/// if never). A pair (s1, s2) passes the no-edge certificate exactly when
/// |z1 - z2| > max(g(s1), g(s2)) + (3/2) sqrt 2. A nonempty cell is "bad" when a
/// nonempty cell on the other side of T lies within g(s) + (3/2) sqrt 2 of it;
/// the configuration is certified when no cell is bad, T holds a nonempty cell
/// and every nonempty cell of T lies in the central square.
class CertificateState {
public:
    CertificateState(Configuration config, std::span<const CellIndex> T)
        : config_(std::move(config)),
          side_(config_.tiling.side()),
          need_(static_cast<std::int64_t>(config_.tiling.k) + 2),
          in_t_(membership(config_.tiling, T)),
          rmin_(config_.tiling.cell_count()),
          g_(config_.tiling.cell_count(), kNoBall),
          bad_(config_.tiling.cell_count(), 0) {
        by_dmax_ = detail::sorted_offsets(side_, detail::cell_max_distance);
        by_dist_ = detail::sorted_offsets(side_, [](int dx, int dy) { return std::hypot(dx, dy); });
        const std::size_t n = rmin_.size();
        for (CellIndex c = 0; c < n; ++c) {
            rmin_[c] = min_count(config_.labels[c], config_.tiling.k, config_.tiling.N);
            count_membership(c, +1);
        }
        std::vector<CellIndex> ignored;
        for (CellIndex c = 0; c < n; ++c) update_g(c, ignored);
        for (CellIndex c = 0; c < n; ++c) set_bad(c, compute_bad(c));
    }

    const Configuration& configuration() const noexcept { return config_; }
    bool in_T(CellIndex c) const noexcept { return in_t_[c] != 0; }
    /// Negative for empty cells, which never need a ball.
    double g(CellIndex c) const noexcept { return g_[c]; }
    bool bad(CellIndex c) const noexcept { return bad_[c] != 0; }
    std::size_t bad_count() const noexcept { return bad_count_; }

    CellSet T() const {
        CellSet out;
        for (CellIndex c = 0; c < in_t_.size(); ++c) {
            if (in_t_[c]) out.push_back(c);
        }
        return out;
    }

    bool certified() const noexcept {
        return bad_count_ == 0 && nonempty_in_t_ > 0 && nonempty_t_outside_ == 0;
    }

    void set_label(CellIndex q, Label d) {
        if (config_.labels[q] == d) return;
        count_membership(q, -1);
        config_.labels[q] = d;
        const std::int64_t new_rmin = min_count(d, config_.tiling.k, config_.tiling.N);
        const bool mass_changed = new_rmin != rmin_[q];
        // Cells whose g may move: q lies inside their current accumulation ball.
        std::vector<CellIndex> touched;
        if (mass_changed) {
            const double reach = max_g();
            for (const auto& off : by_dmax_) {
                if (off.dist > reach + kCertificateTolerance) break;
                const auto s = shifted(q, -off.dx, -off.dy);
                if (s && off.dist <= g_[*s] + kCertificateTolerance) touched.push_back(*s);
            }
        }
        rmin_[q] = new_rmin;
        count_membership(q, +1);
        refresh(q, touched);
    }

    void set_in_T(CellIndex q, bool member) {
        if ((in_t_[q] != 0) == member) return;
        count_membership(q, -1);
        in_t_[q] = member ? 1 : 0;
        count_membership(q, +1);
        refresh(q, {});
    }

private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    static constexpr double kNoBall = -1.0;

    std::optional<CellIndex> shifted(CellIndex c, int dx, int dy) const noexcept {
        const int i = config_.tiling.column(c) + dx;
        const int j = config_.tiling.row(c) + dy;
        if (i < 0 || j < 0 || i >= side_ || j >= side_) return std::nullopt;
        return config_.tiling.index(i, j);
    }

    bool nonempty(CellIndex c) const noexcept { return !config_.labels[c].is_zero(); }

    void count_membership(CellIndex c, int sign) noexcept {
        if (!in_t_[c] || !nonempty(c)) return;
        nonempty_in_t_ += sign;
        if (!config_.tiling.cell_in_central_square(c)) nonempty_t_outside_ += sign;
    }

    double max_g() const noexcept { return g_values_.empty() ? 0.0 : *g_values_.rbegin(); }

    double compute_g(CellIndex s) const noexcept {
        std::int64_t total = 0;
        for (const auto& off : by_dmax_) {
            const auto q = shifted(s, off.dx, off.dy);
            if (!q) continue;
            total += rmin_[*q];
            if (total >= need_) return off.dist;
        }
        return kInf;
    }

    bool compute_bad(CellIndex s) const noexcept {
        if (!nonempty(s)) return false;
        const double reach = g_[s] + kCertificateSlack + kCertificateTolerance;
        for (const auto& off : by_dist_) {
            if (off.dist > reach) break;
            const auto q = shifted(s, off.dx, off.dy);
            if (q && *q != s && nonempty(*q) && in_t_[*q] != in_t_[s]) return true;
        }
        return false;
    }

    void set_bad(CellIndex s, bool value) noexcept {
        if ((bad_[s] != 0) == value) return;
        bad_[s] = value ? 1 : 0;
        if (value) {
            ++bad_count_;
        } else {
            --bad_count_;
        }
    }

    void update_g(CellIndex s, std::vector<CellIndex>& changed) {
        const double fresh = nonempty(s) ? compute_g(s) : kNoBall;
        if (fresh == g_[s]) return;
        if (g_[s] >= 0.0) g_values_.erase(g_values_.find(g_[s]));
        g_[s] = fresh;
        if (fresh >= 0.0) g_values_.insert(fresh);
        changed.push_back(s);
    }

    /// Recomputes g for `touched`, then bad for every cell that can see q or
    /// whose g moved.
    void refresh(CellIndex q, const std::vector<CellIndex>& touched) {
        std::vector<CellIndex> changed;
        for (CellIndex s : touched) update_g(s, changed);
        update_g(q, changed);
        for (CellIndex s : changed) set_bad(s, compute_bad(s));
        set_bad(q, compute_bad(q));
        const double reach = max_g() + kCertificateSlack + kCertificateTolerance;
        if (std::isinf(reach)) {
            for (CellIndex s = 0; s < g_.size(); ++s) set_bad(s, compute_bad(s));
            return;
        }
        for (const auto& off : by_dist_) {
            if (off.dist > reach) break;
            const auto s = shifted(q, -off.dx, -off.dy);
            if (s && off.dist <= g_[*s] + kCertificateSlack + kCertificateTolerance) {
                set_bad(*s, compute_bad(*s));
            }
        }
    }

    Configuration config_;
    int side_ = 0;
    std::int64_t need_ = 0;
    std::vector<char> in_t_;
    std::vector<std::int64_t> rmin_;
    std::vector<double> g_;
    std::vector<char> bad_;
    std::multiset<double> g_values_;
    std::vector<detail::Offset> by_dmax_;
    std::vector<detail::Offset> by_dist_;
    std::size_t bad_count_ = 0;
    std::int64_t nonempty_in_t_ = 0;
    std::int64_t nonempty_t_outside_ = 0;
};

/// Every consistent point set has no G_{S,k} edge between a nonempty cell of T
/// and a nonempty cell outside T, and T carries a component inside the central
/// square, so event A_k holds. False when T has no nonempty cell or a nonempty
/// cell of T leaves the central square.
inline bool small_component_certificate(const Configuration& config, std::span<const CellIndex> T) {
    return CertificateState(config, T).certified();
}

/// Same decision by testing no_edge_certificate on every cross pair. Quadratic;
/// kept as the reference for the incremental route.
inline bool small_component_certificate_pairwise(const Configuration& config,
                                                 std::span<const CellIndex> T) {
    const Tiling& t = config.tiling;
    const auto in_t = membership(t, T);
    bool any = false;
    for (CellIndex c = 0; c < t.cell_count(); ++c) {
        if (!in_t[c] || config.labels[c].is_zero()) continue;
        any = true;
        if (!t.cell_in_central_square(c)) return false;
    }
    if (!any) return false;
    for (CellIndex a = 0; a < t.cell_count(); ++a) {
        if (!in_t[a] || config.labels[a].is_zero()) continue;
        for (CellIndex b = 0; b < t.cell_count(); ++b) {
            if (in_t[b] || config.labels[b].is_zero()) continue;
            if (!no_edge_certificate(config, a, b)) return false;
        }
    }
    return true;
}

}  // namespace knnrgg
