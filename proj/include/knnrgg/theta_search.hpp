#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "certificate.hpp"
#include "configuration.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace knnrgg {

struct SeedConfiguration {
    Configuration config;
    CellSet T;
};

/// Discretized disc configuration centred at the origin. T holds the cells
/// whose centre lies within r = sqrt((k+1)/pi) and carries `inner_units`; the
/// other cells meeting the closed disc of radius `empty_radius` are empty; the
/// rest carry `outer_units` (both label values times N).
inline SeedConfiguration disc_seed(int M, int N, int k, int inner_units, double empty_radius,
                                   int outer_units = 0) {
    const Tiling tiling = tile(M, N, k);
    if (outer_units == 0) outer_units = N;
    const double r = std::sqrt((k + 1.0) / std::numbers::pi);
    SeedConfiguration seed{Configuration{tiling, std::vector<Label>(tiling.cell_count(), Label{outer_units})}, {}};
    for (CellIndex c = 0; c < tiling.cell_count(); ++c) {
        const Point z = tiling.cell_center(c);
        if (std::hypot(z.x, z.y) <= r) {
            seed.config.labels[c] = Label{inner_units};
            seed.T.push_back(c);
            continue;
        }
        const Rect cell = tiling.cell_rect(c);
        const double nx = std::clamp(0.0, cell.xmin, cell.xmax);
        const double ny = std::clamp(0.0, cell.ymin, cell.ymax);
        if (std::hypot(nx, ny) <= empty_radius) seed.config.labels[c] = Label::zero();
    }
    return seed;
}

/// The seed used for theta comparisons: empty out to 3r, inner label 1 + 1/N.
inline SeedConfiguration disc_seed(int M, int N, int k) {
    return disc_seed(M, N, k, N + 1, 3.0 * std::sqrt((k + 1.0) / std::numbers::pi));
}

/// Smallest realizable label (in units) at or above `units`, if any up to N^3.
inline std::optional<int> realizable_at_or_above(int units, int k, int N) {
    const int top = N * N * N;
    for (int u = std::max(units, 0); u <= top; ++u) {
        if (is_realizable(Label{u}, k, N)) return u;
    }
    return std::nullopt;
}

/// A certified disc configuration: the empty radius grows from 3r in steps of
/// ell/2 and, at each radius, the smallest realizable inner label in (1, 2]
/// that certifies is taken. Throws when none certifies.
inline SeedConfiguration certified_disc_seed(int M, int N, int k) {
    const Tiling tiling = tile(M, N, k);
    const auto outer = realizable_at_or_above(N, k, N);
    if (!outer) throw std::invalid_argument("certified_disc_seed: no realizable label >= 1");
    std::vector<int> inner;
    for (int u = N + 1; u <= 2 * N; ++u) {
        if (is_realizable(Label{u}, k, N)) inner.push_back(u);
    }
    if (inner.empty()) throw std::invalid_argument("certified_disc_seed: no realizable label in (1, 2]");
    const double r = std::sqrt((k + 1.0) / std::numbers::pi);
    const double limit = tiling.region.width() * std::numbers::sqrt2;
    const auto passes = [&](int units, double radius) {
        const auto s = disc_seed(M, N, k, units, radius, *outer);
        return small_component_certificate(s.config, s.T);
    };
    for (double radius = 3.0 * r; radius <= limit; radius += tiling.ell / 2.0) {
        if (!passes(inner.back(), radius)) continue;
        std::size_t lo = 0;
        std::size_t hi = inner.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (passes(inner[mid], radius)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return disc_seed(M, N, k, inner[lo], radius, *outer);
    }
    throw std::invalid_argument("certified_disc_seed: no certified disc configuration at these parameters");
}

struct ThetaSearchParams {
    int M = 10;
    int N = 8;
    int k = 64;
    double eps = 0.4;
    std::uint64_t iterations = 20000;
    unsigned restarts = 1;
    unsigned workers = 1;
    std::uint64_t seed = 1;
    int max_label_units = 0;        ///< 0 selects 2N (label 2)
    bool enforce_type_a = true;
    bool enforce_type_b = false;    ///< full Type B scan per move; slow
    double t_start = 0.02;
    double t_end = 1e-4;
    double t_move_probability = 0.2;
    std::optional<SeedConfiguration> initial;
};

struct ThetaSearchResult {
    Configuration config;
    CellSet T;
    double theta_star = 0.0;
    SeedConfiguration start;
    double theta_start = 0.0;
    std::vector<double> restart_theta;
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
    std::vector<std::string> log;
};

namespace detail {

struct RestartOutcome {
    SeedConfiguration best;
    double theta = 0.0;
    std::uint64_t proposed = 0;
    std::uint64_t accepted = 0;
};

inline bool search_feasible(const CertificateState& state, std::size_t type_a_cells,
                            const ThetaSearchParams& p) {
    if (!state.certified()) return false;
    if (p.enforce_type_a && type_a_cells > 0) return false;
    if (p.enforce_type_b && is_type_B(state.configuration(), p.eps)) return false;
    return true;
}

inline RestartOutcome anneal(const SeedConfiguration& start, const std::vector<int>& allowed,
                             const ThetaSearchParams& p, std::uint64_t stream_seed) {
    Rng rng(stream_seed);
    const Tiling& tiling = start.config.tiling;
    const int N = tiling.N;
    const double type_a_limit = type_a_threshold(N);
    const auto over_a = [&](Label d) { return d.is_infinite() || d.value(N) > type_a_limit; };

    CertificateState state(start.config, start.T);
    std::size_t type_a_cells = 0;
    for (Label d : start.config.labels) type_a_cells += over_a(d) ? 1 : 0;

    double current = theta(start.config);
    RestartOutcome out{start, current, 0, 0};

    std::vector<CellIndex> active;
    std::vector<char> mark(tiling.cell_count());
    const auto rebuild_active = [&] {
        std::fill(mark.begin(), mark.end(), 0);
        const int s = tiling.side();
        for (CellIndex c = 0; c < tiling.cell_count(); ++c) {
            if (state.configuration().labels[c].units == N && !state.in_T(c)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int i = tiling.column(c) + dx;
                    const int j = tiling.row(c) + dy;
                    if (i >= 0 && j >= 0 && i < s && j < s) mark[tiling.index(i, j)] = 1;
                }
            }
        }
        active.clear();
        for (CellIndex c = 0; c < tiling.cell_count(); ++c) {
            if (mark[c]) active.push_back(c);
        }
    };
    rebuild_active();

    const auto pick_label = [&](Label cur) {
        const auto it = std::find(allowed.begin(), allowed.end(), cur.units);
        if (it != allowed.end() && rng.uniform() < 0.5) {
            const auto pos = static_cast<std::size_t>(it - allowed.begin());
            if (rng.below(2) == 0) {
                if (pos > 0) return Label{allowed[pos - 1]};
            } else if (pos + 1 < allowed.size()) {
                return Label{allowed[pos + 1]};
            }
        }
        return Label{allowed[rng.below(allowed.size())]};
    };

    const double ratio = p.iterations > 1 ? std::pow(p.t_end / p.t_start, 1.0 / (p.iterations - 1)) : 1.0;
    double temperature = p.t_start;
    for (std::uint64_t it = 0; it < p.iterations; ++it, temperature *= ratio) {
        if (it % 256 == 0) rebuild_active();
        if (active.empty()) break;
        const CellIndex q = active[rng.below(active.size())];
        const Label old_label = state.configuration().labels[q];
        ++out.proposed;

        if (rng.uniform() < p.t_move_probability) {
            if (old_label.is_zero()) continue;
            const bool was = state.in_T(q);
            state.set_in_T(q, !was);
            if (search_feasible(state, type_a_cells, p)) {
                ++out.accepted;
            } else {
                state.set_in_T(q, was);
            }
            continue;
        }

        const Label proposal = pick_label(old_label);
        if (proposal == old_label) continue;
        const double delta = theta_cell_term(proposal, N) - theta_cell_term(old_label, N);
        if (delta > 0.0 && rng.uniform() >= std::exp(-delta / temperature)) continue;
        state.set_label(q, proposal);
        type_a_cells += (over_a(proposal) ? 1 : 0);
        type_a_cells -= (over_a(old_label) ? 1 : 0);
        if (!search_feasible(state, type_a_cells, p)) {
            state.set_label(q, old_label);
            type_a_cells += (over_a(old_label) ? 1 : 0);
            type_a_cells -= (over_a(proposal) ? 1 : 0);
            continue;
        }
        ++out.accepted;
        current += delta;
        if (current < out.theta - 1e-12) {
            out.theta = current;
            out.best = SeedConfiguration{state.configuration(), state.T()};
        }
    }
    out.theta = theta(out.best.config);
    return out;
}

}  // namespace detail

/// Simulated annealing over certified configurations (single-cell label moves
/// and T toggles), started from the lowest-theta certified candidate among the
/// disc seed and `initial`. Restarts run concurrently on derived streams; the
/// result is the best restart, or the start itself if nothing improves on it.
inline ThetaSearchResult optimize_theta(const ThetaSearchParams& p) {
    if (p.restarts < 1) throw std::invalid_argument("optimize_theta: restarts must be >= 1");
    if (!(p.t_start > 0.0) || !(p.t_end > 0.0)) throw std::invalid_argument("optimize_theta: temperatures must be > 0");
    const Tiling tiling = tile(p.M, p.N, p.k);
    const int max_units = p.max_label_units > 0 ? p.max_label_units : 2 * p.N;
    std::vector<int> allowed;
    for (int u = 0; u <= max_units; ++u) {
        const Label d{u};
        if (!is_realizable(d, p.k, p.N)) continue;
        if (p.enforce_type_a && d.value(p.N) > type_a_threshold(p.N)) continue;
        allowed.push_back(u);
    }
    if (allowed.empty()) throw std::invalid_argument("optimize_theta: no admissible labels");

    ThetaSearchResult res;
    std::vector<SeedConfiguration> candidates;
    try {
        candidates.push_back(certified_disc_seed(p.M, p.N, p.k));
    } catch (const std::invalid_argument& e) {
        res.log.push_back(std::string("disc seed unavailable: ") + e.what());
    }
    if (p.initial) {
        if (!(p.initial->config.tiling == tiling)) {
            throw std::invalid_argument("optimize_theta: initial configuration has a different tiling");
        }
        candidates.push_back(*p.initial);
    }
    std::optional<std::size_t> chosen;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        std::size_t type_a = 0;
        for (Label d : c.config.labels) {
            type_a += (d.is_infinite() || d.value(p.N) > type_a_threshold(p.N)) ? 1 : 0;
        }
        const CertificateState state(c.config, c.T);
        const bool ok = detail::search_feasible(state, type_a, p);
        const double th = ok ? theta(c.config) : 0.0;
        std::ostringstream line;
        line << "candidate " << i << (i == 0 && candidates.size() > 1 ? " (disc seed)" : "")
             << ": feasible=" << (ok ? "yes" : "no");
        if (ok) line << " theta=" << th;
        res.log.push_back(line.str());
        if (ok && (!chosen || th < theta(candidates[*chosen].config))) chosen = i;
    }
    if (!chosen) throw std::invalid_argument("optimize_theta: no certified starting configuration");
    res.start = candidates[*chosen];
    res.theta_start = theta(res.start.config);

    std::vector<detail::RestartOutcome> outcomes(p.restarts);
    parallel_for(p.restarts, p.workers, [&](std::size_t r) {
        outcomes[r] = detail::anneal(res.start, allowed, p, derive_seed(p.seed, "theta-search", r));
    });

    std::size_t best = 0;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
        res.restart_theta.push_back(outcomes[r].theta);
        res.proposed += outcomes[r].proposed;
        res.accepted += outcomes[r].accepted;
        std::ostringstream line;
        line << "restart " << r << ": theta=" << outcomes[r].theta << " accepted=" << outcomes[r].accepted
             << "/" << outcomes[r].proposed;
        res.log.push_back(line.str());
        if (outcomes[r].theta < outcomes[best].theta) best = r;
    }
    const auto& winner = outcomes[best];
    if (winner.theta <= res.theta_start && small_component_certificate(winner.best.config, winner.best.T)) {
        res.config = winner.best.config;
        res.T = winner.best.T;
        res.theta_star = winner.theta;
    } else {
        res.config = res.start.config;
        res.T = res.start.T;
        res.theta_star = res.theta_start;
    }
    return res;
}

}  // namespace knnrgg
