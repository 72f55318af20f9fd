#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "connectivity.hpp"
#include "knn_graph.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "stats.hpp"

namespace knnrgg {

struct EstimateResult {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
    double p_hat = 0.0;
    Interval ci;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
};

inline EstimateResult make_estimate(std::uint64_t successes, std::uint64_t trials, std::uint64_t seed,
                                    double wall_ms = 0.0) {
    return EstimateResult{trials, successes, static_cast<double>(successes) / static_cast<double>(trials),
                          wilson_interval(successes, trials), seed, wall_ms};
}

/// Square events share the tag "S" and boundary events "R", so A and A' (or B
/// and B') at one master seed see the same sample in every trial.
inline const char* event_sample_tag(EventKind kind) noexcept {
    return (kind == EventKind::A || kind == EventKind::APrime) ? "S" : "R";
}

inline PointSet event_trial_sample(const EventSpec& spec, std::uint64_t seed, std::uint64_t trial) {
    return sample_poisson(event_regions(spec).outer, 1.0, derive_seed(seed, event_sample_tag(spec.kind), trial));
}

/// Per-trial outcomes for several kinds evaluated on each shared sample. All
/// kinds must use the same outer region (all square or all boundary events).
inline std::vector<std::vector<char>> event_outcomes(int M, int k, std::span<const EventKind> kinds,
                                                     std::uint64_t trials, std::uint64_t seed,
                                                     unsigned workers = 1) {
    if (kinds.empty()) return {};
    for (EventKind kind : kinds) {
        if (std::string_view(event_sample_tag(kind)) != event_sample_tag(kinds.front())) {
            throw std::invalid_argument("event_outcomes: kinds must share the outer region");
        }
    }
    std::vector<std::vector<char>> hits(kinds.size(), std::vector<char>(trials, 0));
    parallel_for(trials, workers, [&](std::size_t i) {
        const PointSet sample = event_trial_sample(EventSpec{kinds.front(), M, k}, seed, i);
        const KnnGraph graph = build_knn_graph(sample, k);
        for (std::size_t j = 0; j < kinds.size(); ++j) {
            hits[j][i] = event_small_component(graph, EventSpec{kinds[j], M, k}) ? 1 : 0;
        }
    });
    return hits;
}

inline EstimateResult estimate_event(const EventSpec& spec, std::uint64_t trials, std::uint64_t seed,
                                     unsigned workers = 1) {
    spec.validate();
    if (trials < 1) throw std::invalid_argument("estimate_event: trials must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const EventKind kinds[] = {spec.kind};
    const auto hits = event_outcomes(spec.M, spec.k, kinds, trials, seed, workers);
    std::uint64_t successes = 0;
    for (char h : hits[0]) successes += static_cast<std::uint64_t>(h);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return make_estimate(successes, trials, seed, ms);
}

struct RateEstimate {
    int k = 0;
    EstimateResult p;
    std::optional<double> f_hat;  ///< empty when unmeasurable (no successes)
    Interval f_ci;                ///< high end is infinite when the p interval reaches 0
};

/// f = -log(p) / k with the Wilson interval mapped through the same
/// decreasing transform.
inline RateEstimate rate_from_estimate(int k, const EstimateResult& p) {
    if (k < 1) throw std::invalid_argument("rate_from_estimate: k must be >= 1");
    RateEstimate out{k, p, std::nullopt, {}};
    const auto f = [k](double q) {
        return q > 0.0 ? -std::log(q) / k : std::numeric_limits<double>::infinity();
    };
    if (p.successes > 0) out.f_hat = f(p.p_hat);
    out.f_ci = Interval{f(p.ci.high), f(p.ci.low)};
    return out;
}

struct RateRow {
    int k = 0;
    RateEstimate f1;  ///< from event A on S
    RateEstimate f2;  ///< from event B on R
};

inline std::vector<RateRow> estimate_f(std::span<const int> k_list, int M, std::uint64_t trials,
                                       std::uint64_t seed, unsigned workers = 1) {
    std::vector<RateRow> rows;
    for (int k : k_list) {
        if (k < 1) throw std::invalid_argument("estimate_f: k must be >= 1");
        const auto a = estimate_event(EventSpec{EventKind::A, M, k}, trials, seed, workers);
        const auto b = estimate_event(EventSpec{EventKind::B, M, k}, trials, seed, workers);
        rows.push_back(RateRow{k, rate_from_estimate(k, a), rate_from_estimate(k, b)});
    }
    return rows;
}

inline bool any_unmeasurable(std::span<const RateRow> rows) {
    for (const auto& r : rows) {
        if (!r.f1.f_hat || !r.f2.f_hat) return true;
    }
    return false;
}

struct ConnectivityPoint {
    double n = 0.0;
    double c = 0.0;
    int k = 0;
    EstimateResult p_connected;
};

/// k = floor(c log n), clamped at 0.
inline int connectivity_k(double n, double c) {
    if (!(n >= 1.0)) throw std::invalid_argument("connectivity_k: n must be >= 1");
    return std::max(0, static_cast<int>(std::floor(c * std::log(n))));
}

/// Connectivity of the graph for k' <= built k, read from neighbour-list prefixes.
inline bool connected_at(const KnnGraph& graph, int k) {
    const std::size_t m = graph.vertex_count();
    if (m <= 1) return true;
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), graph.out_degree());
    DisjointSets sets(m);
    std::size_t parts = m;
    for (std::size_t u = 0; u < m; ++u) {
        const auto row = graph.out_neighbours(static_cast<VertexId>(u));
        for (std::size_t j = 0; j < width; ++j) {
            if (sets.unite(u, row[j]) && --parts == 1) return true;
        }
    }
    return parts == 1;
}

/// Connectivity at each requested k on one sample, from a single graph built
/// at the largest k.
inline std::vector<char> connectivity_at(const PointSet& sample, std::span<const int> ks) {
    int k_max = 0;
    for (int k : ks) k_max = std::max(k_max, k);
    const KnnGraph full = build_knn_graph(sample, k_max);
    std::vector<char> out;
    out.reserve(ks.size());
    for (int k : ks) out.push_back(connected_at(full, k) ? 1 : 0);
    return out;
}

inline PointSet connectivity_sample(double n, std::uint64_t seed, std::uint64_t trial) {
    if (!(n >= 1.0)) throw std::invalid_argument("connectivity_curve: n must be >= 1");
    const auto tag = "Gn:" + std::to_string(std::llround(n));
    return sample_poisson(Rect::centred_square(std::sqrt(n)), 1.0, derive_seed(seed, tag, trial));
}

/// For each n one sample per trial is shared by every c, so the estimates in c
/// are coupled and nondecreasing instance by instance.
inline std::vector<ConnectivityPoint> connectivity_curve(std::span<const double> n_list,
                                                         std::span<const double> c_list,
                                                         std::uint64_t trials, std::uint64_t seed,
                                                         unsigned workers = 1) {
    if (trials < 1) throw std::invalid_argument("connectivity_curve: trials must be >= 1");
    std::vector<ConnectivityPoint> out;
    for (double n : n_list) {
        const auto start = std::chrono::steady_clock::now();
        std::vector<int> ks;
        for (double c : c_list) ks.push_back(connectivity_k(n, c));
        std::vector<std::vector<char>> by_trial(trials);
        parallel_for(trials, workers, [&](std::size_t i) {
            by_trial[i] = connectivity_at(connectivity_sample(n, seed, i), ks);
        });
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        for (std::size_t j = 0; j < ks.size(); ++j) {
            std::uint64_t successes = 0;
            for (const auto& row : by_trial) successes += static_cast<std::uint64_t>(row[j]);
            out.push_back(ConnectivityPoint{n, c_list[j], ks[j], make_estimate(successes, trials, seed, ms)});
        }
    }
    return out;
}

}  // namespace knnrgg
