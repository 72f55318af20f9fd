#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "connectivity.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "stats.hpp"

namespace knnrgg {

enum class TailDirection { Upper, Lower };

struct TailQuery {
    double A = 0.0;    ///< mean of the Poisson variable (area times intensity)
    double rho = 1.0;  ///< threshold as a multiple of the mean
    TailDirection direction = TailDirection::Upper;
};

/// rho - 1 - rho log rho, with 0 log 0 = 0. Non-positive, zero only at rho = 1.
inline double plogp_rate(double rho) {
    if (!(rho >= 0.0)) throw std::invalid_argument("plogp_rate: rho must be >= 0");
    if (rho == 0.0) return -1.0;
    return rho - 1.0 - rho * std::log(rho);
}

/// Chernoff bound exp((rho - 1 - rho log rho) A). For rho > 1 it bounds
/// P(Po(A) >= rho A); for rho < 1 it bounds P(Po(A) <= rho A). The direction
/// only records which side the caller means.
inline double log_poisson_tail_bound(const TailQuery& q) {
    if (!(q.A >= 0.0)) throw std::invalid_argument("poisson_tail_bound: A must be >= 0");
    return plogp_rate(q.rho) * q.A;
}

inline double poisson_tail_bound(const TailQuery& q) { return std::exp(log_poisson_tail_bound(q)); }

inline constexpr double kPoissonExactMaxMean = 1e4;

namespace detail {

inline double log_poisson_pmf(double A, std::int64_t j) {
    return -A + static_cast<double>(j) * std::log(A) - std::lgamma(static_cast<double>(j) + 1.0);
}

/// log P(Po(A) >= t) for t > A, summing upward from the largest term.
inline double log_upper_sum(double A, std::int64_t t) {
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t j = t + 1;; ++j) {
        term *= A / static_cast<double>(j);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return log_poisson_pmf(A, t) + std::log(sum);
}

/// log P(Po(A) <= t) for t < A, summing downward from the largest term.
inline double log_lower_sum(double A, std::int64_t t) {
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t j = t; j > 0; --j) {
        term *= static_cast<double>(j) / A;
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return log_poisson_pmf(A, t) + std::log(sum);
}

}  // namespace detail

/// Natural log of P(Po(A) >= t) (Upper) or P(Po(A) <= t) (Lower), exact up to
/// double rounding. Usable where the probability itself underflows.
inline double log_poisson_tail_exact(double A, std::int64_t t, TailDirection direction) {
    if (!(A >= 0.0) || !std::isfinite(A)) {
        throw std::invalid_argument("poisson_tail_exact: A must be finite and >= 0");
    }
    if (A > kPoissonExactMaxMean) throw std::domain_error("poisson_tail_exact: A above 1e4");
    const double ninf = -std::numeric_limits<double>::infinity();
    if (direction == TailDirection::Upper) {
        if (t <= 0) return 0.0;
        if (A == 0.0) return ninf;
        if (static_cast<double>(t) > A) return detail::log_upper_sum(A, t);
        return std::log1p(-std::exp(detail::log_lower_sum(A, t - 1)));
    }
    if (t < 0) return ninf;
    if (A == 0.0) return 0.0;
    if (static_cast<double>(t) < A) return detail::log_lower_sum(A, t);
    return std::log1p(-std::exp(detail::log_upper_sum(A, t + 1)));
}

inline double poisson_tail_exact(double A, std::int64_t t, TailDirection direction) {
    return std::exp(log_poisson_tail_exact(A, t, direction));
}

struct DensityBlock {
    double rho = 1.0;
    double area = 0.0;
};

/// Leading exponent sum (rho_i - 1 - rho_i log rho_i) |A_i| of the probability
/// that a unit Poisson process has exactly rho_i |A_i| points in each block.
inline double plogp_exponent(std::span<const DensityBlock> blocks) {
    double total = 0.0;
    for (const auto& b : blocks) {
        if (!(b.area >= 0.0)) throw std::invalid_argument("plogp_exponent: area must be >= 0");
        total += plogp_rate(b.rho) * b.area;
    }
    return total;
}

/// Scale r log+(sum rho_i |A_i|) of the error term that accompanies the
/// leading exponent, with log+ x = max(log x, 1). Reported, never added in.
inline double plogp_correction_scale(std::span<const DensityBlock> blocks) {
    double mass = 0.0;
    for (const auto& b : blocks) mass += b.rho * b.area;
    const double logp = mass > 0.0 ? std::max(std::log(mass), 1.0) : 1.0;
    return static_cast<double>(blocks.size()) * logp;
}

/// Expected number of vertices of G_{m,k} with fewer than k points in a
/// quarter-disc of area 19k: m exp((1/19 - 1 - (1/19) log(1/19)) 19k).
/// Bounds the probability of an edge of length at least 5 sqrt(k).
inline double long_edge_probability_bound(double m, int k, int M) {
    if (k < 1 || M < 1) throw std::invalid_argument("long_edge_probability_bound: k, M >= 1");
    if (m < static_cast<double>(M) * M * k) {
        throw std::invalid_argument("long_edge_probability_bound: requires m >= M^2 k");
    }
    return m * std::exp(log_poisson_tail_bound({19.0 * k, 1.0 / 19.0, TailDirection::Lower}));
}

/// (MN)^2 exp((k/N^2)(N^2/21 - 1 - (N^2/21) log(N^2/21))): bound on some cell
/// holding at least k/21 points. Capped at 1; meaningful only when N^2 > 21.
inline double type_a_probability_bound(int M, int N, int k) {
    const double cells = std::pow(static_cast<double>(M) * N, 2);
    const double ratio = static_cast<double>(N) * N / 21.0;
    if (ratio <= 1.0) return 1.0;
    const double log_bound =
        std::log(cells) + log_poisson_tail_bound({static_cast<double>(k) / (N * N), ratio});
    return std::min(1.0, std::exp(log_bound));
}

/// (MN)^4 P(Po(30Mk/N) >= eps k / 3) via the Chernoff bound. Only valid once
/// N >= (180 M / eps)^{1/2} and eps N / (90 M) > 1; returns 1 otherwise.
inline double type_b_probability_bound(int M, int N, int k, double eps) {
    if (static_cast<double>(N) < std::sqrt(180.0 * M / eps)) return 1.0;
    const double ratio = eps * N / (90.0 * M);
    if (ratio <= 1.0) return 1.0;
    const double mean = 30.0 * M * static_cast<double>(k) / N;
    const double log_bound =
        4.0 * std::log(static_cast<double>(M) * N) + log_poisson_tail_bound({mean, ratio});
    return std::min(1.0, std::exp(log_bound));
}

struct DiscBoundResult {
    int k = 0;
    int M = 0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double p_I = 0.0;            ///< P(Po(k+1) >= k+1)
    double log_p_II = 0.0;       ///< -8(k+1), the void probability of D3 \ D1
    double p_II = 0.0;
    std::uint64_t iii_successes = 0;
    double p_III_hat = 0.0;
    Interval p_III_ci;
    double log_p1_lower = 0.0;   ///< log(p_I p_II p_III_ci.low)
    double p1_lower = 0.0;
    double f1_upper = 0.0;       ///< -log(p1_lower) / k
};

/// Lower bound on p1(k) from the three-disc construction. Conditions (I) and
/// (II) are exact; (III) concerns only D5 \ D3, which is independent of the
/// other two, so it is estimated on unconditioned samples of S. D1 must sit in
/// the central square S' and D5 in S.
inline DiscBoundResult disc_construction_bound(int k, int M, std::uint64_t trials,
                                               std::uint64_t seed, double eps_net = 0.05,
                                               unsigned workers = 1) {
    if (k < 1) throw std::invalid_argument("disc_construction_bound: k must be >= 1");
    if (trials < 1) throw std::invalid_argument("disc_construction_bound: trials must be >= 1");
    const auto regions = event_regions(EventSpec{EventKind::A, M, k});
    const DiscTriple discs = DiscTriple::for_k(k, Point{0.0, 0.0});
    if (!discs.d1.inside(regions.inner) || !discs.d5.inside(regions.outer)) {
        throw std::invalid_argument("disc_construction_bound: discs do not fit for this M");
    }

    DiscBoundResult res;
    res.k = k;
    res.M = M;
    res.trials = trials;
    res.seed = seed;
    res.p_I = poisson_tail_exact(k + 1.0, k + 1, TailDirection::Upper);
    res.log_p_II = -8.0 * (k + 1.0);
    res.p_II = std::exp(res.log_p_II);

    std::vector<char> hit(trials, 0);
    parallel_for(trials, workers, [&](std::size_t i) {
        const PointSet sample = sample_poisson(regions.outer, 1.0, derive_seed(seed, "disc-iii", i));
        hit[i] = check_condition_III(sample, k, Point{0.0, 0.0}, eps_net) ? 1 : 0;
    });
    for (char h : hit) res.iii_successes += static_cast<std::uint64_t>(h);
    res.p_III_hat = static_cast<double>(res.iii_successes) / static_cast<double>(trials);
    res.p_III_ci = wilson_interval(res.iii_successes, trials);
    res.log_p1_lower = std::log(res.p_I) + res.log_p_II + std::log(res.p_III_ci.low);
    res.p1_lower = std::exp(res.log_p1_lower);
    res.f1_upper = -res.log_p1_lower / k;
    return res;
}

/// max(1/c1, 1/(2 c2)).
inline double c_crit_from_rates(double c1, double c2) {
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw std::invalid_argument("c_crit_from_rates: rates must be > 0");
    return std::max(1.0 / c1, 1.0 / (2.0 * c2));
}

}  // namespace knnrgg
