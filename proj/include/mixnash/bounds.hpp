#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mixnash/rng.hpp"
#include "mixnash/solvers.hpp"

namespace mixnash {

// ---------------------------------------------------------------------------
// Rademacher complexity of a per-point loss slice
// ---------------------------------------------------------------------------

namespace detail {

inline double rademacher_one_draw(const std::vector<const double*>& rows, std::size_t L,
                                  const std::vector<int>& sigma) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < L; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < rows.size(); ++j) s += sigma[j] * rows[j][k];
        best = std::max(best, s);
    }
    return best / static_cast<double>(rows.size());
}

inline std::vector<const double*> point_rows(const FiniteGame& game, std::size_t point) {
    if (point >= game.points()) throw std::invalid_argument("rademacher: point index out of range");
    std::vector<const double*> rows(game.candidates(point));
    for (std::size_t j = 0; j < rows.size(); ++j) rows[j] = game.row(point, j);
    return rows;
}

}  // namespace detail

/// Monte-Carlo estimate of (1/m) E_sigma[ max_k sum_j sigma_j l_jk ] over the
/// given rows. Draws come in antithetic pairs (sigma, -sigma), so the
/// estimate is exactly invariant under negating every sign.
inline double rademacher_estimate_rows(const std::vector<const double*>& rows, std::size_t L,
                                       long sigma_draws, std::uint64_t seed) {
    if (sigma_draws < 1) throw std::invalid_argument("rademacher_estimate: need at least one draw");
    if (rows.empty()) throw std::invalid_argument("rademacher_estimate: empty slice");
    const long pairs = (sigma_draws + 1) / 2;
    Rng rng = Rng::stream(seed, 0);
    std::vector<int> sigma(rows.size());
    double total = 0.0;
    for (long p = 0; p < pairs; ++p) {
        for (auto& s : sigma) s = (rng.next_u64() & 1u) ? 1 : -1;
        total += detail::rademacher_one_draw(rows, L, sigma);
        for (auto& s : sigma) s = -s;
        total += detail::rademacher_one_draw(rows, L, sigma);
    }
    return total / static_cast<double>(2 * pairs);
}

inline double rademacher_estimate(const FiniteGame& game, std::size_t point, long sigma_draws,
                                  std::uint64_t seed) {
    return rademacher_estimate_rows(detail::point_rows(game, point), game.classifiers(), sigma_draws, seed);
}

/// Exact expectation by enumerating every sign pattern (2^m of them).
inline double rademacher_exact_rows(const std::vector<const double*>& rows, std::size_t L) {
    const std::size_t m = rows.size();
    if (m == 0) throw std::invalid_argument("rademacher_exact: empty slice");
    if (m > 20) throw std::invalid_argument("rademacher_exact: too many candidates to enumerate");
    std::vector<int> sigma(m);
    double total = 0.0;
    const std::size_t patterns = std::size_t{1} << m;
    for (std::size_t mask = 0; mask < patterns; ++mask) {
        for (std::size_t j = 0; j < m; ++j) sigma[j] = (mask >> j) & 1u ? 1 : -1;
        total += detail::rademacher_one_draw(rows, L, sigma);
    }
    return total / static_cast<double>(patterns);
}

inline double rademacher_exact(const FiniteGame& game, std::size_t point) {
    return rademacher_exact_rows(detail::point_rows(game, point), game.classifiers());
}

// ---------------------------------------------------------------------------
// Error-bound formulas
// ---------------------------------------------------------------------------

/// Sampling-error bound for the smoothed objective:
///   2 e^{M/alpha} Rbar + 6 max(M,1) e^{M/alpha} sqrt(log(4/delta) / (2 m N))
/// where Rbar is the average per-point Rademacher complexity of the drawn
/// samples. Holds with probability at least 1 - delta.
inline double statistical_bound(double M, double alpha, long N, long m, double delta,
                                double rademacher_avg) {
    if (!(M > 0.0)) throw std::invalid_argument("statistical_bound: M must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("statistical_bound: alpha must be positive");
    if (N < 1 || m < 1) throw std::invalid_argument("statistical_bound: N and m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("statistical_bound: delta in (0,1)");
    const double amp = std::exp(M / alpha);
    const double m_tilde = std::max(M, 1.0);
    return 2.0 * amp * rademacher_avg +
           6.0 * m_tilde * amp *
               std::sqrt(std::log(4.0 / delta) / (2.0 * static_cast<double>(m) * static_cast<double>(N)));
}

/// Smoothing-error bound 2 alpha |log C_beta| + beta, where C_beta lower
/// bounds the reference-measure mass of beta-optimal attacks.
inline double approximation_bound(double alpha, double c_beta, double beta) {
    if (!(alpha > 0.0)) throw std::invalid_argument("approximation_bound: alpha must be positive");
    if (!(c_beta > 0.0 && c_beta <= 1.0)) throw std::invalid_argument("approximation_bound: C_beta in (0,1]");
    if (!(beta >= 0.0)) throw std::invalid_argument("approximation_bound: beta must be >= 0");
    return 2.0 * alpha * std::abs(std::log(c_beta)) + beta;
}

/// Exact C_beta for a discrete instance under the uniform reference measure:
/// the smallest fraction of beta-optimal candidates at any point, minimized
/// over a mixture grid.
inline double discrete_c_beta(const FiniteGame& game, double beta, std::size_t grid_divisions = 1000) {
    const std::size_t L = game.classifiers();
    double c = 1.0;
    for_each_simplex_grid_point(L, grid_divisions, [&](const Vec& lambda) {
        for (std::size_t i = 0; i < game.points(); ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            Vec scores(game.candidates(i));
            for (std::size_t j = 0; j < game.candidates(i); ++j) {
                const double* row = game.row(i, j);
                double v = 0.0;
                for (std::size_t k = 0; k < L; ++k) v += lambda[k] * row[k];
                scores[j] = v;
                mx = std::max(mx, v);
            }
            std::size_t near = 0;
            for (double v : scores)
                if (v >= mx - beta) ++near;
            c = std::min(c, static_cast<double>(near) / static_cast<double>(scores.size()));
        }
    });
    return c;
}

// ---------------------------------------------------------------------------
// Empirical validation of the sampling-error bound
// ---------------------------------------------------------------------------

struct BoundTrial {
    double deviation = 0.0;
    double bound = 0.0;
    bool violated = false;
};

struct BoundReport {
    double bound_value = 0.0;          // mean bound across trials
    double empirical_deviation = 0.0;  // median deviation across trials
    double confidence_delta = 0.0;
    long trials = 0;
    double violation_rate = 0.0;
    std::vector<BoundTrial> trial_data;
};

struct BoundValidationConfig {
    std::function<FiniteGame(std::uint64_t)> make_game;  // full-candidate game; U = uniform over candidates
    std::size_t sample_m = 20;                           // i.i.d. draws from U per point
    double alpha = 0.5;
    std::size_t grid_divisions = 1000;  // exact-minimization grid, L <= 3
    long rademacher_draws = 10000;      // Monte-Carlo fallback past the enumeration limit
};

namespace detail {

inline double grid_min_entropic(const EntropicProblem& problem, std::size_t L, std::size_t divisions) {
    double best = std::numeric_limits<double>::infinity();
    for_each_simplex_grid_point(L, divisions, [&](const Vec& lambda) {
        best = std::min(best, problem.value(lambda));
    });
    return best;
}

}  // namespace detail

/// Runs seeded trials: draw a game, minimize the smoothed objective exactly
/// (grid) over the full candidate sets and over a fresh i.i.d. sample of
/// sample_m candidates per point, and compare the gap to statistical_bound.
/// Per-trial violations are recorded, never fatal -- the bound is a
/// probabilistic statement.
inline BoundReport validate_statistical_bound(const BoundValidationConfig& cfg, long trials, double delta,
                                              std::uint64_t seed) {
    if (!cfg.make_game) throw std::invalid_argument("validate_statistical_bound: missing game generator");
    if (trials < 1) throw std::invalid_argument("validate_statistical_bound: trials must be >= 1");
    BoundReport report;
    report.confidence_delta = delta;
    report.trials = trials;
    Vec deviations;
    long violations = 0;
    double bound_sum = 0.0;
    for (long t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = Rng::stream(seed, static_cast<std::uint64_t>(t)).next_u64();
        const FiniteGame game = cfg.make_game(trial_seed);
        if (game.classifiers() > 3)
            throw std::invalid_argument("validate_statistical_bound: exact grid minimization needs L <= 3");

        EntropicConfig full_cfg;
        full_cfg.alpha = {cfg.alpha};
        full_cfg.samples_per_point = 0;
        EntropicProblem full(game, full_cfg);

        EntropicConfig sampled_cfg = full_cfg;
        sampled_cfg.samples_per_point = cfg.sample_m;
        sampled_cfg.seed = trial_seed ^ 0x5bf03635ULL;
        EntropicProblem sampled(game, sampled_cfg);

        const double r_full = detail::grid_min_entropic(full, game.classifiers(), cfg.grid_divisions);
        const double r_sampled = detail::grid_min_entropic(sampled, game.classifiers(), cfg.grid_divisions);
        const double deviation = std::abs(r_full - r_sampled);

        double rad_sum = 0.0;
        for (std::size_t i = 0; i < game.points(); ++i) {
            const auto& idx = sampled.samples(i);
            std::vector<const double*> rows(idx.size());
            for (std::size_t s = 0; s < idx.size(); ++s) rows[s] = game.row(i, idx[s]);
            rad_sum += idx.size() <= 15
                           ? rademacher_exact_rows(rows, game.classifiers())
                           : rademacher_estimate_rows(rows, game.classifiers(), cfg.rademacher_draws,
                                                      trial_seed ^ 0x7f4a7c15ULL);
        }
        const double rad_avg = rad_sum / static_cast<double>(game.points());
        const double bound = statistical_bound(game.bound_M(), cfg.alpha, static_cast<long>(game.points()),
                                               static_cast<long>(cfg.sample_m), delta, rad_avg);

        const bool violated = deviation > bound;
        if (violated) ++violations;
        deviations.push_back(deviation);
        bound_sum += bound;
        report.trial_data.push_back(BoundTrial{deviation, bound, violated});
    }
    std::sort(deviations.begin(), deviations.end());
    report.empirical_deviation = deviations[deviations.size() / 2];
    report.bound_value = bound_sum / static_cast<double>(trials);
    report.violation_rate = static_cast<double>(violations) / static_cast<double>(trials);
    return report;
}

}  // namespace mixnash
