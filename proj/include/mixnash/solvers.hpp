#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixnash/game.hpp"
#include "mixnash/rng.hpp"

namespace mixnash {

// ---------------------------------------------------------------------------
// Simplex projection
// ---------------------------------------------------------------------------

/// Euclidean projection onto the probability simplex (sort-and-threshold,
/// O(L log L)): out = max(v - tau, 0) with tau chosen so the result sums to 1.
inline Mixture project_simplex(const Vec& v) {
    if (v.empty()) throw std::invalid_argument("project_simplex: empty input");
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("project_simplex: non-finite input");
    Vec sorted = v;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        cumsum += sorted[j];
        const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) {
            rho = j + 1;
            tau = candidate;
        }
    }
    (void)rho;
    Mixture out{Vec(v.size())};
    for (std::size_t k = 0; k < v.size(); ++k) out.weights[k] = std::max(v[k] - tau, 0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Projected subgradient with a best-response oracle
// ---------------------------------------------------------------------------

struct SubgradientConfig {
    long iterations = 1000;
    double step = 0.0;          // 0 -> 2 / (M * sqrt(L * T))
    double oracle_delta = 0.0;  // accuracy the supplied oracle guarantees
};

/// Supplies a (delta-approximate) best-response plan to a mixture.
using BestResponseOracle = std::function<AttackPlan(const FiniteGame&, const Mixture&)>;

inline BestResponseOracle exact_oracle() {
    return [](const FiniteGame& g, const Mixture& m) { return game_best_response(g, m).first; };
}

/// Best response over a random sub-sample of each point's candidates; useful
/// when candidate sets are large. The incurred oracle error is bounded by the
/// worst value gap between the sampled and the full set.
inline BestResponseOracle sampled_oracle(std::size_t samples_per_point, std::uint64_t seed) {
    if (samples_per_point == 0) throw std::invalid_argument("sampled_oracle: need at least one sample");
    return [samples_per_point, seed](const FiniteGame& g, const Mixture& m) {
        AttackPlan plan;
        plan.q.resize(g.points());
        const std::size_t L = g.classifiers();
        for (std::size_t i = 0; i < g.points(); ++i) {
            Rng rng = Rng::stream(seed, i);
            plan.q[i].assign(g.candidates(i), 0.0);
            std::size_t best_j = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < std::min(samples_per_point, g.candidates(i)); ++s) {
                const std::size_t j = rng.next_below(g.candidates(i));
                const double* row = g.row(i, j);
                double v = 0.0;
                for (std::size_t k = 0; k < L; ++k) v += m.weights[k] * row[k];
                if (v > best_v) {
                    best_v = v;
                    best_j = j;
                }
            }
            plan.q[i][best_j] = 1.0;
        }
        return plan;
    };
}

struct SubgradientResult {
    std::vector<Mixture> iterates;  // lambda_0 .. lambda_T
    Vec value_trace;                // primal value of each iterate
    Mixture best;
    double best_value = 0.0;
};

/// Projected subgradient descent on the adversarial risk: the subgradient at
/// lambda is the vector of per-classifier expected losses under the oracle's
/// best-response plan. Starts from the uniform mixture unless a warm start is
/// given. Returns every iterate and the best (minimum) value.
inline SubgradientResult oracle_subgradient(const FiniteGame& game, const SubgradientConfig& cfg,
                                            const BestResponseOracle& oracle = exact_oracle(),
                                            const Mixture* start = nullptr) {
    if (cfg.iterations < 1) throw std::invalid_argument("oracle_subgradient: iterations must be >= 1");
    const std::size_t L = game.classifiers();
    const double eta = cfg.step > 0.0
                           ? cfg.step
                           : 2.0 / (game.bound_M() * std::sqrt(static_cast<double>(L) *
                                                               static_cast<double>(cfg.iterations)));

    SubgradientResult res;
    Mixture lambda = start ? *start : Mixture::uniform(L);
    res.iterates.push_back(lambda);
    res.value_trace.push_back(primal_value(game, lambda));
    res.best = lambda;
    res.best_value = res.value_trace.back();

    for (long t = 1; t <= cfg.iterations; ++t) {
        const AttackPlan plan = oracle(game, lambda);
        Vec g(L, 0.0);
        for (std::size_t i = 0; i < game.points(); ++i) {
            const double w = game.weight(i);
            for (std::size_t j = 0; j < plan.q[i].size(); ++j) {
                if (plan.q[i][j] == 0.0) continue;
                const double* row = game.row(i, j);
                for (std::size_t k = 0; k < L; ++k) g[k] += w * plan.q[i][j] * row[k];
            }
        }
        Vec step(L);
        for (std::size_t k = 0; k < L; ++k) step[k] = lambda.weights[k] - eta * g[k];
        lambda = project_simplex(step);
        res.iterates.push_back(lambda);
        const double v = primal_value(game, lambda);
        res.value_trace.push_back(v);
        if (v < res.best_value) {
            res.best_value = v;
            res.best = lambda;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Entropic smoothing
// ---------------------------------------------------------------------------

struct EntropicConfig {
    Vec alpha{0.001};                // length 1 broadcasts to every point
    std::size_t samples_per_point = 0;  // 0 -> every candidate, once (deterministic mode)
    long fista_iterations = 500;
    double initial_lipschitz = 0.0;  // 0 -> M^2 * L / min alpha
    double backtrack_growth = 2.0;
    std::uint64_t seed = 0;
};

/// The smoothed objective over fixed per-point candidate samples:
///   sum_i w_i * alpha_i * log( (1/m_i) sum_j exp(<lambda, l[i][j][.]> / alpha_i) ).
/// Sampling indices are drawn once at construction so repeated evaluations
/// see the same function.
class EntropicProblem {
  public:
    EntropicProblem(const FiniteGame& game, const EntropicConfig& cfg) : game_(&game) {
        const std::size_t N = game.points();
        alpha_.resize(N);
        if (cfg.alpha.size() == 1) {
            std::fill(alpha_.begin(), alpha_.end(), cfg.alpha[0]);
        } else if (cfg.alpha.size() == N) {
            alpha_ = cfg.alpha;
        } else {
            throw std::invalid_argument("entropic: alpha must have length 1 or N");
        }
        for (double a : alpha_)
            if (!(a > 0.0)) throw std::invalid_argument("entropic: alpha must be positive");

        samples_.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t m = game.candidates(i);
            if (cfg.samples_per_point == 0 || cfg.samples_per_point >= m) {
                samples_[i].resize(m);
                std::iota(samples_[i].begin(), samples_[i].end(), std::size_t{0});
            } else {
                Rng rng = Rng::stream(cfg.seed, i);
                samples_[i].resize(cfg.samples_per_point);
                for (auto& j : samples_[i]) j = rng.next_below(m);  // i.i.d. from the reference measure
            }
        }
    }

    const FiniteGame& game() const { return *game_; }
    double alpha(std::size_t i) const { return alpha_[i]; }
    const std::vector<std::size_t>& samples(std::size_t i) const { return samples_[i]; }

    /// Value and gradient at lambda (defined on all of R^L; simplex membership
    /// is the callers' contract). Log-sum-exp is max-subtracted for stability.
    double value_and_gradient(const Vec& lambda, Vec* grad) const {
        const std::size_t L = game_->classifiers();
        if (lambda.size() != L) throw std::invalid_argument("entropic: lambda length mismatch");
        if (grad) grad->assign(L, 0.0);
        double total = 0.0;
        Vec scores;
        for (std::size_t i = 0; i < game_->points(); ++i) {
            const auto& idx = samples_[i];
            const double a = alpha_[i];
            scores.resize(idx.size());
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < idx.size(); ++s) {
                const double* row = game_->row(i, idx[s]);
                double v = 0.0;
                for (std::size_t k = 0; k < L; ++k) v += lambda[k] * row[k];
                scores[s] = v;
                mx = std::max(mx, v);
            }
            double z = 0.0;
            for (double v : scores) z += std::exp((v - mx) / a);
            const double w = game_->weight(i);
            total += w * (a * (std::log(z / static_cast<double>(idx.size()))) + mx);
            if (grad) {
                for (std::size_t s = 0; s < idx.size(); ++s) {
                    const double p = std::exp((scores[s] - mx) / a) / z;
                    const double* row = game_->row(i, idx[s]);
                    for (std::size_t k = 0; k < L; ++k) (*grad)[k] += w * p * row[k];
                }
            }
        }
        return total;
    }

    double value(const Vec& lambda) const { return value_and_gradient(lambda, nullptr); }

  private:
    const FiniteGame* game_;
    Vec alpha_;
    std::vector<std::vector<std::size_t>> samples_;
};

inline std::pair<double, Vec> entropic_objective(const FiniteGame& game, const EntropicConfig& cfg,
                                                 const Mixture& lambda) {
    EntropicProblem problem(game, cfg);
    Vec grad;
    const double v = problem.value_and_gradient(lambda.weights, &grad);
    return {v, std::move(grad)};
}

struct SolveTrace {
    Mixture lambda;
    Vec value_trace;                // objective value per accepted iterate
    std::vector<Mixture> iterates;  // accepted iterate per entry of value_trace
};

namespace detail {

inline double default_lipschitz(const FiniteGame& game, const EntropicProblem& p) {
    double amin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < game.points(); ++i) amin = std::min(amin, p.alpha(i));
    const double M = game.bound_M();
    return M * M * static_cast<double>(game.classifiers()) / amin;
}

inline double sq_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

}  // namespace detail

/// Accelerated proximal gradient over the simplex with backtracking line
/// search (growth factor from the config). The monotone variant is used: an
/// iterate is only accepted if it does not increase the objective, so the
/// returned trace is nonincreasing.
inline SolveTrace fista_minimize(const FiniteGame& game, const EntropicConfig& cfg) {
    EntropicProblem problem(game, cfg);
    const std::size_t L = game.classifiers();
    double lip = cfg.initial_lipschitz > 0.0 ? cfg.initial_lipschitz : detail::default_lipschitz(game, problem);

    Mixture x = Mixture::uniform(L);
    Mixture y = x;
    Mixture z = x;
    double fx = problem.value(x.weights);
    double t = 1.0;

    SolveTrace out;
    out.value_trace.push_back(fx);
    out.iterates.push_back(x);

    for (long it = 0; it < cfg.fista_iterations; ++it) {
        Vec grad;
        const double fy = problem.value_and_gradient(y.weights, &grad);
        double fz = 0.0;
        for (;;) {
            Vec step(L);
            for (std::size_t k = 0; k < L; ++k) step[k] = y.weights[k] - grad[k] / lip;
            z = project_simplex(step);
            fz = problem.value(z.weights);
            double lin = fy;
            for (std::size_t k = 0; k < L; ++k) lin += grad[k] * (z.weights[k] - y.weights[k]);
            lin += 0.5 * lip * detail::sq_dist(z.weights, y.weights);
            if (fz <= lin + 1e-12) break;
            lip *= cfg.backtrack_growth;
        }

        const Mixture x_prev = x;
        if (fz <= fx) {
            x = z;
            fx = fz;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        Vec yv(L);
        for (std::size_t k = 0; k < L; ++k)
            yv[k] = x.weights[k] + (t / t_next) * (z.weights[k] - x.weights[k]) +
                    ((t - 1.0) / t_next) * (x.weights[k] - x_prev.weights[k]);
        y = project_simplex(yv);
        t = t_next;
        out.value_trace.push_back(fx);
        out.iterates.push_back(x);
    }
    out.lambda = x;
    return out;
}

/// Plain projected gradient descent on the entropic objective. With a fixed
/// learning rate this is the mixture-update rule used inside the trainer; with
/// lr = 0 it backtracks like fista_minimize and serves as its unaccelerated
/// baseline.
inline SolveTrace projected_gradient_minimize(const FiniteGame& game, const EntropicConfig& cfg,
                                              double learning_rate = 0.0,
                                              const Mixture* start = nullptr) {
    EntropicProblem problem(game, cfg);
    const std::size_t L = game.classifiers();
    double lip = cfg.initial_lipschitz > 0.0 ? cfg.initial_lipschitz : detail::default_lipschitz(game, problem);

    Mixture x = start ? *start : Mixture::uniform(L);
    double fx = problem.value(x.weights);
    SolveTrace out;
    out.value_trace.push_back(fx);
    out.iterates.push_back(x);

    for (long it = 0; it < cfg.fista_iterations; ++it) {
        Vec grad;
        fx = problem.value_and_gradient(x.weights, &grad);
        Mixture z = x;
        if (learning_rate > 0.0) {
            Vec step(L);
            for (std::size_t k = 0; k < L; ++k) step[k] = x.weights[k] - learning_rate * grad[k];
            z = project_simplex(step);
        } else {
            for (;;) {
                Vec step(L);
                for (std::size_t k = 0; k < L; ++k) step[k] = x.weights[k] - grad[k] / lip;
                z = project_simplex(step);
                const double fz = problem.value(z.weights);
                double lin = fx;
                for (std::size_t k = 0; k < L; ++k) lin += grad[k] * (z.weights[k] - x.weights[k]);
                lin += 0.5 * lip * detail::sq_dist(z.weights, x.weights);
                if (fz <= lin + 1e-12) break;
                lip *= cfg.backtrack_growth;
            }
        }
        x = z;
        out.value_trace.push_back(problem.value(x.weights));
        out.iterates.push_back(x);
    }
    out.lambda = x;
    return out;
}

// ---------------------------------------------------------------------------
// Smoothing-error study
// ---------------------------------------------------------------------------

struct AlphaLimitRow {
    double alpha = 0.0;
    Vec per_point_deviation;     // |smoothed inner value - exact inner max| per point
    double aggregate = 0.0;      // weighted sum of the deviations
};

/// For each alpha, how far the smoothed per-point values sit from the exact
/// inner maxima at the given mixture. Deviations vanish as alpha -> 0.
inline std::vector<AlphaLimitRow> alpha_limit_study(const FiniteGame& game, const Vec& alphas,
                                                    const Mixture& lambda) {
    detail::require_simplex(lambda, game.classifiers(), "alpha_limit_study");
    const std::size_t L = game.classifiers();
    std::vector<AlphaLimitRow> rows;
    for (double a : alphas) {
        if (!(a > 0.0)) throw std::invalid_argument("alpha_limit_study: alpha must be positive");
        AlphaLimitRow row;
        row.alpha = a;
        row.per_point_deviation.resize(game.points());
        for (std::size_t i = 0; i < game.points(); ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            Vec scores(game.candidates(i));
            for (std::size_t j = 0; j < game.candidates(i); ++j) {
                const double* r = game.row(i, j);
                double v = 0.0;
                for (std::size_t k = 0; k < L; ++k) v += lambda.weights[k] * r[k];
                scores[j] = v;
                mx = std::max(mx, v);
            }
            double z = 0.0;
            for (double v : scores) z += std::exp((v - mx) / a);
            const double smoothed = a * std::log(z / static_cast<double>(scores.size())) + mx;
            row.per_point_deviation[i] = std::abs(smoothed - mx);
            row.aggregate += game.weight(i) * row.per_point_deviation[i];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mixnash
