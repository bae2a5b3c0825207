#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixnash/core.hpp"
#include "mixnash/rng.hpp"

namespace mixnash {

// ---------------------------------------------------------------------------
// Candidate attack sets
// ---------------------------------------------------------------------------

/// Discrete per-point attack sets: candidate j of point i is a feasible
/// attacked input (label preserved, within epsilon of the clean point).
/// The clean input is always a member, so the feasible set is never empty
/// and the adversarial value can never drop below the standard risk.
struct CandidateSet {
    std::vector<std::vector<Vec>> candidates;  // [point][candidate]

    std::size_t size() const { return candidates.size(); }
    std::size_t count(std::size_t i) const { return candidates[i].size(); }

    void validate(const LabeledDataset& data, double slack = 1e-9) const {
        if (candidates.size() != data.size())
            throw std::invalid_argument("candidates: point count mismatch");
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (candidates[i].empty()) throw std::invalid_argument("candidates: empty list");
            for (const auto& u : candidates[i]) {
                if (u.size() != data.points[i].x.size())
                    throw std::invalid_argument("candidates: dimension mismatch");
                if (distance(data.metric, data.points[i].x, u) > data.epsilon + slack)
                    throw std::invalid_argument("candidates: outside the epsilon ball");
            }
        }
    }
};

/// The adversary's mixed strategy: one probability vector over candidates
/// per data point.
struct AttackPlan {
    std::vector<Vec> q;  // [point][candidate]

    void validate(double tol = 1e-12) const {
        for (const auto& qi : q) {
            if (qi.empty()) throw std::invalid_argument("plan: empty point distribution");
            double s = 0.0;
            for (double v : qi) {
                if (v < -tol || !std::isfinite(v)) throw std::invalid_argument("plan: negative mass");
                s += v;
            }
            if (std::abs(s - 1.0) > tol) throw std::invalid_argument("plan: mass must sum to 1");
        }
    }
};

/// Draws m points in the epsilon-ball around `center`, deterministically for
/// a given seed. L2 uses a normalized Gaussian direction with radius
/// epsilon * U^(1/d); Linf draws each coordinate uniformly in [-eps, eps].
inline std::vector<Vec> sample_ball(const Vec& center, double epsilon, Metric metric, std::size_t m,
                                    std::uint64_t seed) {
    if (m == 0) throw std::invalid_argument("sample_ball: m must be >= 1");
    if (epsilon < 0.0) throw std::invalid_argument("sample_ball: epsilon < 0");
    const std::size_t d = center.size();
    std::vector<Vec> out(m, Vec(d, 0.0));
    Rng rng = Rng::stream(seed, 0);
    for (std::size_t s = 0; s < m; ++s) {
        Vec& u = out[s];
        if (metric == Metric::Linf) {
            for (std::size_t j = 0; j < d; ++j) u[j] = center[j] + rng.uniform(-epsilon, epsilon);
        } else {
            double norm2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                u[j] = rng.next_normal();
                norm2 += u[j] * u[j];
            }
            const double norm = std::sqrt(norm2);
            const double radius =
                epsilon * std::pow(rng.next_double(), 1.0 / static_cast<double>(d));
            const double scale = norm > 0.0 ? radius / norm : 0.0;
            for (std::size_t j = 0; j < d; ++j) u[j] = center[j] + scale * u[j];
        }
    }
    return out;
}

/// Explicit candidate lists; appends the clean input wherever it is missing.
inline CandidateSet make_candidates_explicit(const LabeledDataset& data,
                                             std::vector<std::vector<Vec>> lists) {
    if (lists.size() != data.size()) throw std::invalid_argument("candidates: point count mismatch");
    CandidateSet cs{std::move(lists)};
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        const Vec& clean = data.points[i].x;
        bool has_clean = false;
        for (const auto& u : cs.candidates[i])
            if (u == clean) {
                has_clean = true;
                break;
            }
        if (!has_clean) cs.candidates[i].push_back(clean);
    }
    cs.validate(data);
    return cs;
}

/// Clean input first, then m uniform samples from the epsilon-ball; the
/// sampling stream is split per point index.
inline CandidateSet make_candidates_uniform_ball(const LabeledDataset& data, std::size_t m,
                                                 std::uint64_t seed) {
    CandidateSet cs;
    cs.candidates.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        cs.candidates[i].push_back(data.points[i].x);
        auto sampled = sample_ball(data.points[i].x, data.epsilon, data.metric, m,
                                   Rng::stream(seed, i).next_u64());
        for (auto& u : sampled) cs.candidates[i].push_back(std::move(u));
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Best response and adversarial risk
// ---------------------------------------------------------------------------

/// Exact best response of the adversary to a fixed mixture over the discrete
/// candidate sets. Each point's mass goes to one candidate maximizing the
/// expected loss (ties broken toward the lowest candidate index), so the plan
/// is deterministic. Returns the plan and the adversarial risk it achieves.
inline std::pair<AttackPlan, double> best_response(const Loss& loss, const std::vector<Classifier>& clfs,
                                                   const Mixture& mix, const CandidateSet& cands,
                                                   const LabeledDataset& data) {
    if (mix.size() != clfs.size()) throw std::invalid_argument("best_response: mixture length mismatch");
    if (cands.size() != data.size()) throw std::invalid_argument("best_response: candidate/point mismatch");
    AttackPlan plan;
    plan.q.resize(data.size());
    double value = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& list = cands.candidates[i];
        if (list.empty()) throw std::invalid_argument("best_response: empty candidate list");
        std::size_t best_j = 0;
        double best_v = -1.0;
        for (std::size_t j = 0; j < list.size(); ++j) {
            double v = 0.0;
            for (std::size_t k = 0; k < clfs.size(); ++k)
                v += mix.weights[k] * eval_loss(loss, clfs[k], list[j], data.points[i].y);
            if (v > best_v) {
                best_v = v;
                best_j = j;
            }
        }
        plan.q[i].assign(list.size(), 0.0);
        plan.q[i][best_j] = 1.0;
        value += data.points[i].weight * best_v;
    }
    return {std::move(plan), value};
}

/// Worst-case expected loss over the candidate sets. With epsilon = 0 and
/// candidates reduced to the clean points this equals standard_risk exactly
/// (same accumulation order).
inline double adversarial_risk(const Loss& loss, const std::vector<Classifier>& clfs, const Mixture& mix,
                               const LabeledDataset& data, const CandidateSet& cands) {
    return best_response(loss, clfs, mix, cands, data).second;
}

// ---------------------------------------------------------------------------
// PGD attack on a mixture
// ---------------------------------------------------------------------------

struct PgdConfig {
    int steps = 10;
    double step_size = 0.0;  // 0 -> 2.5 * epsilon / steps
    int restarts = 5;
    std::uint64_t seed = 0;
};

namespace detail {

inline double sigmoid(double z) { return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Expected (clamped) cross-entropy of the mixture at x.
inline double mixture_ce(const std::vector<Classifier>& clfs, const Mixture& mix, const Loss& loss,
                         const Vec& x, int y) {
    double v = 0.0;
    for (std::size_t k = 0; k < clfs.size(); ++k) v += mix.weights[k] * eval_loss(loss, clfs[k], x, y);
    return v;
}

/// Gradient of the (unclamped) expected cross-entropy w.r.t. x.
inline Vec mixture_ce_grad(const std::vector<Classifier>& clfs, const Mixture& mix, const Vec& x, int y) {
    Vec g(x.size(), 0.0);
    for (std::size_t k = 0; k < clfs.size(); ++k) {
        const Vec& w = clfs[k].linear_w();
        const double f = dot(w, x) + clfs[k].linear_b();
        const double coeff = -static_cast<double>(y) * sigmoid(-static_cast<double>(y) * f) * mix.weights[k];
        for (std::size_t j = 0; j < x.size(); ++j) g[j] += coeff * w[j];
    }
    return g;
}

inline void project_ball(Vec& x, const Vec& center, double epsilon, Metric metric) {
    if (metric == Metric::Linf) {
        for (std::size_t j = 0; j < x.size(); ++j)
            x[j] = std::clamp(x[j], center[j] - epsilon, center[j] + epsilon);
    } else {
        Vec delta(x.size());
        double norm2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            delta[j] = x[j] - center[j];
            norm2 += delta[j] * delta[j];
        }
        const double norm = std::sqrt(norm2);
        if (norm > epsilon) {
            const double scale = epsilon / norm;
            for (std::size_t j = 0; j < x.size(); ++j) x[j] = center[j] + scale * delta[j];
        }
    }
}

/// One PGD run from `start`, projected onto the ball around `clean`.
/// Returns the iterate (including the start) with the highest expected loss.
inline std::pair<Vec, double> pgd_single_run(const std::vector<Classifier>& clfs, const Mixture& mix,
                                             const Loss& loss, const Vec& clean, Vec start, int y,
                                             double epsilon, Metric metric, int steps, double step) {
    Vec best = start;
    double best_v = mixture_ce(clfs, mix, loss, start, y);
    Vec cur = std::move(start);
    for (int s = 0; s < steps; ++s) {
        Vec g = mixture_ce_grad(clfs, mix, cur, y);
        if (metric == Metric::Linf) {
            for (std::size_t j = 0; j < cur.size(); ++j)
                cur[j] += step * (g[j] > 0.0 ? 1.0 : (g[j] < 0.0 ? -1.0 : 0.0));
        } else {
            const double norm = std::sqrt(dot(g, g));
            if (norm > 0.0)
                for (std::size_t j = 0; j < cur.size(); ++j) cur[j] += step * g[j] / norm;
        }
        project_ball(cur, clean, epsilon, metric);
        const double v = mixture_ce(clfs, mix, loss, cur, y);
        if (v > best_v) {
            best_v = v;
            best = cur;
        }
    }
    return {std::move(best), best_v};
}

}  // namespace detail

/// Projected gradient ascent on the mixture's expected cross-entropy, staying
/// in the epsilon-ball around x. Linf takes sign-gradient steps, L2 normalized
/// gradient steps. Restart 0 starts at the clean point, later restarts at
/// uniform samples from the ball; the best iterate across all restarts is
/// returned and never scores below the clean point.
inline Vec pgd_attack(const std::vector<Classifier>& clfs, const Mixture& mix, const Vec& x, int y,
                      double epsilon, Metric metric, const PgdConfig& cfg = {},
                      const Loss& loss = Loss::cross_entropy()) {
    if (loss.kind != LossKind::CrossEntropy)
        throw std::invalid_argument("pgd_attack: requires the cross-entropy loss");
    if (cfg.steps < 1) throw std::invalid_argument("pgd_attack: steps must be >= 1");
    if (cfg.restarts < 1) throw std::invalid_argument("pgd_attack: restarts must be >= 1");
    if (mix.size() != clfs.size()) throw std::invalid_argument("pgd_attack: mixture length mismatch");
    for (const auto& c : clfs)
        if (!c.differentiable()) throw UnsupportedOperation("pgd_attack: non-differentiable classifier");

    const double step = cfg.step_size > 0.0 ? cfg.step_size : 2.5 * epsilon / static_cast<double>(cfg.steps);
    Vec best = x;
    double best_v = detail::mixture_ce(clfs, mix, loss, x, y);
    Rng rng = Rng::stream(cfg.seed, 1);
    for (int r = 0; r < cfg.restarts; ++r) {
        Vec start = x;
        if (r > 0 && epsilon > 0.0) start = sample_ball(x, epsilon, metric, 1, rng.next_u64())[0];
        auto [cand, v] = detail::pgd_single_run(clfs, mix, loss, x, std::move(start), y, epsilon, metric,
                                                cfg.steps, step);
        if (v > best_v) {
            best_v = v;
            best = std::move(cand);
        }
    }
    return best;
}

/// Clean input first, then the best iterate of each PGD restart, computed on
/// per-(point, restart) split streams so any evaluation order reproduces the
/// same set.
inline CandidateSet make_candidates_pgd(const LabeledDataset& data, const std::vector<Classifier>& clfs,
                                        const Mixture& mix, const PgdConfig& cfg,
                                        const Loss& loss = Loss::cross_entropy()) {
    for (const auto& c : clfs)
        if (!c.differentiable()) throw UnsupportedOperation("make_candidates_pgd: non-differentiable classifier");
    const double step =
        cfg.step_size > 0.0 ? cfg.step_size : 2.5 * data.epsilon / static_cast<double>(cfg.steps);
    CandidateSet cs;
    cs.candidates.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Vec& clean = data.points[i].x;
        cs.candidates[i].push_back(clean);
        for (int r = 0; r < cfg.restarts; ++r) {
            Rng rr = Rng::stream(cfg.seed, i * 16777619ULL + static_cast<std::uint64_t>(r));
            Vec start = clean;
            if (r > 0 && data.epsilon > 0.0)
                start = sample_ball(clean, data.epsilon, data.metric, 1, rr.next_u64())[0];
            auto [cand, v] = detail::pgd_single_run(clfs, mix, loss, clean, std::move(start),
                                                    data.points[i].y, data.epsilon, data.metric, cfg.steps,
                                                    step);
            (void)v;
            cs.candidates[i].push_back(std::move(cand));
        }
    }
    return cs;
}

}  // namespace mixnash
