#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "mixnash/attack.hpp"
#include "mixnash/core.hpp"

namespace mixnash {

// ---------------------------------------------------------------------------
// The discrete zero-sum game
// ---------------------------------------------------------------------------

/// Loss tensor l[i][j][k]: classifier k on candidate j of point i, stored
/// flat with per-point offsets (candidate counts may differ across points).
class FiniteGame {
  public:
    FiniteGame() = default;

    FiniteGame(std::vector<std::vector<Vec>> tensor, Vec weights, double bound_M)
        : weights_(std::move(weights)), bound_M_(bound_M) {
        if (tensor.empty() || tensor.size() != weights_.size())
            throw std::invalid_argument("FiniteGame: tensor/weights mismatch");
        L_ = tensor.front().empty() ? 0 : tensor.front().front().size();
        if (L_ == 0) throw std::invalid_argument("FiniteGame: no classifiers");
        offsets_.reserve(tensor.size() + 1);
        offsets_.push_back(0);
        for (const auto& point : tensor) {
            if (point.empty()) throw std::invalid_argument("FiniteGame: point without candidates");
            for (const auto& row : point) {
                if (row.size() != L_) throw std::invalid_argument("FiniteGame: ragged classifier axis");
                for (double v : row) {
                    if (!(v >= 0.0 && v <= bound_M_ + 1e-12))
                        throw std::invalid_argument("FiniteGame: loss outside [0, bound_M]");
                    flat_.push_back(v);
                }
            }
            offsets_.push_back(flat_.size() / L_);
        }
        double s = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw std::invalid_argument("FiniteGame: negative weight");
            s += w;
        }
        if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("FiniteGame: weights must sum to 1");
    }

    std::size_t points() const { return weights_.size(); }
    std::size_t classifiers() const { return L_; }
    std::size_t candidates(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
    double weight(std::size_t i) const { return weights_[i]; }
    const Vec& weights() const { return weights_; }
    double bound_M() const { return bound_M_; }

    double loss(std::size_t i, std::size_t j, std::size_t k) const {
        return flat_[(offsets_[i] + j) * L_ + k];
    }

    /// Row of classifier losses for candidate j of point i.
    const double* row(std::size_t i, std::size_t j) const { return &flat_[(offsets_[i] + j) * L_]; }

    FiniteGame scaled(double c) const {
        if (!(c > 0.0)) throw std::invalid_argument("FiniteGame::scaled: factor must be positive");
        FiniteGame g(*this);
        for (double& v : g.flat_) v *= c;
        g.bound_M_ *= c;
        return g;
    }

  private:
    Vec flat_;
    std::vector<std::size_t> offsets_;
    Vec weights_;
    std::size_t L_ = 0;
    double bound_M_ = 1.0;
};

/// A strategy pair with its certified values. gap = primal - dual is a
/// rigorous bound on the pair's distance to equilibrium (weak duality).
struct EquilibriumCertificate {
    Mixture lambda;
    AttackPlan plan;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double gap = 0.0;
    long iterations = 0;
};

/// Evaluates the full loss tensor for the given classifiers and candidates.
inline FiniteGame build_game(const Loss& loss, const std::vector<Classifier>& clfs,
                             const LabeledDataset& data, const CandidateSet& cands) {
    if (cands.size() != data.size()) throw std::invalid_argument("build_game: candidate/point mismatch");
    std::vector<std::vector<Vec>> tensor(data.size());
    Vec weights(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        weights[i] = data.points[i].weight;
        tensor[i].resize(cands.candidates[i].size(), Vec(clfs.size()));
        for (std::size_t j = 0; j < cands.candidates[i].size(); ++j)
            for (std::size_t k = 0; k < clfs.size(); ++k)
                tensor[i][j][k] = eval_loss(loss, clfs[k], cands.candidates[i][j], data.points[i].y);
    }
    return FiniteGame(std::move(tensor), std::move(weights), loss.bound_M);
}

namespace detail {

inline void require_simplex(const Mixture& mix, std::size_t L, const char* who) {
    if (mix.size() != L) throw std::invalid_argument(std::string(who) + ": mixture length mismatch");
    if (!mix.in_simplex(1e-9)) throw std::invalid_argument(std::string(who) + ": mixture outside the simplex");
}

}  // namespace detail

/// Classifier-commits-first value: sum_i w_i max_j <lambda, l[i][j][.]>.
/// Convex and piecewise-linear in lambda.
inline double primal_value(const FiniteGame& game, const Mixture& mix) {
    detail::require_simplex(mix, game.classifiers(), "primal_value");
    const std::size_t L = game.classifiers();
    double total = 0.0;
    for (std::size_t i = 0; i < game.points(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < game.candidates(i); ++j) {
            const double* row = game.row(i, j);
            double v = 0.0;
            for (std::size_t k = 0; k < L; ++k) v += mix.weights[k] * row[k];
            best = std::max(best, v);
        }
        total += game.weight(i) * best;
    }
    return total;
}

/// Adversary-commits-first value: the best single classifier against the
/// fixed randomized attack, min_k sum_i w_i sum_j q_ij l[i][j][k].
inline double dual_value(const FiniteGame& game, const AttackPlan& plan) {
    if (plan.q.size() != game.points()) throw std::invalid_argument("dual_value: plan/point mismatch");
    const std::size_t L = game.classifiers();
    Vec per_classifier(L, 0.0);
    for (std::size_t i = 0; i < game.points(); ++i) {
        if (plan.q[i].size() != game.candidates(i))
            throw std::invalid_argument("dual_value: plan/candidate mismatch");
        double mass = 0.0;
        for (std::size_t j = 0; j < plan.q[i].size(); ++j) {
            const double q = plan.q[i][j];
            if (q < -1e-12 || !std::isfinite(q)) throw std::invalid_argument("dual_value: negative mass");
            mass += q;
            if (q == 0.0) continue;
            const double* row = game.row(i, j);
            const double wq = game.weight(i) * q;
            for (std::size_t k = 0; k < L; ++k) per_classifier[k] += wq * row[k];
        }
        if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("dual_value: point mass must sum to 1");
    }
    return *std::min_element(per_classifier.begin(), per_classifier.end());
}

/// Exact best response inside the tensor: per point, all mass on the lowest
/// candidate index attaining max_j <lambda, l[i][j][.]>.
inline std::pair<AttackPlan, double> game_best_response(const FiniteGame& game, const Mixture& mix) {
    detail::require_simplex(mix, game.classifiers(), "game_best_response");
    const std::size_t L = game.classifiers();
    AttackPlan plan;
    plan.q.resize(game.points());
    double value = 0.0;
    for (std::size_t i = 0; i < game.points(); ++i) {
        std::size_t best_j = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < game.candidates(i); ++j) {
            const double* row = game.row(i, j);
            double v = 0.0;
            for (std::size_t k = 0; k < L; ++k) v += mix.weights[k] * row[k];
            if (v > best) {
                best = v;
                best_j = j;
            }
        }
        plan.q[i].assign(game.candidates(i), 0.0);
        plan.q[i][best_j] = 1.0;
        value += game.weight(i) * best;
    }
    return {std::move(plan), value};
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

struct MwConfig {
    long iterations = 10000;
    double gap_tolerance = 1e-6;  // stop once a checkpoint certificate reaches this gap
    long check_every = 0;         // 0 -> max(1, iterations / 200)
    std::uint64_t seed = 0;       // reserved for randomized oracles; the exact solver is deterministic
};

/// Multiplicative-weights (exponentiated-gradient) self-play: the mixture
/// plays Hedge with step sqrt(8 ln L / T) / M against exact best responses.
/// Certificates are formed from running averages (lambda_bar, q_bar),
/// checked periodically; the best pair seen is returned. Pure strategies e_k
/// are also admitted as certificate mixtures, since for some games (e.g.
/// epsilon = 0) the equilibrium is a vertex that finite-time averages can
/// only approach.
inline EquilibriumCertificate solve_equilibrium_mw(const FiniteGame& game, const MwConfig& cfg = {}) {
    if (cfg.iterations < 1) throw std::invalid_argument("solve_equilibrium_mw: iterations must be >= 1");
    const std::size_t L = game.classifiers();
    const std::size_t N = game.points();
    const long check_every = cfg.check_every > 0 ? cfg.check_every : std::max<long>(1, cfg.iterations / 200);
    const double eta =
        std::sqrt(8.0 * std::log(static_cast<double>(std::max<std::size_t>(L, 2))) /
                  static_cast<double>(cfg.iterations)) /
        game.bound_M();

    Mixture lambda = Mixture::uniform(L);
    Vec lambda_sum(L, 0.0);
    // Best responses are point masses; accumulate argmax counts and
    // normalize only at checkpoints.
    std::vector<std::vector<long>> plan_counts(N);
    for (std::size_t i = 0; i < N; ++i) plan_counts[i].assign(game.candidates(i), 0);

    EquilibriumCertificate best;
    best.gap = std::numeric_limits<double>::infinity();

    auto checkpoint = [&](long t) {
        Mixture avg{lambda_sum};
        for (double& v : avg.weights) v /= static_cast<double>(t);
        AttackPlan avg_plan;
        avg_plan.q.resize(N);
        for (std::size_t i = 0; i < N; ++i) {
            avg_plan.q[i].resize(plan_counts[i].size());
            for (std::size_t j = 0; j < plan_counts[i].size(); ++j)
                avg_plan.q[i][j] = static_cast<double>(plan_counts[i][j]) / static_cast<double>(t);
        }
        const double dual = dual_value(game, avg_plan);
        double primal = primal_value(game, avg);
        Mixture cert_lambda = std::move(avg);
        for (std::size_t k = 0; k < L; ++k) {
            const double pv = primal_value(game, Mixture::vertex(L, k));
            if (pv < primal) {
                primal = pv;
                cert_lambda = Mixture::vertex(L, k);
            }
        }
        const double gap = primal - dual;
        if (gap < best.gap) {
            best = EquilibriumCertificate{std::move(cert_lambda), std::move(avg_plan), primal, dual, gap, t};
        }
    };

    for (long t = 1; t <= cfg.iterations; ++t) {
        // Exact best response to the current mixture.
        Vec g(L, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            std::size_t best_j = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < game.candidates(i); ++j) {
                const double* row = game.row(i, j);
                double v = 0.0;
                for (std::size_t k = 0; k < L; ++k) v += lambda.weights[k] * row[k];
                if (v > best_v) {
                    best_v = v;
                    best_j = j;
                }
            }
            ++plan_counts[i][best_j];
            const double* row = game.row(i, best_j);
            const double w = game.weight(i);
            for (std::size_t k = 0; k < L; ++k) g[k] += w * row[k];
        }
        for (std::size_t k = 0; k < L; ++k) lambda_sum[k] += lambda.weights[k];

        // Hedge update against the expected-loss vector g.
        double z = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            lambda.weights[k] *= std::exp(-eta * g[k]);
            z += lambda.weights[k];
        }
        for (std::size_t k = 0; k < L; ++k) lambda.weights[k] /= z;

        if (t % check_every == 0 || t == cfg.iterations) {
            checkpoint(t);
            if (best.gap <= cfg.gap_tolerance) break;
        }
    }
    return best;
}

/// Exact minimization for L = 2 by enumerating every pairwise crossing of the
/// per-candidate affine pieces of lambda1 -> primal value, plus the endpoints.
/// The dual plan mixes the extreme-slope active candidates per point so the
/// certificate gap is ~0 (<= 1e-9).
inline EquilibriumCertificate solve_exact_two(const FiniteGame& game) {
    if (game.classifiers() != 2)
        throw UnsupportedOperation("solve_exact_two: requires exactly two classifiers");
    const std::size_t N = game.points();

    // Piece j of point i: value(lambda1) = a_ij * lambda1 + b_ij.
    auto piece = [&](std::size_t i, std::size_t j) {
        const double* row = game.row(i, j);
        return std::pair<double, double>{row[0] - row[1], row[1]};
    };

    std::vector<double> knots{0.0, 1.0};
    for (std::size_t i = 0; i < N; ++i) {
        const std::size_t m = game.candidates(i);
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t j2 = j + 1; j2 < m; ++j2) {
                const auto [a1, b1] = piece(i, j);
                const auto [a2, b2] = piece(i, j2);
                if (a1 == a2) continue;
                const double x = (b2 - b1) / (a1 - a2);
                if (x > 0.0 && x < 1.0) knots.push_back(x);
            }
    }
    std::sort(knots.begin(), knots.end());

    auto value_at = [&](double l1) {
        Mixture m{Vec{l1, 1.0 - l1}};
        return primal_value(game, m);
    };

    double best_l1 = 0.0;
    double best_val = std::numeric_limits<double>::infinity();
    for (double x : knots) {
        const double v = value_at(x);
        if (v <= best_val) {  // ties resolve toward the larger lambda1
            best_val = v;
            best_l1 = x;
        }
    }

    // Dual plan on the active set at the minimizer. Subdifferential of the
    // value at lambda1 spans [sum_i w_i min-slope, sum_i w_i max-slope]; pick
    // the convex combination t making it 0 (clamped at the boundary cases).
    const double tol = 1e-12 * std::max(1.0, game.bound_M());
    std::vector<std::size_t> lo_j(N), hi_j(N);
    double slope_lo = 0.0, slope_hi = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double best_v = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < game.candidates(i); ++j) {
            const auto [a, b] = piece(i, j);
            best_v = std::max(best_v, a * best_l1 + b);
        }
        double amin = std::numeric_limits<double>::infinity();
        double amax = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < game.candidates(i); ++j) {
            const auto [a, b] = piece(i, j);
            if (a * best_l1 + b >= best_v - tol) {
                if (a < amin) {
                    amin = a;
                    lo_j[i] = j;
                }
                if (a > amax) {
                    amax = a;
                    hi_j[i] = j;
                }
            }
        }
        slope_lo += game.weight(i) * amin;
        slope_hi += game.weight(i) * amax;
    }
    double t = 0.0;
    if (best_l1 <= 0.0) {
        t = 1.0;  // right derivative >= 0; the max-slope candidates certify
    } else if (best_l1 >= 1.0) {
        t = 0.0;  // left derivative <= 0
    } else if (slope_hi > slope_lo) {
        t = std::clamp(-slope_lo / (slope_hi - slope_lo), 0.0, 1.0);
    }

    AttackPlan plan;
    plan.q.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        plan.q[i].assign(game.candidates(i), 0.0);
        plan.q[i][lo_j[i]] += 1.0 - t;
        plan.q[i][hi_j[i]] += t;
    }

    EquilibriumCertificate cert;
    cert.lambda = Mixture{Vec{best_l1, 1.0 - best_l1}};
    cert.primal_value = best_val;
    cert.dual_value = dual_value(game, plan);
    cert.plan = std::move(plan);
    cert.gap = cert.primal_value - cert.dual_value;
    cert.iterations = 1;
    return cert;
}

// ---------------------------------------------------------------------------
// Canonical instance and the separated-support check
// ---------------------------------------------------------------------------

struct MotivatingInstance {
    std::vector<Classifier> classifiers;
    LabeledDataset data;
    CandidateSet candidates;
    FiniteGame game;
    Loss loss;
};

/// The canonical 1-D instance: mass 1/2 at (0,-1) and 1/4 at (+-1,+1),
/// classifiers f1(x) = -x - 1/2 and f2(x) = x - 1/2, budget epsilon = 1 with
/// integer-shift candidates {x-1, x, x+1}, zero-one loss. Its equilibrium
/// mixes the classifiers evenly for a game value of 3/4.
inline MotivatingInstance motivating_instance() {
    MotivatingInstance inst;
    inst.loss = Loss::zero_one();
    inst.classifiers = {make_linear({-1.0}, -0.5, 0), make_linear({1.0}, -0.5, 1)};
    inst.data.metric = Metric::L2;
    inst.data.epsilon = 1.0;
    inst.data.points = {{{0.0}, -1, 0.5}, {{-1.0}, 1, 0.25}, {{1.0}, 1, 0.25}};
    std::vector<std::vector<Vec>> lists;
    for (const auto& p : inst.data.points)
        lists.push_back({{p.x[0] - 1.0}, {p.x[0]}, {p.x[0] + 1.0}});
    inst.candidates = make_candidates_explicit(inst.data, std::move(lists));
    inst.game = build_game(inst.loss, inst.classifiers, inst.data, inst.candidates);
    return inst;
}

/// Adversarial risk of the nearest-neighbor classifier built from the two
/// supports, measured over dense candidate enumeration. Exactly 0 whenever
/// the supports are separated by more than 2 * epsilon and the data sits on
/// them; otherwise reports whatever risk the enumeration finds.
inline double nearest_neighbor_separation_check(const std::vector<Vec>& pos_support,
                                                const std::vector<Vec>& neg_support,
                                                const LabeledDataset& data,
                                                std::size_t samples_per_point = 2000,
                                                std::uint64_t seed = 0) {
    if (pos_support.empty() || neg_support.empty())
        throw std::invalid_argument("nearest_neighbor_separation_check: empty support");
    std::vector<Classifier> clf{make_nearest_neighbor(pos_support, neg_support, data.metric)};
    const CandidateSet cands = make_candidates_uniform_ball(data, samples_per_point, seed);
    return adversarial_risk(Loss::zero_one(), clf, Mixture::uniform(1), data, cands);
}

/// Smallest cross-support distance; > 2 * epsilon certifies zero risk above.
inline double support_separation(const std::vector<Vec>& pos_support, const std::vector<Vec>& neg_support,
                                 Metric metric) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pos_support)
        for (const auto& n : neg_support) best = std::min(best, distance(metric, p, n));
    return best;
}

}  // namespace mixnash
