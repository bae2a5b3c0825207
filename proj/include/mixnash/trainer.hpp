#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixnash/attack.hpp"
#include "mixnash/core.hpp"
#include "mixnash/rng.hpp"
#include "mixnash/solvers.hpp"

namespace mixnash {

enum class LambdaSolver { Entropic, Oracle };

struct TrainConfig {
    std::size_t model_count = 3;
    long iterations = 604;
    long t_theta = 50;   // model updates per phase
    long t_lambda = 25;  // mixture-update iterations per phase
    double lr_model = 0.1;
    double lr_lambda = 0.001;
    double epsilon = 1.0;
    Metric metric = Metric::L2;
    PgdConfig pgd{10, 0.0, 1, 0};         // model-step attack
    PgdConfig lambda_pgd{3, 0.0, 5, 0};   // restarts feeding the mixture update's candidates
    double alpha = 0.001;                 // smoothing of the mixture objective
    LambdaSolver lambda_solver = LambdaSolver::Entropic;
    double loss_bound = 3.0;              // training surrogate clamp
    double init_scale = 1.0;              // stddev of the random parameter init
    std::size_t batch_size = 0;  // 0 -> full dataset every iteration
    std::uint64_t seed = 0;

    void validate() const {
        if (model_count < 1 || iterations < 1 || t_theta < 1 || t_lambda < 1)
            throw std::invalid_argument("train: counts must be >= 1");
        if (!(lr_model > 0.0) || !(lr_lambda > 0.0)) throw std::invalid_argument("train: rates must be positive");
        if (epsilon < 0.0) throw std::invalid_argument("train: epsilon < 0");
    }
};

struct MixtureModel {
    std::vector<LogisticBinary> models;
    Mixture lambda;

    std::vector<Classifier> classifiers() const {
        std::vector<Classifier> out;
        out.reserve(models.size());
        for (std::size_t k = 0; k < models.size(); ++k)
            out.push_back(Classifier{models[k], static_cast<int>(k)});
        return out;
    }
};

struct TrainMetricsRow {
    long phase = 0;
    long iter = 0;
    double standard_acc = 0.0;
    double robust_acc = 0.0;
    Vec lambda;
};

struct TrainMetrics {
    std::vector<TrainMetricsRow> rows;
    long model_updates = 0;
    long lambda_phases = 0;
};

struct EvalConfig {
    double epsilon = 1.0;
    Metric metric = Metric::L2;
    PgdConfig pgd{20, 0.0, 1, 0};  // evaluation attack strength
};

/// Clean and attacked accuracy of the mixture under the zero-one loss. The
/// attack maximizes expected cross-entropy; since that need not maximize the
/// zero-one error, each point scores the worse of its clean and attacked
/// error, which keeps robust_acc <= standard_acc structurally and reports a
/// sharper robustness lower bound.
inline std::pair<double, double> evaluate_robust(const MixtureModel& model, const LabeledDataset& data,
                                                 const EvalConfig& cfg) {
    const auto clfs = model.classifiers();
    const Loss z = Loss::zero_one();
    const double standard = standard_risk(z, clfs, model.lambda, data);
    double robust_risk = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& p = data.points[i];
        double err_clean = 0.0;
        for (std::size_t k = 0; k < clfs.size(); ++k)
            err_clean += model.lambda.weights[k] * eval_loss(z, clfs[k], p);
        PgdConfig attack = cfg.pgd;
        attack.seed = Rng::stream(cfg.pgd.seed, i).next_u64();
        const Vec attacked = pgd_attack(clfs, model.lambda, p.x, p.y, cfg.epsilon, cfg.metric, attack);
        double err_att = 0.0;
        for (std::size_t k = 0; k < clfs.size(); ++k)
            err_att += model.lambda.weights[k] * eval_loss(z, clfs[k], attacked, p.y);
        robust_risk += p.weight * std::max(err_clean, err_att);
    }
    return {1.0 - standard, 1.0 - robust_risk};
}

/// Candidate-set variant for non-differentiable classifiers: the adversary
/// best-responds over the discrete attack sets.
inline std::pair<double, double> evaluate_robust(const std::vector<Classifier>& clfs, const Mixture& mix,
                                                 const LabeledDataset& data, const CandidateSet& cands) {
    const Loss z = Loss::zero_one();
    return {1.0 - standard_risk(z, clfs, mix, data), 1.0 - adversarial_risk(z, clfs, mix, data, cands)};
}

namespace detail {

inline LabeledDataset make_batch(const LabeledDataset& data, const std::vector<std::size_t>& idx) {
    LabeledDataset batch;
    batch.metric = data.metric;
    batch.epsilon = data.epsilon;
    batch.points.reserve(idx.size());
    const double w = 1.0 / static_cast<double>(idx.size());
    for (std::size_t i : idx) {
        LabeledPoint p = data.points[i];
        p.weight = w;
        batch.points.push_back(std::move(p));
    }
    batch.normalize_weights();
    return batch;
}

/// One SGD step of model k on the attacked batch, mean clamped cross-entropy.
/// Points past the clamp contribute a zero subgradient, so hopelessly lost
/// inputs stop dragging the boundary.
inline void sgd_step(LogisticBinary& model, const LabeledDataset& batch, const std::vector<Vec>& attacked,
                     double lr, double bound) {
    const std::size_t d = model.w.size();
    Vec gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const int y = batch.points[i].y;
        const double f = dot(model.w, attacked[i]) + model.b;
        const double margin = static_cast<double>(y) * f;
        if (softplus(-margin) >= bound) continue;
        const double coeff = -static_cast<double>(y) * sigmoid(-margin);
        for (std::size_t j = 0; j < d; ++j) gw[j] += coeff * attacked[i][j];
        gb += coeff;
    }
    const double scale = lr / static_cast<double>(batch.size());
    for (std::size_t j = 0; j < d; ++j) model.w[j] -= scale * gw[j];
    model.b -= scale * gb;
}

}  // namespace detail

/// Alternating adversarial training of a mixture: on most iterations one
/// uniformly-drawn model takes an SGD step on a batch attacked against the
/// current mixture; every (t_theta * L + 1)-th iteration the mixture runs
/// t_lambda smoothed-objective updates against fresh attack candidates.
/// Gradient steps use cross-entropy; every reported accuracy is zero-one.
/// Deterministic for a fixed seed.
inline std::pair<MixtureModel, TrainMetrics> train(const LabeledDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    for (const auto& p : data.points)
        if (p.y != -1 && p.y != 1) throw std::invalid_argument("train: labels must be -1/+1");
    const std::size_t L = cfg.model_count;
    const std::size_t d = data.dim();

    MixtureModel model;
    model.lambda = Mixture::uniform(L);
    Rng init = Rng::stream(cfg.seed, 0);
    for (std::size_t k = 0; k < L; ++k) {
        LogisticBinary m;
        m.w.resize(d);
        for (auto& v : m.w) v = cfg.init_scale * init.next_normal();
        m.b = cfg.init_scale * init.next_normal();
        model.models.push_back(std::move(m));
    }

    const Loss ce = Loss::cross_entropy(cfg.loss_bound);
    EvalConfig eval;
    eval.epsilon = cfg.epsilon;
    eval.metric = cfg.metric;
    eval.pgd.seed = Rng::stream(cfg.seed, 1).next_u64();

    TrainMetrics metrics;
    {
        auto [sa, ra] = evaluate_robust(model, data, eval);
        metrics.rows.push_back({0, 0, sa, ra, model.lambda.weights});
    }

    Rng pick = Rng::stream(cfg.seed, 2);
    Rng shuffle_rng = Rng::stream(cfg.seed, 3);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = data.size();  // forces a shuffle on first use

    auto next_batch = [&]() {
        if (cfg.batch_size == 0 || cfg.batch_size >= data.size()) {
            std::vector<std::size_t> idx(data.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            return detail::make_batch(data, idx);
        }
        std::vector<std::size_t> idx;
        idx.reserve(cfg.batch_size);
        while (idx.size() < cfg.batch_size) {
            if (cursor >= order.size()) {
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
                cursor = 0;
            }
            idx.push_back(order[cursor++]);
        }
        return detail::make_batch(data, idx);
    };

    const long period = cfg.t_theta * static_cast<long>(L) + 1;
    for (long t = 1; t <= cfg.iterations; ++t) {
        LabeledDataset batch = next_batch();
        batch.epsilon = cfg.epsilon;
        batch.metric = cfg.metric;
        const auto clfs = model.classifiers();
        if (t % period != 0) {
            const std::size_t k = pick.next_below(L);
            PgdConfig attack = cfg.pgd;
            std::vector<Vec> attacked(batch.size());
            for (std::size_t i = 0; i < batch.size(); ++i) {
                attack.seed = Rng::stream(cfg.seed, 0x10000ULL + static_cast<std::uint64_t>(t) * 65537ULL + i)
                                  .next_u64();
                attacked[i] = pgd_attack(clfs, model.lambda, batch.points[i].x, batch.points[i].y,
                                         cfg.epsilon, cfg.metric, attack, ce);
            }
            detail::sgd_step(model.models[k], batch, attacked, cfg.lr_model, ce.bound_M);
            ++metrics.model_updates;
        } else {
            PgdConfig lam_attack = cfg.lambda_pgd;
            lam_attack.seed = Rng::stream(cfg.seed, 0x20000ULL + static_cast<std::uint64_t>(t)).next_u64();
            const CandidateSet cands = make_candidates_pgd(batch, clfs, model.lambda, lam_attack, ce);
            const FiniteGame game = build_game(ce, clfs, batch, cands);
            if (cfg.lambda_solver == LambdaSolver::Oracle) {
                SubgradientConfig sc;
                sc.iterations = cfg.t_lambda;
                model.lambda = oracle_subgradient(game, sc, exact_oracle(), &model.lambda).best;
            } else {
                EntropicConfig ecfg;
                ecfg.alpha = {cfg.alpha};
                ecfg.fista_iterations = cfg.t_lambda;
                model.lambda = projected_gradient_minimize(game, ecfg, cfg.lr_lambda, &model.lambda).lambda;
            }
            ++metrics.lambda_phases;
            auto [sa, ra] = evaluate_robust(model, data, eval);
            metrics.rows.push_back({metrics.lambda_phases, t, sa, ra, model.lambda.weights});
        }
    }
    {
        auto [sa, ra] = evaluate_robust(model, data, eval);
        metrics.rows.push_back({metrics.lambda_phases, cfg.iterations, sa, ra, model.lambda.weights});
    }
    return {std::move(model), std::move(metrics)};
}

}  // namespace mixnash
