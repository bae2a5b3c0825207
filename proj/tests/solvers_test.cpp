#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "mixnash/datagen.hpp"
#include "mixnash/game.hpp"
#include "mixnash/rng.hpp"
#include "mixnash/solvers.hpp"

using namespace mixnash;

namespace {

Vec random_simplex_point(std::size_t L, Rng& rng) {
    Vec v(L);
    double s = 0.0;
    for (auto& x : v) {
        x = 0.01 + rng.next_double();
        s += x;
    }
    for (auto& x : v) x /= s;
    return v;
}

}  // namespace

TEST_CASE("simplex projection") {
    SECTION("points already in the simplex are fixed") {
        Rng rng(3);
        for (int rep = 0; rep < 50; ++rep) {
            const Vec v = random_simplex_point(2 + rng.next_below(4), rng);
            const Mixture p = project_simplex(v);
            for (std::size_t k = 0; k < v.size(); ++k)
                CHECK(p.weights[k] == Catch::Approx(v[k]).margin(1e-12));
        }
    }
    SECTION("worked examples") {
        const Mixture a = project_simplex({1.0, 1.0});
        CHECK(a.weights[0] == Catch::Approx(0.5));
        CHECK(a.weights[1] == Catch::Approx(0.5));

        // KKT threshold tau = 0.1; grid-verified below.
        const Mixture b = project_simplex({0.8, 0.4});
        CHECK(b.weights[0] == Catch::Approx(0.7));
        CHECK(b.weights[1] == Catch::Approx(0.3));

        double best = std::numeric_limits<double>::infinity();
        Vec best_p(2);
        for (int s = 0; s <= 10000; ++s) {
            const double p0 = static_cast<double>(s) * 1e-4;
            const double d0 = p0 - 0.8;
            const double d1 = (1.0 - p0) - 0.4;
            const double dist = d0 * d0 + d1 * d1;
            if (dist < best) {
                best = dist;
                best_p = {p0, 1.0 - p0};
            }
        }
        CHECK(b.weights[0] == Catch::Approx(best_p[0]).margin(1e-4));
    }
    SECTION("idempotence, feasibility, optimality, permutation equivariance") {
        Rng rng(5);
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t L = 2 + rng.next_below(5);
            Vec v(L);
            for (auto& x : v) x = rng.uniform(-3.0, 3.0);
            const Mixture p = project_simplex(v);
            CHECK(p.in_simplex(1e-9));
            const Mixture pp = project_simplex(p.weights);
            for (std::size_t k = 0; k < L; ++k)
                CHECK(pp.weights[k] == Catch::Approx(p.weights[k]).margin(1e-12));

            // No random feasible point gets closer (50 probes per input).
            auto sq = [&](const Vec& a) {
                double s = 0.0;
                for (std::size_t k = 0; k < L; ++k) s += (a[k] - v[k]) * (a[k] - v[k]);
                return s;
            };
            const double d_star = sq(p.weights);
            for (int probe = 0; probe < 50; ++probe) CHECK(d_star <= sq(random_simplex_point(L, rng)) + 1e-12);

            // Permuting the input permutes the output.
            Vec rev(v.rbegin(), v.rend());
            const Mixture pr = project_simplex(rev);
            for (std::size_t k = 0; k < L; ++k)
                CHECK(pr.weights[k] == Catch::Approx(p.weights[L - 1 - k]).margin(1e-12));
        }
    }
    SECTION("non-finite input is rejected") {
        CHECK_THROWS_AS(project_simplex({1.0, std::numeric_limits<double>::infinity()}),
                        std::invalid_argument);
    }
}

TEST_CASE("oracle subgradient descent") {
    SECTION("default step size follows 2 / (M sqrt(L T))") {
        // M = 1, L = 4, T = 100 -> eta = 2 / sqrt(400) = 0.1. Exercised through
        // one step from uniform: lambda_1 = proj(lambda_0 - 0.1 g).
        RandomGameSpec spec;
        spec.points = 3;
        spec.max_candidates = 3;
        spec.classifiers = 4;
        spec.seed = 8;
        const FiniteGame g = gen_random_game(spec);
        SubgradientConfig cfg;
        cfg.iterations = 100;
        const auto res = oracle_subgradient(g, cfg);

        const auto plan = game_best_response(g, Mixture::uniform(4)).first;
        Vec grad(4, 0.0);
        for (std::size_t i = 0; i < g.points(); ++i)
            for (std::size_t j = 0; j < plan.q[i].size(); ++j)
                if (plan.q[i][j] > 0.0)
                    for (std::size_t k = 0; k < 4; ++k)
                        grad[k] += g.weight(i) * plan.q[i][j] * g.loss(i, j, k);
        Vec manual(4);
        for (std::size_t k = 0; k < 4; ++k) manual[k] = 0.25 - 0.1 * grad[k];
        const Mixture expected = project_simplex(manual);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(res.iterates[1].weights[k] == Catch::Approx(expected.weights[k]).margin(1e-12));
    }
    SECTION("convergence bound on the motivating game") {
        const auto inst = motivating_instance();
        SubgradientConfig cfg;
        cfg.iterations = 10000;
        const auto res = oracle_subgradient(inst.game, cfg);
        CHECK(res.best_value <= 0.75 + 2.0 * std::sqrt(2.0) / 100.0);
        CHECK(res.best_value >= 0.75 - 1e-9);
    }
    SECTION("bound holds with the exact reference solver on 50 random L = 2 games") {
        Rng rng(11);
        for (int rep = 0; rep < 50; ++rep) {
            RandomGameSpec spec;
            spec.points = 1 + rng.next_below(8);
            spec.max_candidates = 1 + rng.next_below(5);
            spec.classifiers = 2;
            spec.seed = rng.next_u64();
            const FiniteGame g = gen_random_game(spec);
            const double r_star = solve_exact_two(g).primal_value;
            SubgradientConfig cfg;
            cfg.iterations = 400;
            const auto res = oracle_subgradient(g, cfg);
            const double bound = 2.0 * g.bound_M() * std::sqrt(2.0) / std::sqrt(400.0);
            CHECK(res.best_value - r_star <= bound);
            CHECK(res.best_value - r_star >= -1e-9);
        }
    }
}

TEST_CASE("entropic objective") {
    const auto inst = motivating_instance();

    SECTION("single-candidate points collapse the log-sum-exp") {
        FiniteGame g({{Vec{0.4, 0.2}}, {Vec{0.9, 0.1}}}, {0.5, 0.5}, 1.0);
        EntropicConfig cfg;
        cfg.alpha = {0.05};
        const Mixture lam{{0.25, 0.75}};
        const auto [value, grad] = entropic_objective(g, cfg, lam);
        const double expected = 0.5 * (0.25 * 0.4 + 0.75 * 0.2) + 0.5 * (0.25 * 0.9 + 0.75 * 0.1);
        CHECK(value == Catch::Approx(expected).margin(1e-12));
        CHECK(grad[0] == Catch::Approx(0.5 * 0.4 + 0.5 * 0.9).margin(1e-12));
    }
    SECTION("large alpha tends to the per-point mean") {
        EntropicConfig cfg;
        cfg.alpha = {1e3};
        const Mixture lam{{0.5, 0.5}};
        const auto [value, grad] = entropic_objective(inst.game, cfg, lam);
        double mean_value = 0.0;
        for (std::size_t i = 0; i < inst.game.points(); ++i) {
            double m = 0.0;
            for (std::size_t j = 0; j < inst.game.candidates(i); ++j)
                m += 0.5 * inst.game.loss(i, j, 0) + 0.5 * inst.game.loss(i, j, 1);
            mean_value += inst.game.weight(i) * m / static_cast<double>(inst.game.candidates(i));
        }
        CHECK(value == Catch::Approx(mean_value).margin(1e-3));
    }
    SECTION("small alpha approaches the exact inner maximum") {
        EntropicConfig cfg;
        cfg.alpha = {0.001};
        const Mixture lam{{0.5, 0.5}};
        const auto [value, grad] = entropic_objective(inst.game, cfg, lam);
        CHECK(std::abs(value - 0.75) < 0.01);
    }
    SECTION("gradient matches central finite differences") {
        Rng rng(13);
        for (int rep = 0; rep < 100; ++rep) {
            RandomGameSpec spec;
            spec.points = 1 + rng.next_below(5);
            spec.max_candidates = 1 + rng.next_below(5);
            spec.classifiers = 2 + rng.next_below(3);
            spec.seed = rng.next_u64();
            const FiniteGame g = gen_random_game(spec);
            EntropicConfig cfg;
            cfg.alpha = {0.05 + 2.0 * rng.next_double()};
            const EntropicProblem problem(g, cfg);
            const Vec lam = random_simplex_point(g.classifiers(), rng);
            Vec grad;
            problem.value_and_gradient(lam, &grad);
            const double h = 1e-6;
            for (std::size_t k = 0; k < g.classifiers(); ++k) {
                Vec hi = lam, lo = lam;
                hi[k] += h;
                lo[k] -= h;
                const double fd = (problem.value(hi) - problem.value(lo)) / (2.0 * h);
                const double scale = std::max(1.0, std::abs(grad[k]));
                CHECK(std::abs(fd - grad[k]) / scale <= 1e-6);
            }
        }
    }
    SECTION("convex in lambda and sandwiched between mean and max") {
        Rng rng(19);
        for (int rep = 0; rep < 40; ++rep) {
            RandomGameSpec spec;
            spec.points = 1 + rng.next_below(4);
            spec.max_candidates = 2 + rng.next_below(4);
            spec.classifiers = 2 + rng.next_below(2);
            spec.seed = rng.next_u64();
            const FiniteGame g = gen_random_game(spec);
            EntropicConfig cfg;
            cfg.alpha = {0.1 + rng.next_double()};
            const EntropicProblem problem(g, cfg);
            const std::size_t L = g.classifiers();

            const Vec a = random_simplex_point(L, rng);
            const Vec b = random_simplex_point(L, rng);
            Vec mid(L);
            for (std::size_t k = 0; k < L; ++k) mid[k] = 0.5 * (a[k] + b[k]);
            CHECK(problem.value(mid) <= 0.5 * problem.value(a) + 0.5 * problem.value(b) + 1e-10);

            const Mixture lam{a};
            double mean_floor = 0.0;
            double max_alpha_logm = 0.0;
            for (std::size_t i = 0; i < g.points(); ++i) {
                double m = 0.0;
                for (std::size_t j = 0; j < g.candidates(i); ++j) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < L; ++k) v += a[k] * g.loss(i, j, k);
                    m += v;
                }
                mean_floor += g.weight(i) * m / static_cast<double>(g.candidates(i));
                max_alpha_logm =
                    std::max(max_alpha_logm, cfg.alpha[0] * std::log(static_cast<double>(g.candidates(i))));
            }
            const double value = problem.value(a);
            CHECK(value >= mean_floor - 1e-10);
            CHECK(value <= primal_value(g, lam) + max_alpha_logm + 1e-10);
        }
    }
    SECTION("nonpositive alpha is rejected") {
        EntropicConfig cfg;
        cfg.alpha = {0.0};
        CHECK_THROWS_AS(entropic_objective(inst.game, cfg, Mixture{{0.5, 0.5}}), std::invalid_argument);
    }
}

TEST_CASE("fista on the entropic objective") {
    const auto inst = motivating_instance();

    SECTION("L = 1 returns immediately") {
        FiniteGame g({{Vec{0.3}, Vec{0.8}}}, {1.0}, 1.0);
        EntropicConfig cfg;
        cfg.alpha = {0.5};
        cfg.fista_iterations = 3;
        const auto trace = fista_minimize(g, cfg);
        CHECK(trace.lambda.weights == Vec{1.0});
        const EntropicProblem problem(g, cfg);
        CHECK(trace.value_trace.back() == Catch::Approx(problem.value({1.0})));
    }
    SECTION("motivating game at alpha = 0.001 lands within 0.01 of the game value") {
        EntropicConfig cfg;
        cfg.alpha = {0.001};
        cfg.fista_iterations = 500;
        const auto trace = fista_minimize(inst.game, cfg);
        CHECK(primal_value(inst.game, trace.lambda) <= 0.76);
    }
    SECTION("accepted-value trace is monotone") {
        EntropicConfig cfg;
        cfg.alpha = {0.01};
        cfg.fista_iterations = 200;
        const auto trace = fista_minimize(inst.game, cfg);
        for (std::size_t t = 1; t < trace.value_trace.size(); ++t)
            CHECK(trace.value_trace[t] <= trace.value_trace[t - 1] + 1e-12);
    }
    SECTION("regularization sweep approaches the oracle value from above") {
        const Vec alphas{1.0, 0.1, 0.01, 0.001};
        Vec finals;
        for (double a : alphas) {
            EntropicConfig cfg;
            cfg.alpha = {a};
            cfg.fista_iterations = 500;
            const auto trace = fista_minimize(inst.game, cfg);
            finals.push_back(primal_value(inst.game, trace.lambda));
        }
        for (std::size_t t = 1; t < finals.size(); ++t) CHECK(finals[t] <= finals[t - 1] + 1e-6);
        CHECK(std::abs(finals.back() - 0.75) <= 0.01);
    }
    SECTION("acceleration beats plain projected gradient at equal budget") {
        Rng rng(41);
        for (int rep = 0; rep < 10; ++rep) {
            RandomGameSpec spec;
            spec.points = 2 + rng.next_below(5);
            spec.max_candidates = 2 + rng.next_below(4);
            spec.classifiers = 3;
            spec.seed = rng.next_u64();
            const FiniteGame g = gen_random_game(spec);
            EntropicConfig cfg;
            cfg.alpha = {0.02};
            cfg.fista_iterations = 60;
            const auto fista = fista_minimize(g, cfg);
            const auto pg = projected_gradient_minimize(g, cfg);
            CHECK(fista.value_trace.back() <= pg.value_trace.back() + 1e-9);
        }
    }
}

TEST_CASE("alpha limit study") {
    const auto inst = motivating_instance();
    const Mixture lam{{0.5, 0.5}};

    SECTION("tiny alpha leaves negligible smoothing error") {
        const auto rows = alpha_limit_study(inst.game, {1e-6}, lam);
        CHECK(rows[0].aggregate <= 1e-4);
    }
    SECTION("deviation shrinks monotonically as alpha decreases") {
        const auto rows = alpha_limit_study(inst.game, {1.0, 0.3, 0.1, 0.03, 0.01, 1e-3, 1e-6}, lam);
        for (std::size_t t = 1; t < rows.size(); ++t)
            CHECK(rows[t].aggregate <= rows[t - 1].aggregate + 1e-12);
    }
    SECTION("single-candidate points have zero deviation at every alpha") {
        FiniteGame g({{Vec{0.4, 0.2}}, {Vec{0.9, 0.1}}}, {0.5, 0.5}, 1.0);
        for (double a : {1.0, 0.1, 0.001}) {
            const auto rows = alpha_limit_study(g, {a}, Mixture{{0.5, 0.5}});
            CHECK(rows[0].aggregate == 0.0);
        }
    }
}

TEST_CASE("sampled oracle stays within the candidate sets") {
    RandomGameSpec spec;
    spec.points = 6;
    spec.max_candidates = 8;
    spec.classifiers = 3;
    spec.seed = 77;
    const FiniteGame g = gen_random_game(spec);
    const auto oracle = sampled_oracle(3, 12);
    const AttackPlan plan = oracle(g, Mixture::uniform(3));
    plan.validate();
    CHECK(plan.q.size() == g.points());
    // Sub-sampled responses can only undershoot the exact best response.
    const auto exact = game_best_response(g, Mixture::uniform(3));
    double sampled_value = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i)
        for (std::size_t j = 0; j < plan.q[i].size(); ++j)
            if (plan.q[i][j] > 0.0) {
                double v = 0.0;
                for (std::size_t k = 0; k < 3; ++k) v += g.loss(i, j, k) / 3.0;
                sampled_value += g.weight(i) * v;
            }
    CHECK(sampled_value <= exact.second + 1e-12);
}
