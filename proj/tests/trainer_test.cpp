#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mixnash/datagen.hpp"
#include "mixnash/game.hpp"
#include "mixnash/trainer.hpp"

using namespace mixnash;

namespace {

TrainConfig small_config(std::size_t L, long iterations, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.model_count = L;
    cfg.iterations = iterations;
    cfg.t_theta = 5;
    cfg.t_lambda = 5;
    cfg.lr_model = 0.2;
    cfg.epsilon = 0.5;
    cfg.pgd.steps = 5;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("training schedule conformance") {
    const auto data = gen_synthetic({60, 3});
    for (const auto& [L, T] : std::vector<std::pair<std::size_t, long>>{{1, 30}, {2, 45}, {3, 64}}) {
        const auto cfg = small_config(L, T, 7);
        const auto [model, metrics] = train(data, cfg);
        const long period = cfg.t_theta * static_cast<long>(L) + 1;
        CHECK(metrics.lambda_phases == T / period);
        CHECK(metrics.model_updates == T - T / period);
        CHECK(model.models.size() == L);
        CHECK(model.lambda.in_simplex(1e-9));
    }
}

TEST_CASE("training is deterministic given the seed") {
    const auto data = gen_synthetic({50, 9});
    const auto cfg = small_config(2, 33, 42);
    const auto [m1, t1] = train(data, cfg);
    const auto [m2, t2] = train(data, cfg);
    REQUIRE(t1.rows.size() == t2.rows.size());
    for (std::size_t r = 0; r < t1.rows.size(); ++r) {
        CHECK(t1.rows[r].standard_acc == t2.rows[r].standard_acc);
        CHECK(t1.rows[r].robust_acc == t2.rows[r].robust_acc);
        CHECK(t1.rows[r].lambda == t2.rows[r].lambda);
    }
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(m1.models[k].w == m2.models[k].w);
        CHECK(m1.models[k].b == m2.models[k].b);
    }
}

TEST_CASE("epsilon = 0 reduces to standard training") {
    const auto data = gen_synthetic({50, 11});
    auto cfg = small_config(2, 22, 5);
    cfg.epsilon = 0.0;
    const auto [m1, t1] = train(data, cfg);

    // At zero budget the attack must return the clean batch, so its strength
    // parameters cannot matter.
    auto cfg2 = cfg;
    cfg2.pgd.steps = 17;
    cfg2.pgd.restarts = 3;
    const auto [m2, t2] = train(data, cfg2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(m1.models[k].w == m2.models[k].w);
        CHECK(m1.models[k].b == m2.models[k].b);
    }
}

TEST_CASE("single-model training keeps the mixture degenerate") {
    const auto data = gen_synthetic({40, 13});
    const auto cfg = small_config(1, 18, 3);
    const auto [model, metrics] = train(data, cfg);
    for (const auto& row : metrics.rows) {
        REQUIRE(row.lambda.size() == 1);
        CHECK(row.lambda[0] == Catch::Approx(1.0).margin(1e-12));
    }
    CHECK(metrics.model_updates == 18 - 18 / 6);
}

TEST_CASE("evaluate_robust") {
    SECTION("epsilon = 0 equalizes the accuracies") {
        const auto data = gen_synthetic({40, 17});
        MixtureModel model;
        model.models = {LogisticBinary{{1.0, 0.0}, 0.0}, LogisticBinary{{0.0, 1.0}, 0.0}};
        model.lambda = Mixture::uniform(2);
        EvalConfig eval;
        eval.epsilon = 0.0;
        const auto [sa, ra] = evaluate_robust(model, data, eval);
        CHECK(sa == ra);
    }
    SECTION("separated data with a margin above 2 epsilon stays perfectly robust") {
        // Two clusters at x = -4 and x = +4, classifier through the midpoint.
        LabeledDataset data;
        data.metric = Metric::L2;
        for (int i = 0; i < 10; ++i) {
            data.points.push_back({{-4.0, 0.1 * i}, -1, 1.0});
            data.points.push_back({{4.0, -0.1 * i}, 1, 1.0});
        }
        data.normalize_weights();
        MixtureModel model;
        model.models = {LogisticBinary{{1.0, 0.0}, 0.0}};
        model.lambda = Mixture::uniform(1);
        EvalConfig eval;
        eval.epsilon = 1.5;
        eval.pgd.restarts = 3;
        const auto [sa, ra] = evaluate_robust(model, data, eval);
        CHECK(sa == 1.0);
        CHECK(ra == 1.0);

        // Dense candidate enumeration agrees.
        data.epsilon = 1.5;
        const auto cands = make_candidates_uniform_ball(data, 500, 3);
        const auto [sa2, ra2] = evaluate_robust(model.classifiers(), model.lambda, data, cands);
        CHECK(ra2 == 1.0);
        CHECK(sa2 == 1.0);
    }
    SECTION("motivating tabular mixture scores robust accuracy 1/4") {
        // Tabular transcription of the two linear rules on the enumerated
        // domain x in {-2,...,2} (row index = x + 2).
        const auto inst = motivating_instance();
        std::vector<Vec> t1, t2;
        for (int v = -2; v <= 2; ++v) {
            t1.push_back({-static_cast<double>(v) - 0.5});
            t2.push_back({static_cast<double>(v) - 0.5});
        }
        const std::vector<Classifier> tabs{make_tabular(t1, 0), make_tabular(t2, 1)};
        LabeledDataset shifted = inst.data;  // re-index inputs onto rows
        for (auto& p : shifted.points) p.x[0] += 2.0;
        std::vector<std::vector<Vec>> lists;
        for (const auto& p : shifted.points)
            lists.push_back({{p.x[0] - 1.0}, {p.x[0]}, {p.x[0] + 1.0}});
        const auto cands = make_candidates_explicit(shifted, lists);
        const auto [sa, ra] = evaluate_robust(tabs, Mixture{{0.5, 0.5}}, shifted, cands);
        CHECK(ra == Catch::Approx(0.25));
        CHECK(sa == Catch::Approx(0.75));
    }
    SECTION("robust accuracy never exceeds standard accuracy") {
        const auto data = gen_synthetic({60, 19});
        const auto cfg = small_config(2, 11, 23);
        const auto [model, metrics] = train(data, cfg);
        for (double eps : {0.0, 0.3, 0.8}) {
            EvalConfig eval;
            eval.epsilon = eps;
            const auto [sa, ra] = evaluate_robust(model, data, eval);
            CHECK(ra <= sa + 1e-12);
        }
    }
    SECTION("robust accuracy is nonincreasing in epsilon") {
        const auto data = gen_synthetic({60, 29});
        const auto cfg = small_config(2, 11, 31);
        const auto [model, metrics] = train(data, cfg);
        double prev = 2.0;
        for (double eps : {0.0, 0.25, 0.5, 1.0, 2.0}) {
            EvalConfig eval;
            eval.epsilon = eps;
            eval.pgd.restarts = 5;
            const auto [sa, ra] = evaluate_robust(model, data, eval);
            CHECK(ra <= prev + 1e-12);
            prev = ra;
        }
    }
}

TEST_CASE("minibatch training is deterministic and follows the schedule") {
    const auto data = gen_synthetic({60, 21});
    auto cfg = small_config(2, 33, 14);
    cfg.batch_size = 16;
    const auto [m1, t1] = train(data, cfg);
    const auto [m2, t2] = train(data, cfg);
    CHECK(m1.models[0].w == m2.models[0].w);
    CHECK(m1.models[1].w == m2.models[1].w);
    CHECK(t1.lambda_phases == 33 / (cfg.t_theta * 2 + 1));
}

TEST_CASE("oracle lambda updates are selectable") {
    const auto data = gen_synthetic({50, 23});
    auto cfg = small_config(3, 48, 15);
    cfg.lambda_solver = LambdaSolver::Oracle;
    cfg.t_theta = 5;  // period 16 -> 3 phases
    const auto [model, metrics] = train(data, cfg);
    CHECK(metrics.lambda_phases == 3);
    CHECK(model.lambda.in_simplex(1e-9));
}

TEST_CASE("mixture training helps on the synthetic task") {
    const auto data = gen_synthetic({300, 101});

    TrainConfig base;
    base.iterations = 453;  // 3 lambda phases at L = 3
    base.t_theta = 50;
    base.t_lambda = 25;
    base.lr_model = 0.25;
    base.epsilon = 1.2;
    base.pgd.steps = 10;
    base.seed = 424242;

    auto cfg1 = base;
    cfg1.model_count = 1;
    cfg1.iterations = 453;
    auto cfg3 = base;
    cfg3.model_count = 3;

    const auto [m1, t1] = train(data, cfg1);
    const auto [m3, t3] = train(data, cfg3);

    EvalConfig eval;
    eval.epsilon = base.epsilon;
    eval.pgd.steps = 20;
    const auto [sa1, ra1] = evaluate_robust(m1, data, eval);
    const auto [sa3, ra3] = evaluate_robust(m3, data, eval);
    INFO("single model robust=" << ra1 << " mixture robust=" << ra3);
    CHECK(ra3 >= ra1);
}

TEST_CASE("training rejects invalid inputs") {
    const auto data = gen_synthetic({20, 1});
    TrainConfig cfg;
    cfg.model_count = 0;
    CHECK_THROWS_AS(train(data, cfg), std::invalid_argument);

    LabeledDataset bad = data;
    bad.points[0].y = 3;
    CHECK_THROWS_AS(train(bad, small_config(1, 5, 1)), std::invalid_argument);
}
