#pragma once

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixnash/serialize.hpp"
#include "mixnash/svg.hpp"
#include "mixnash/trainer.hpp"

namespace mixnash::cli {

inline constexpr int kOk = 0;
inline constexpr int kNumericFailure = 2;
inline constexpr int kInputError = 3;
inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config validation
// ---------------------------------------------------------------------------

struct Field {
    const char* name;
    json::value_t type;  // number_float accepts any number; number_integer requires an integer
};

inline void validate_config(const json& cfg, std::initializer_list<Field> fields) {
    if (!cfg.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (const auto& [key, value] : cfg.items()) {
        const Field* match = nullptr;
        for (const auto& f : fields)
            if (key == f.name) match = &f;
        if (!match) throw std::invalid_argument("config: unknown key '" + key + "'");
        switch (match->type) {
            case json::value_t::number_float:
                if (!value.is_number()) throw std::invalid_argument("config: '" + key + "' must be a number");
                break;
            case json::value_t::number_integer:
                if (!value.is_number_integer() && !value.is_number_unsigned())
                    throw std::invalid_argument("config: '" + key + "' must be an integer");
                break;
            case json::value_t::string:
                if (!value.is_string()) throw std::invalid_argument("config: '" + key + "' must be a string");
                break;
            case json::value_t::array:
                if (!value.is_array()) throw std::invalid_argument("config: '" + key + "' must be an array");
                break;
            case json::value_t::boolean:
                if (!value.is_boolean()) throw std::invalid_argument("config: '" + key + "' must be a boolean");
                break;
            default:
                throw std::logic_error("validate_config: unsupported field type");
        }
    }
}

/// Resolved config + seed + version next to every command's outputs, so a run
/// can be reproduced from its artifacts alone.
inline void write_run_json(const std::string& command, const json& cfg, const fs::path& out) {
    write_json_file(json{{"command", command},
                         {"config", cfg},
                         {"version", json{{"mixnash", kVersion}, {"format", 1}}}},
                    (out / "run.json").string());
}

inline fs::path prepare_out_dir(const json& cfg) {
    const fs::path out(cfg.value("out", "out"));
    fs::create_directories(out);
    return out;
}

// ---------------------------------------------------------------------------
// demo-motivating
// ---------------------------------------------------------------------------

/// The canonical instance at an adjustable budget: shift candidates
/// {x - eps, x, x + eps} (just the clean point at eps = 0).
inline MotivatingInstance motivating_with_epsilon(double eps) {
    MotivatingInstance inst = motivating_instance();
    inst.data.epsilon = eps;
    std::vector<std::vector<Vec>> lists;
    for (const auto& p : inst.data.points) {
        if (eps == 0.0)
            lists.push_back({{p.x[0]}});
        else
            lists.push_back({{p.x[0] - eps}, {p.x[0]}, {p.x[0] + eps}});
    }
    inst.candidates = make_candidates_explicit(inst.data, std::move(lists));
    inst.game = build_game(inst.loss, inst.classifiers, inst.data, inst.candidates);
    return inst;
}

inline int cmd_demo_motivating(const json& cfg) {
    validate_config(cfg, {{"solver", json::value_t::string},
                          {"iters", json::value_t::number_integer},
                          {"epsilon", json::value_t::number_float},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    const std::string solver = cfg.value("solver", "exact");
    const long iters = cfg.value("iters", 5000L);
    const double eps = cfg.value("epsilon", 1.0);
    if (solver != "exact" && solver != "mw")
        throw std::invalid_argument("demo-motivating: solver must be 'exact' or 'mw'");
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("demo-motivating", cfg, out);

    const auto inst = motivating_with_epsilon(eps);
    const double std1 = standard_risk(inst.loss, inst.classifiers, Mixture::vertex(2, 0), inst.data);
    const double std2 = standard_risk(inst.loss, inst.classifiers, Mixture::vertex(2, 1), inst.data);
    const double det1 = primal_value(inst.game, Mixture::vertex(2, 0));
    const double det2 = primal_value(inst.game, Mixture::vertex(2, 1));

    EquilibriumCertificate cert;
    double gap_check = 1e-9;
    if (solver == "exact") {
        cert = solve_exact_two(inst.game);
    } else {
        MwConfig mw;
        mw.iterations = iters;
        mw.gap_tolerance = 1e-4;
        mw.seed = cfg.value("seed", 0UL);
        cert = solve_equilibrium_mw(inst.game, mw);
        gap_check = 1e-3;
    }

    std::printf("standard risks:              f1 = %.6f, f2 = %.6f\n", std1, std2);
    std::printf("deterministic adversarial:   f1 = %.6f, f2 = %.6f\n", det1, det2);
    std::printf("equilibrium value:           %.9f (lambda = %.6f, %.6f)\n", cert.primal_value,
                cert.lambda.weights[0], cert.lambda.weights[1]);
    std::printf("duality gap:                 %.3g after %ld iterations\n", cert.gap, cert.iterations);

    json results{{"epsilon", eps},
                 {"standard_risks", {std1, std2}},
                 {"deterministic_adversarial_risks", {det1, det2}},
                 {"certificate", certificate_to_json(cert)}};
    write_json_file(results, (out / "results.json").string());

    bool ok = std::abs(std1 - 0.25) <= 1e-12 && std::abs(std2 - 0.25) <= 1e-12;
    ok = ok && cert.gap >= -1e-9 && cert.gap <= gap_check;
    if (eps == 1.0) {
        ok = ok && std::abs(det1 - 1.0) <= 1e-12 && std::abs(det2 - 1.0) <= 1e-12;
        const double tol = solver == "exact" ? 1e-9 : 1e-2;
        ok = ok && std::abs(cert.primal_value - 0.75) <= tol;
        if (solver == "exact") ok = ok && std::abs(cert.lambda.weights[0] - 0.5) <= 1e-6;
    } else if (eps == 0.0) {
        ok = ok && std::abs(cert.primal_value - 0.25) <= 1e-9;
    }
    return ok ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------------------
// sweep-epsilon
// ---------------------------------------------------------------------------

inline int cmd_sweep_epsilon(const json& cfg) {
    validate_config(cfg, {{"n", json::value_t::number_integer},
                          {"classifiers", json::value_t::number_integer},
                          {"max_risk", json::value_t::number_float},
                          {"candidates", json::value_t::number_integer},
                          {"epsilons", json::value_t::array},
                          {"mw_iters", json::value_t::number_integer},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    const std::uint64_t seed = cfg.value("seed", 0UL);
    const std::size_t n = cfg.value("n", std::size_t{1000});
    const std::size_t L = cfg.value("classifiers", std::size_t{10});
    const double max_risk = cfg.value("max_risk", 0.4);
    const std::size_t m = cfg.value("candidates", std::size_t{300});
    const long mw_iters = cfg.value("mw_iters", 4000L);
    Vec epsilons = cfg.contains("epsilons") ? cfg.at("epsilons").get<Vec>() : Vec{};
    if (epsilons.empty())
        for (int s = 1; s <= 10; ++s) epsilons.push_back(0.5 * s);
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("sweep-epsilon", cfg, out);

    LabeledDataset data = gen_synthetic({n, seed});
    const auto clfs = gen_random_linear_classifiers(data, L, max_risk, seed + 1);
    const Loss z = Loss::zero_one();

    Vec det_curve, rand_curve;
    bool ok = true;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
        data.epsilon = epsilons[e];
        const auto cands = make_candidates_uniform_ball(data, m, Rng::stream(seed, 100 + e).next_u64());
        const FiniteGame game = build_game(z, clfs, data, cands);
        double det = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < L; ++k) det = std::min(det, primal_value(game, Mixture::vertex(L, k)));
        MwConfig mw;
        mw.iterations = mw_iters;
        mw.gap_tolerance = 1e-4;
        const auto cert = solve_equilibrium_mw(game, mw);
        det_curve.push_back(det);
        rand_curve.push_back(cert.primal_value);
        ok = ok && cert.primal_value <= det + 1e-12;
        std::printf("epsilon %.3f: deterministic %.4f randomized %.4f gap %.4f\n", epsilons[e], det,
                    cert.primal_value, det - cert.primal_value);
    }

    {
        std::ofstream csv(out / "results.csv");
        csv << "epsilon,deterministic_risk,randomized_risk,gap\n";
        for (std::size_t e = 0; e < epsilons.size(); ++e)
            csv << detail::format_double(epsilons[e]) << "," << detail::format_double(det_curve[e]) << ","
                << detail::format_double(rand_curve[e]) << ","
                << detail::format_double(det_curve[e] - rand_curve[e]) << "\n";
    }
    double max_gap = 0.0;
    for (std::size_t e = 0; e < epsilons.size(); ++e)
        max_gap = std::max(max_gap, det_curve[e] - rand_curve[e]);
    write_json_file(json{{"epsilons", epsilons},
                         {"deterministic_risk", det_curve},
                         {"randomized_risk", rand_curve},
                         {"max_gap", max_gap}},
                    (out / "results.json").string());

    svg::LinePlot plot("Adversarial risk vs budget", "epsilon", "risk");
    plot.add_series("best deterministic", epsilons, det_curve);
    plot.add_series("randomized equilibrium", epsilons, rand_curve);
    plot.write((out / "plot.svg").string());
    return ok ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------------------
// convergence
// ---------------------------------------------------------------------------

inline int cmd_convergence(const json& cfg) {
    validate_config(cfg, {{"alphas", json::value_t::array},
                          {"fista_iters", json::value_t::number_integer},
                          {"subgradient_iters", json::value_t::number_integer},
                          {"input", json::value_t::string},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    Vec alphas = cfg.contains("alphas") ? cfg.at("alphas").get<Vec>() : Vec{1.0, 0.1, 0.01, 0.001};
    const long fista_iters = cfg.value("fista_iters", 500L);
    const long sub_iters = cfg.value("subgradient_iters", 2000L);
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("convergence", cfg, out);

    const FiniteGame game = cfg.contains("input") ? read_game_csv(cfg.at("input").get<std::string>())
                                                  : motivating_instance().game;

    SubgradientConfig sub;
    sub.iterations = sub_iters;
    const auto oracle_run = oracle_subgradient(game, sub);
    Vec oracle_min_so_far;
    double running = std::numeric_limits<double>::infinity();
    for (double v : oracle_run.value_trace) {
        running = std::min(running, v);
        oracle_min_so_far.push_back(running);
    }

    std::ofstream csv(out / "results.csv");
    csv << "series,iter,value\n";
    for (std::size_t t = 0; t < oracle_min_so_far.size(); ++t)
        csv << "oracle," << t << "," << detail::format_double(oracle_min_so_far[t]) << "\n";

    svg::LinePlot plot("Solver convergence", "iteration", "adversarial risk");
    {
        Vec xs(oracle_min_so_far.size());
        for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = static_cast<double>(t);
        plot.add_series("oracle (alpha=0)", xs, oracle_min_so_far);
    }

    Vec finals;
    for (double a : alphas) {
        EntropicConfig ecfg;
        ecfg.alpha = {a};
        ecfg.fista_iterations = fista_iters;
        const auto trace = fista_minimize(game, ecfg);
        Vec primal_trace;
        for (const auto& lam : trace.iterates) primal_trace.push_back(primal_value(game, lam));
        const std::string name = "fista alpha=" + std::to_string(a);
        for (std::size_t t = 0; t < primal_trace.size(); ++t)
            csv << name << "," << t << "," << detail::format_double(primal_trace[t]) << "\n";
        Vec xs(primal_trace.size());
        for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = static_cast<double>(t);
        plot.add_series(name, xs, primal_trace);
        finals.push_back(primal_trace.back());
        std::printf("alpha %.4g: final adversarial risk %.6f\n", a, primal_trace.back());
    }
    std::printf("oracle best value: %.6f\n", oracle_run.best_value);
    plot.write((out / "plot.svg").string());
    write_json_file(json{{"alphas", alphas}, {"finals", finals}, {"oracle_best", oracle_run.best_value}},
                    (out / "results.json").string());

    // Finals should march toward the oracle value as alpha shrinks.
    bool ok = true;
    for (std::size_t t = 1; t < finals.size(); ++t)
        if (alphas[t] < alphas[t - 1]) ok = ok && finals[t] <= finals[t - 1] + 1e-6;
    ok = ok && std::abs(finals.back() - oracle_run.best_value) <= 0.05;
    return ok ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const json& cfg) {
    validate_config(cfg, {{"n", json::value_t::number_integer},
                          {"models", json::value_t::number_integer},
                          {"iterations", json::value_t::number_integer},
                          {"t_theta", json::value_t::number_integer},
                          {"t_lambda", json::value_t::number_integer},
                          {"lr_model", json::value_t::number_float},
                          {"lr_lambda", json::value_t::number_float},
                          {"epsilon", json::value_t::number_float},
                          {"metric", json::value_t::string},
                          {"alpha", json::value_t::number_float},
                          {"pgd_steps", json::value_t::number_integer},
                          {"batch_size", json::value_t::number_integer},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    TrainConfig tc;
    tc.model_count = cfg.value("models", std::size_t{3});
    tc.iterations = cfg.value("iterations", 604L);
    tc.t_theta = cfg.value("t_theta", 50L);
    tc.t_lambda = cfg.value("t_lambda", 25L);
    tc.lr_model = cfg.value("lr_model", 0.25);
    tc.lr_lambda = cfg.value("lr_lambda", 0.001);
    tc.epsilon = cfg.value("epsilon", 1.0);
    tc.metric = metric_from_string(cfg.value("metric", "l2"));
    tc.alpha = cfg.value("alpha", 0.001);
    tc.pgd.steps = cfg.value("pgd_steps", 10);
    tc.batch_size = cfg.value("batch_size", std::size_t{0});
    tc.seed = cfg.value("seed", 0UL);
    tc.validate();
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("train", cfg, out);

    const auto data = gen_synthetic({cfg.value("n", std::size_t{1000}), tc.seed});
    const auto [model, metrics] = train(data, tc);
    write_metrics_csv(metrics, (out / "metrics.csv").string());
    write_json_file(checkpoint_to_json(model), (out / "checkpoint.json").string());
    const auto& last = metrics.rows.back();
    std::printf("final standard accuracy %.4f, robust accuracy %.4f (%ld phases)\n", last.standard_acc,
                last.robust_acc, metrics.lambda_phases);
    return kOk;
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

inline int cmd_bounds(const json& cfg) {
    validate_config(cfg, {{"trials", json::value_t::number_integer},
                          {"delta", json::value_t::number_float},
                          {"sample_m", json::value_t::number_integer},
                          {"points", json::value_t::number_integer},
                          {"classifiers", json::value_t::number_integer},
                          {"full_candidates", json::value_t::number_integer},
                          {"alpha", json::value_t::number_float},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    const long trials = cfg.value("trials", 200L);
    const double delta = cfg.value("delta", 0.05);
    const std::size_t points = cfg.value("points", std::size_t{5});
    const std::size_t classifiers = cfg.value("classifiers", std::size_t{2});
    const std::size_t full_m = cfg.value("full_candidates", std::size_t{60});
    if (classifiers > 3) throw std::invalid_argument("bounds: exact minimization supports at most 3 classifiers");
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("bounds", cfg, out);

    BoundValidationConfig vc;
    vc.sample_m = cfg.value("sample_m", std::size_t{20});
    vc.alpha = cfg.value("alpha", 0.5);
    vc.make_game = [points, classifiers, full_m](std::uint64_t seed) {
        Rng rng = Rng::stream(seed, 99);
        std::vector<std::vector<Vec>> tensor(points);
        Vec weights(points, 1.0 / static_cast<double>(points));
        for (auto& point : tensor) {
            point.assign(full_m, Vec(classifiers));
            for (auto& row : point)
                for (auto& v : row) v = rng.next_double();
        }
        double s = 0.0;
        for (double w : weights) s += w;
        weights[0] += 1.0 - s;
        return FiniteGame(std::move(tensor), std::move(weights), 1.0);
    };

    const auto report = validate_statistical_bound(vc, trials, delta, cfg.value("seed", 0UL));
    write_json_file(bound_report_to_json(report), (out / "results.json").string());
    write_bound_trials_csv(report, (out / "trials.csv").string());
    std::printf("trials %ld, violation rate %.4f (delta %.3f), median deviation %.3g, mean bound %.3g\n",
                report.trials, report.violation_rate, delta, report.empirical_deviation, report.bound_value);
    return report.violation_rate <= delta + 0.03 ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------------------
// gen and game-solve
// ---------------------------------------------------------------------------

inline int cmd_gen(const json& cfg) {
    validate_config(cfg, {{"n", json::value_t::number_integer},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("gen", cfg, out);
    const auto data = gen_synthetic({cfg.value("n", std::size_t{1000}), cfg.value("seed", 0UL)});
    write_csv(data, (out / "dataset.csv").string());
    std::printf("wrote %zu points to %s\n", data.size(), (out / "dataset.csv").c_str());
    return kOk;
}

inline int cmd_game_solve(const json& cfg) {
    validate_config(cfg, {{"input", json::value_t::string},
                          {"solver", json::value_t::string},
                          {"iters", json::value_t::number_integer},
                          {"tolerance", json::value_t::number_float},
                          {"seed", json::value_t::number_integer},
                          {"out", json::value_t::string}});
    if (!cfg.contains("input")) throw std::invalid_argument("game-solve: missing 'input'");
    const std::string solver = cfg.value("solver", "mw");
    if (solver != "mw" && solver != "exact2")
        throw std::invalid_argument("game-solve: solver must be 'mw' or 'exact2'");
    const FiniteGame game = read_game_csv(cfg.at("input").get<std::string>());
    const fs::path out = prepare_out_dir(cfg);
    write_run_json("game-solve", cfg, out);

    EquilibriumCertificate cert;
    if (solver == "exact2") {
        cert = solve_exact_two(game);
    } else {
        MwConfig mw;
        mw.iterations = cfg.value("iters", 20000L);
        mw.gap_tolerance = cfg.value("tolerance", 1e-6);
        mw.seed = cfg.value("seed", 0UL);
        cert = solve_equilibrium_mw(game, mw);
    }
    write_json_file(certificate_to_json(cert), (out / "certificate.json").string());
    std::printf("value %.9f, gap %.3g, %ld iterations\n", cert.primal_value, cert.gap, cert.iterations);
    return cert.gap >= -1e-9 ? kOk : kNumericFailure;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline int run_command(const std::string& command, const json& cfg) {
    if (command == "demo-motivating") return cmd_demo_motivating(cfg);
    if (command == "sweep-epsilon") return cmd_sweep_epsilon(cfg);
    if (command == "convergence") return cmd_convergence(cfg);
    if (command == "train") return cmd_train(cfg);
    if (command == "bounds") return cmd_bounds(cfg);
    if (command == "gen") return cmd_gen(cfg);
    if (command == "game-solve") return cmd_game_solve(cfg);
    throw std::invalid_argument("unknown command '" + command + "'");
}

/// Loads --config JSON (either a bare config object or a previous run.json,
/// whose embedded config is reused) and overlays explicit flag values.
inline json merge_config(const std::string& config_path, const json& overrides) {
    json cfg = json::object();
    if (!config_path.empty()) {
        json file = read_json_file(config_path);
        if (file.contains("command") && file.contains("config")) file = file.at("config");
        if (!file.is_object()) throw std::invalid_argument("config file must hold a JSON object");
        cfg = file;
    }
    for (const auto& [key, value] : overrides.items()) cfg[key] = value;
    return cfg;
}

}  // namespace mixnash::cli
