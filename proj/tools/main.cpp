#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "mixnash/cli.hpp"

using mixnash::json;

int main(int argc, char** argv) {
    CLI::App app{"Robust mixtures for adversarial classification games"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        json overrides = json::object();
    };

    auto add_common = [](CLI::App* sub, Common& c) {
        sub->add_option("--config", c.config, "JSON config (a plain config or a previous run.json)");
        sub->add_option_function<std::string>(
            "--out", [&c](const std::string& v) { c.overrides["out"] = v; }, "Output directory");
        sub->add_option_function<long>(
            "--seed", [&c](long v) { c.overrides["seed"] = v; }, "Random seed");
    };

    Common demo, sweep, conv, train_c, bounds_c, gen_c, solve;

    auto* demo_cmd = app.add_subcommand("demo-motivating", "Solve the canonical two-classifier instance");
    add_common(demo_cmd, demo);
    demo_cmd->add_option_function<std::string>(
        "--solver", [&](const std::string& v) { demo.overrides["solver"] = v; }, "exact | mw");
    demo_cmd->add_option_function<long>(
        "--iters", [&](long v) { demo.overrides["iters"] = v; }, "Solver iterations (mw)");
    demo_cmd->add_option_function<double>(
        "--epsilon", [&](double v) { demo.overrides["epsilon"] = v; }, "Attack budget");

    auto* sweep_cmd = app.add_subcommand("sweep-epsilon", "Deterministic vs randomized risk over a budget grid");
    add_common(sweep_cmd, sweep);
    sweep_cmd->add_option_function<long>(
        "--n", [&](long v) { sweep.overrides["n"] = v; }, "Training points");
    sweep_cmd->add_option_function<long>(
        "--classifiers", [&](long v) { sweep.overrides["classifiers"] = v; }, "Random linear classifiers");
    sweep_cmd->add_option_function<long>(
        "--candidates", [&](long v) { sweep.overrides["candidates"] = v; }, "Sampled attacks per point");
    sweep_cmd->add_option_function<long>(
        "--mw-iters", [&](long v) { sweep.overrides["mw_iters"] = v; }, "Equilibrium solver iterations");

    auto* conv_cmd = app.add_subcommand("convergence", "Oracle and smoothed-solver convergence traces");
    add_common(conv_cmd, conv);
    conv_cmd->add_option_function<std::string>(
        "--input", [&](const std::string& v) { conv.overrides["input"] = v; },
        "Game tensor CSV (default: canonical instance)");
    conv_cmd->add_option_function<long>(
        "--fista-iters", [&](long v) { conv.overrides["fista_iters"] = v; }, "Iterations per alpha");
    conv_cmd->add_option_function<long>(
        "--subgradient-iters", [&](long v) { conv.overrides["subgradient_iters"] = v; }, "Oracle iterations");

    auto* train_cmd = app.add_subcommand("train", "Alternating adversarial training of a mixture");
    add_common(train_cmd, train_c);
    train_cmd->add_option_function<long>(
        "--models", [&](long v) { train_c.overrides["models"] = v; }, "Mixture size");
    train_cmd->add_option_function<long>(
        "--iterations", [&](long v) { train_c.overrides["iterations"] = v; }, "Training iterations");
    train_cmd->add_option_function<double>(
        "--epsilon", [&](double v) { train_c.overrides["epsilon"] = v; }, "Attack budget");
    train_cmd->add_option_function<long>(
        "--n", [&](long v) { train_c.overrides["n"] = v; }, "Training points");

    auto* bounds_cmd = app.add_subcommand("bounds", "Validate the sampling-error bound empirically");
    add_common(bounds_cmd, bounds_c);
    bounds_cmd->add_option_function<long>(
        "--trials", [&](long v) { bounds_c.overrides["trials"] = v; }, "Seeded trials");
    bounds_cmd->add_option_function<long>(
        "--sample-m", [&](long v) { bounds_c.overrides["sample_m"] = v; }, "Samples per point");
    bounds_cmd->add_option_function<double>(
        "--delta", [&](double v) { bounds_c.overrides["delta"] = v; }, "Confidence level");

    auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic dataset CSV");
    add_common(gen_cmd, gen_c);
    gen_cmd->add_option_function<long>(
        "--n", [&](long v) { gen_c.overrides["n"] = v; }, "Points to sample");

    auto* solve_cmd = app.add_subcommand("game-solve", "Solve a game tensor from CSV");
    add_common(solve_cmd, solve);
    solve_cmd->add_option_function<std::string>(
        "--input", [&](const std::string& v) { solve.overrides["input"] = v; }, "Game tensor CSV");
    solve_cmd->add_option_function<std::string>(
        "--solver", [&](const std::string& v) { solve.overrides["solver"] = v; }, "mw | exact2");
    solve_cmd->add_option_function<long>(
        "--iters", [&](long v) { solve.overrides["iters"] = v; }, "Solver iterations (mw)");

    CLI11_PARSE(app, argc, argv);

    const std::pair<const char*, Common*> table[] = {
        {"demo-motivating", &demo}, {"sweep-epsilon", &sweep}, {"convergence", &conv}, {"train", &train_c},
        {"bounds", &bounds_c},      {"gen", &gen_c},           {"game-solve", &solve}};

    try {
        for (const auto& [name, common] : table) {
            if (app.get_subcommand(name)->parsed()) {
                const json cfg = mixnash::cli::merge_config(common->config, common->overrides);
                return mixnash::cli::run_command(name, cfg);
            }
        }
        std::fprintf(stderr, "error: no command selected\n");
        return mixnash::cli::kInputError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return mixnash::cli::kInputError;
    } catch (const mixnash::ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return mixnash::cli::kInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return mixnash::cli::kInputError;
    }
}
