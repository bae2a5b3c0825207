#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mixnash/serialize.hpp"

using namespace mixnash;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("loss and metric json") {
    const Loss ce = Loss::cross_entropy(7.0);
    const Loss back = loss_from_json(loss_to_json(ce));
    CHECK(back.kind == LossKind::CrossEntropy);
    CHECK(back.bound_M == 7.0);
    CHECK(loss_from_json(loss_to_json(Loss::zero_one())).kind == LossKind::ZeroOne);
    CHECK_THROWS_AS(loss_from_json(json{{"kind", "hinge"}}), std::invalid_argument);
    CHECK(metric_from_string("linf") == Metric::Linf);
    CHECK_THROWS_AS(metric_from_string("l1"), std::invalid_argument);
}

TEST_CASE("game tensor csv round trip") {
    const auto inst = motivating_instance();
    const auto path = temp_file("mixnash_game.csv");
    write_game_csv(inst.game, path.string());
    const FiniteGame back = read_game_csv(path.string(), inst.game.bound_M());
    REQUIRE(back.points() == inst.game.points());
    REQUIRE(back.classifiers() == inst.game.classifiers());
    for (std::size_t i = 0; i < back.points(); ++i) {
        CHECK(back.weight(i) == inst.game.weight(i));
        REQUIRE(back.candidates(i) == inst.game.candidates(i));
        for (std::size_t j = 0; j < back.candidates(i); ++j)
            for (std::size_t k = 0; k < back.classifiers(); ++k)
                CHECK(back.loss(i, j, k) == inst.game.loss(i, j, k));
    }
    CHECK(primal_value(back, Mixture{{0.5, 0.5}}) == 0.75);
    std::filesystem::remove(path);
}

TEST_CASE("game csv rejects malformed input") {
    const auto path = temp_file("mixnash_bad_game.csv");
    {
        std::ofstream out(path);
        out << "i,j,k,loss,weight\n0,0,0,0.5,0.5\n0,0,1,0.5,0.4\n";  // inconsistent weight
    }
    CHECK_THROWS_AS(read_game_csv(path.string()), ParseError);
    {
        std::ofstream out(path);
        out << "wrong,header\n";
    }
    CHECK_THROWS_AS(read_game_csv(path.string()), ParseError);
    {
        std::ofstream out(path);
        out << "i,j,k,loss,weight\n0,0,0,0.5,1.0\n0,1,1,0.5,1.0\n";  // missing (0,1,0)
    }
    CHECK_THROWS_AS(read_game_csv(path.string()), ParseError);
    std::filesystem::remove(path);
}

TEST_CASE("certificate json round trip") {
    const auto cert = solve_exact_two(motivating_instance().game);
    const json j = certificate_to_json(cert);
    const auto back = certificate_from_json(j);
    CHECK(back.lambda.weights == cert.lambda.weights);
    CHECK(back.primal_value == cert.primal_value);
    CHECK(back.dual_value == cert.dual_value);
    CHECK(back.gap == cert.gap);
    CHECK(back.plan.q == cert.plan.q);
    for (const char* key : {"lambda", "plan", "primal", "dual", "gap", "iterations"}) CHECK(j.contains(key));
}

TEST_CASE("candidate csv replay") {
    const auto inst = motivating_instance();
    const auto path = temp_file("mixnash_cands.csv");
    write_candidates_csv(inst.candidates, path.string());
    const CandidateSet back = read_candidates_csv(path.string(), inst.data);
    CHECK(back.candidates == inst.candidates.candidates);

    // Replay against a tighter budget must fail validation.
    LabeledDataset tight = inst.data;
    tight.epsilon = 0.5;
    CHECK_THROWS_AS(read_candidates_csv(path.string(), tight), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST_CASE("trace csv") {
    const auto path = temp_file("mixnash_trace.csv");
    write_trace_csv({0.9, 0.8, 0.75}, {0.2, 0.1, 0.05}, path.string());
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,value,gap_estimate");
    std::string row;
    std::getline(in, row);
    CHECK(row.rfind("0,", 0) == 0);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(write_trace_csv({1.0}, {0.1, 0.2}, path.string()), std::invalid_argument);
}

TEST_CASE("checkpoint json round trip") {
    MixtureModel model;
    model.models = {LogisticBinary{{0.5, -1.0}, 0.25}, LogisticBinary{{2.0, 0.0}, -0.5}};
    model.lambda = Mixture{{0.3, 0.7}};
    const auto back = checkpoint_from_json(checkpoint_to_json(model));
    REQUIRE(back.models.size() == 2);
    CHECK(back.models[0].w == model.models[0].w);
    CHECK(back.models[1].b == model.models[1].b);
    CHECK(back.lambda.weights == model.lambda.weights);

    json bad = checkpoint_to_json(model);
    bad["lambda"] = {0.9, 0.9};
    CHECK_THROWS_AS(checkpoint_from_json(bad), std::invalid_argument);
}
