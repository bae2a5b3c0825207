#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mixnash/datagen.hpp"

using namespace mixnash;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("synthetic generator") {
    SECTION("deterministic for a fixed seed") {
        const auto a = gen_synthetic({100, 42});
        const auto b = gen_synthetic({100, 42});
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a.points[i].x == b.points[i].x);
            CHECK(a.points[i].y == b.points[i].y);
        }
        const auto c = gen_synthetic({100, 43});
        bool differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a.points[i].x != c.points[i].x;
        CHECK(differs);
    }
    SECTION("single point") {
        const auto d = gen_synthetic({1, 7});
        CHECK(d.size() == 1);
        CHECK(d.points[0].weight == 1.0);
        CHECK((d.points[0].y == -1 || d.points[0].y == 1));
    }
    SECTION("class-conditional means at n = 1e5") {
        const auto d = gen_synthetic({100000, 11});
        d.validate();
        double balance = 0.0;
        Vec neg_mean(2, 0.0);
        double pos_abs_x = 0.0;
        double pos_y_mean = 0.0;
        std::size_t n_neg = 0, n_pos = 0;
        for (const auto& p : d.points) {
            balance += p.y == 1 ? 1.0 : 0.0;
            if (p.y == -1) {
                neg_mean[0] += p.x[0];
                neg_mean[1] += p.x[1];
                ++n_neg;
            } else {
                pos_abs_x += std::abs(p.x[0]);
                pos_y_mean += p.x[1];
                ++n_pos;
            }
        }
        balance /= static_cast<double>(d.size());
        CHECK(std::abs(balance - 0.5) <= 4.0 / std::sqrt(1e5));
        CHECK(std::abs(neg_mean[0] / n_neg) <= 0.05);
        CHECK(std::abs(neg_mean[1] / n_neg) <= 0.05);
        // |x| of the positive mixture concentrates near 3 (half-normal wobble ~0.8 folded in).
        CHECK(std::abs(pos_abs_x / n_pos - 3.0) <= 0.1);
        CHECK(std::abs(pos_y_mean / n_pos) <= 0.05);
    }
}

TEST_CASE("random linear classifier generation") {
    const auto data = gen_synthetic({1000, 5});

    SECTION("all generated classifiers beat the risk cap") {
        const auto clfs = gen_random_linear_classifiers(data, 10, 0.4, 21);
        REQUIRE(clfs.size() == 10);
        const Loss z = Loss::zero_one();
        for (const auto& c : clfs)
            CHECK(standard_risk(z, {c}, Mixture::uniform(1), data) < 0.4);
    }
    SECTION("max_risk = 1 accepts the first draws") {
        const auto clfs = gen_random_linear_classifiers(data, 3, 1.0, 21);
        CHECK(clfs.size() == 3);
    }
    SECTION("deterministic given the seed") {
        const auto a = gen_random_linear_classifiers(data, 4, 0.4, 9);
        const auto b = gen_random_linear_classifiers(data, 4, 0.4, 9);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(std::get<LinearBinary>(a[k].model).w == std::get<LinearBinary>(b[k].model).w);
    }
    SECTION("impossible risk cap exhausts the budget") {
        CHECK_THROWS_AS(gen_random_linear_classifiers(data, 1, 1e-9, 3, 200), GenerationError);
    }
}

TEST_CASE("random game generator produces valid games") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        RandomGameSpec spec;
        spec.points = 1 + rng.next_below(10);
        spec.max_candidates = 1 + rng.next_below(6);
        spec.classifiers = 1 + rng.next_below(5);
        spec.bound_M = 1.0 + rng.next_double();
        spec.seed = rng.next_u64();
        const FiniteGame g = gen_random_game(spec);  // constructor enforces the invariants
        CHECK(g.points() == spec.points);
        CHECK(g.classifiers() == spec.classifiers);
    }
    CHECK(gen_random_game({3, 2, 2, 1.0, false, 5}).points() ==
          gen_random_game({3, 2, 2, 1.0, false, 5}).points());
}

TEST_CASE("dataset csv round trip") {
    const auto path = temp_file("mixnash_roundtrip.csv");

    SECTION("write then read reproduces every double exactly") {
        auto data = gen_synthetic({50, 13});
        data.points[0].x[0] = 1.0 / 3.0;
        data.points[1].x[1] = 1e-17;
        write_csv(data, path.string());
        const auto back = read_csv(path.string());
        REQUIRE(back.size() == data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(back.points[i].x == data.points[i].x);
            CHECK(back.points[i].y == data.points[i].y);
            CHECK(back.points[i].weight == data.points[i].weight);
        }
        std::filesystem::remove(path);
    }
    SECTION("missing weight column defaults to uniform") {
        std::ofstream out(path);
        out << "x1,x2,y\n1.0,2.0,1\n3.0,4.0,-1\n";
        out.close();
        const auto data = read_csv(path.string());
        REQUIRE(data.size() == 2);
        CHECK(data.points[0].weight == 0.5);
        CHECK(data.points[1].weight == 0.5);
        std::filesystem::remove(path);
    }
    SECTION("malformed rows report the line number") {
        std::ofstream out(path);
        out << "x1,y,weight\n1.0,1,0.5\nnot_a_number,1,0.5\n";
        out.close();
        try {
            read_csv(path.string());
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        std::filesystem::remove(path);
    }
    SECTION("bad header is rejected") {
        std::ofstream out(path);
        out << "a,b,c\n1,2,3\n";
        out.close();
        CHECK_THROWS_AS(read_csv(path.string()), ParseError);
        std::filesystem::remove(path);
    }
}

TEST_CASE("synthetic csv is byte-identical across runs") {
    const auto p1 = temp_file("mixnash_det1.csv");
    const auto p2 = temp_file("mixnash_det2.csv");
    write_csv(gen_synthetic({1000, 123}), p1.string());
    write_csv(gen_synthetic({1000, 123}), p2.string());
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    CHECK_FALSE(s1.empty());
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}
