#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mixnash/core.hpp"
#include "mixnash/game.hpp"
#include "mixnash/rng.hpp"

namespace mixnash {

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Two-dimensional benchmark distribution: labels +-1 with probability 1/2;
/// the negative class is a standard Gaussian at the origin, the positive
/// class an even mixture of unit Gaussians at (-3, 0) and (3, 0).
struct SyntheticSpec {
    std::size_t n = 1000;
    std::uint64_t seed = 0;
};

inline LabeledDataset gen_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("gen_synthetic: n must be >= 1");
    LabeledDataset data;
    data.metric = Metric::L2;
    data.points.reserve(spec.n);
    Rng rng = Rng::stream(spec.seed, 0);
    const double w = 1.0 / static_cast<double>(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int y = rng.next_double() < 0.5 ? -1 : 1;
        Vec x(2);
        if (y == -1) {
            x[0] = rng.next_normal();
            x[1] = rng.next_normal();
        } else {
            const double cx = rng.next_double() < 0.5 ? -3.0 : 3.0;
            x[0] = cx + rng.next_normal();
            x[1] = rng.next_normal();
        }
        data.points.push_back({std::move(x), y, w});
    }
    data.normalize_weights();
    return data;
}

// ---------------------------------------------------------------------------
// Random classifiers and games
// ---------------------------------------------------------------------------

/// Rejection-samples linear classifiers (w uniform on the unit sphere, b
/// uniform in [-5, 5]) until L of them score a zero-one standard risk below
/// max_risk on the data.
inline std::vector<Classifier> gen_random_linear_classifiers(const LabeledDataset& data, std::size_t L,
                                                             double max_risk, std::uint64_t seed,
                                                             long draw_budget = 100000) {
    if (L < 1) throw std::invalid_argument("gen_random_linear_classifiers: L must be >= 1");
    const std::size_t d = data.dim();
    const Loss loss = Loss::zero_one();
    std::vector<Classifier> out;
    Rng rng = Rng::stream(seed, 0);
    for (long draw = 0; draw < draw_budget && out.size() < L; ++draw) {
        Vec w(d);
        double norm2 = 0.0;
        for (auto& v : w) {
            v = rng.next_normal();
            norm2 += v * v;
        }
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) continue;
        for (auto& v : w) v /= norm;
        const double b = rng.uniform(-5.0, 5.0);
        Classifier c = make_linear(std::move(w), b, static_cast<int>(out.size()));
        const double risk = standard_risk(loss, {c}, Mixture::uniform(1), data);
        if (risk < max_risk) out.push_back(std::move(c));
    }
    if (out.size() < L)
        throw GenerationError("gen_random_linear_classifiers: rejection budget exhausted");
    return out;
}

struct RandomGameSpec {
    std::size_t points = 10;
    std::size_t max_candidates = 5;  // per-point count drawn in [1, max_candidates]
    std::size_t classifiers = 2;
    double bound_M = 1.0;
    bool uniform_weights = false;
    std::uint64_t seed = 0;
};

/// Random loss tensor with entries uniform in [0, bound_M]; weights either
/// uniform or random positive normalized.
inline FiniteGame gen_random_game(const RandomGameSpec& spec) {
    if (spec.points < 1 || spec.classifiers < 1 || spec.max_candidates < 1)
        throw std::invalid_argument("gen_random_game: empty dimensions");
    Rng rng = Rng::stream(spec.seed, 0);
    std::vector<std::vector<Vec>> tensor(spec.points);
    Vec weights(spec.points);
    double total = 0.0;
    for (std::size_t i = 0; i < spec.points; ++i) {
        const std::size_t m = 1 + rng.next_below(spec.max_candidates);
        tensor[i].assign(m, Vec(spec.classifiers));
        for (auto& row : tensor[i])
            for (auto& v : row) v = rng.uniform(0.0, spec.bound_M);
        weights[i] = spec.uniform_weights ? 1.0 : 0.05 + rng.next_double();
        total += weights[i];
    }
    for (auto& w : weights) w /= total;
    double s = 0.0;
    for (double w : weights) s += w;
    weights[0] += 1.0 - s;
    return FiniteGame(std::move(tensor), std::move(weights), spec.bound_M);
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& field, std::size_t line_no) {
    double out = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ParseError("csv line " + std::to_string(line_no) + ": bad number '" + field + "'");
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace detail

/// Header `x1,...,xd,y,weight`; 17 significant digits so a write/read
/// round-trip reproduces every double exactly.
inline void write_csv(const LabeledDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    const std::size_t d = data.dim();
    for (std::size_t j = 1; j <= d; ++j) out << "x" << j << ",";
    out << "y,weight\n";
    for (const auto& p : data.points) {
        for (double v : p.x) out << detail::format_double(v) << ",";
        out << p.y << "," << detail::format_double(p.weight) << "\n";
    }
}

/// Reads the dataset CSV; a missing weight column means uniform weights 1/N.
/// Metric and epsilon are not part of the file and stay at their defaults.
inline LabeledDataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv line 1: missing header");
    const auto header = detail::split_csv_line(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "x" + std::to_string(d + 1)) ++d;
    if (d == 0 || d >= header.size() || header[d] != "y")
        throw ParseError("csv line 1: expected header x1,...,xd,y[,weight]");
    const bool has_weight = header.size() == d + 2 && header[d + 1] == "weight";
    if (!has_weight && header.size() != d + 1)
        throw ParseError("csv line 1: unexpected trailing columns");

    LabeledDataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        LabeledPoint p;
        p.x.resize(d);
        for (std::size_t j = 0; j < d; ++j) p.x[j] = detail::parse_double(fields[j], line_no);
        const double y = detail::parse_double(fields[d], line_no);
        p.y = static_cast<int>(std::lround(y));
        p.weight = has_weight ? detail::parse_double(fields[d + 1], line_no) : 0.0;
        data.points.push_back(std::move(p));
    }
    if (data.points.empty()) throw ParseError("csv: no data rows");
    if (!has_weight)
        for (auto& p : data.points) p.weight = 1.0 / static_cast<double>(data.points.size());
    return data;
}

}  // namespace mixnash
