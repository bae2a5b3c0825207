#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixnash/bounds.hpp"
#include "mixnash/datagen.hpp"
#include "mixnash/game.hpp"
#include "mixnash/trainer.hpp"

namespace mixnash {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Enums and small configs
// ---------------------------------------------------------------------------

inline std::string to_string(Metric m) { return m == Metric::L2 ? "l2" : "linf"; }

inline Metric metric_from_string(const std::string& s) {
    if (s == "l2") return Metric::L2;
    if (s == "linf") return Metric::Linf;
    throw std::invalid_argument("metric must be 'l2' or 'linf', got '" + s + "'");
}

inline json loss_to_json(const Loss& loss) {
    return json{{"kind", loss.kind == LossKind::ZeroOne ? "zero_one" : "cross_entropy"},
                {"bound", loss.bound_M}};
}

inline Loss loss_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero_one") return Loss::zero_one();
    if (kind == "cross_entropy") return Loss::cross_entropy(j.value("bound", 10.0));
    throw std::invalid_argument("loss kind must be 'zero_one' or 'cross_entropy', got '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Game tensors (flat CSV: i,j,k,loss,weight)
// ---------------------------------------------------------------------------

inline void write_game_csv(const FiniteGame& game, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_game_csv: cannot open " + path);
    out << "i,j,k,loss,weight\n";
    for (std::size_t i = 0; i < game.points(); ++i)
        for (std::size_t j = 0; j < game.candidates(i); ++j)
            for (std::size_t k = 0; k < game.classifiers(); ++k)
                out << i << "," << j << "," << k << "," << detail::format_double(game.loss(i, j, k)) << ","
                    << detail::format_double(game.weight(i)) << "\n";
}

inline FiniteGame read_game_csv(const std::string& path, double bound_M = 0.0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_game_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line) != std::vector<std::string>{"i", "j", "k", "loss", "weight"})
        throw ParseError("game csv line 1: expected header i,j,k,loss,weight");

    std::map<std::pair<std::size_t, std::size_t>, Vec> rows;
    std::map<std::size_t, double> weights;
    std::size_t classifiers = 0;
    double max_loss = 0.0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw ParseError("game csv line " + std::to_string(line_no) + ": expected 5 fields");
        const auto i = static_cast<std::size_t>(detail::parse_double(fields[0], line_no));
        const auto j = static_cast<std::size_t>(detail::parse_double(fields[1], line_no));
        const auto k = static_cast<std::size_t>(detail::parse_double(fields[2], line_no));
        const double loss = detail::parse_double(fields[3], line_no);
        const double weight = detail::parse_double(fields[4], line_no);
        auto& row = rows[{i, j}];
        if (row.size() <= k) row.resize(k + 1, -1.0);
        row[k] = loss;
        max_loss = std::max(max_loss, loss);
        classifiers = std::max(classifiers, k + 1);
        auto [it, inserted] = weights.try_emplace(i, weight);
        if (!inserted && it->second != weight)
            throw ParseError("game csv line " + std::to_string(line_no) + ": inconsistent weight for point " +
                             std::to_string(i));
    }
    if (rows.empty()) throw ParseError("game csv: no data rows");

    const std::size_t n_points = weights.rbegin()->first + 1;
    std::vector<std::vector<Vec>> tensor(n_points);
    Vec w(n_points, 0.0);
    for (const auto& [i, weight] : weights) w[i] = weight;
    for (const auto& [key, row] : rows) {
        const auto [i, j] = key;
        if (i >= n_points) throw ParseError("game csv: point index out of range");
        if (tensor[i].size() <= j) tensor[i].resize(j + 1);
        if (row.size() != classifiers)
            throw ParseError("game csv: missing classifier entries for point " + std::to_string(i));
        for (double v : row)
            if (v < 0.0) throw ParseError("game csv: missing classifier entries for point " + std::to_string(i));
        tensor[i][j] = row;
    }
    for (std::size_t i = 0; i < n_points; ++i)
        for (const auto& row : tensor[i])
            if (row.empty()) throw ParseError("game csv: missing candidate row for point " + std::to_string(i));
    return FiniteGame(std::move(tensor), std::move(w), bound_M > 0.0 ? bound_M : std::max(max_loss, 1.0));
}

// ---------------------------------------------------------------------------
// Certificates (JSON)
// ---------------------------------------------------------------------------

inline json certificate_to_json(const EquilibriumCertificate& cert) {
    json plan = json::array();
    for (const auto& qi : cert.plan.q) plan.push_back(qi);
    return json{{"lambda", cert.lambda.weights}, {"plan", plan},          {"primal", cert.primal_value},
                {"dual", cert.dual_value},       {"gap", cert.gap},       {"iterations", cert.iterations}};
}

inline EquilibriumCertificate certificate_from_json(const json& j) {
    EquilibriumCertificate cert;
    cert.lambda.weights = j.at("lambda").get<Vec>();
    for (const auto& qi : j.at("plan")) cert.plan.q.push_back(qi.get<Vec>());
    cert.primal_value = j.at("primal").get<double>();
    cert.dual_value = j.at("dual").get<double>();
    cert.gap = j.at("gap").get<double>();
    cert.iterations = j.at("iterations").get<long>();
    return cert;
}

// ---------------------------------------------------------------------------
// Candidate sets (CSV: point_index,candidate_index,x1..xd)
// ---------------------------------------------------------------------------

inline void write_candidates_csv(const CandidateSet& cands, const std::string& path) {
    if (cands.candidates.empty()) throw std::invalid_argument("write_candidates_csv: empty set");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_candidates_csv: cannot open " + path);
    const std::size_t d = cands.candidates.front().front().size();
    out << "point_index,candidate_index";
    for (std::size_t j = 1; j <= d; ++j) out << ",x" << j;
    out << "\n";
    for (std::size_t i = 0; i < cands.candidates.size(); ++i)
        for (std::size_t j = 0; j < cands.candidates[i].size(); ++j) {
            out << i << "," << j;
            for (double v : cands.candidates[i][j]) out << "," << detail::format_double(v);
            out << "\n";
        }
}

/// Reads a candidate CSV back and validates it against the dataset's metric
/// and budget, so exported attacks can be replayed across runs.
inline CandidateSet read_candidates_csv(const std::string& path, const LabeledDataset& data) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_candidates_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("candidates csv line 1: missing header");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "point_index" || header[1] != "candidate_index")
        throw ParseError("candidates csv line 1: expected point_index,candidate_index,x1,...");
    const std::size_t d = header.size() - 2;

    CandidateSet cs;
    cs.candidates.resize(data.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != d + 2)
            throw ParseError("candidates csv line " + std::to_string(line_no) + ": wrong field count");
        const auto i = static_cast<std::size_t>(detail::parse_double(fields[0], line_no));
        const auto j = static_cast<std::size_t>(detail::parse_double(fields[1], line_no));
        if (i >= data.size())
            throw ParseError("candidates csv line " + std::to_string(line_no) + ": point index out of range");
        Vec x(d);
        for (std::size_t c = 0; c < d; ++c) x[c] = detail::parse_double(fields[c + 2], line_no);
        if (cs.candidates[i].size() != j)
            throw ParseError("candidates csv line " + std::to_string(line_no) +
                             ": candidate indices must be contiguous per point");
        cs.candidates[i].push_back(std::move(x));
    }
    cs.validate(data);
    return cs;
}

// ---------------------------------------------------------------------------
// Traces, reports, checkpoints
// ---------------------------------------------------------------------------

/// Value traces as `iter,value,gap_estimate` rows.
inline void write_trace_csv(const Vec& values, const Vec& gaps, const std::string& path) {
    if (!gaps.empty() && gaps.size() != values.size())
        throw std::invalid_argument("write_trace_csv: trace length mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
    out << "iter,value,gap_estimate\n";
    for (std::size_t t = 0; t < values.size(); ++t) {
        out << t << "," << detail::format_double(values[t]) << ",";
        out << (gaps.empty() ? "" : detail::format_double(gaps[t])) << "\n";
    }
}

inline json bound_report_to_json(const BoundReport& report) {
    return json{{"bound_value", report.bound_value},
                {"empirical_deviation", report.empirical_deviation},
                {"confidence_delta", report.confidence_delta},
                {"trials", report.trials},
                {"violation_rate", report.violation_rate}};
}

inline void write_bound_trials_csv(const BoundReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_bound_trials_csv: cannot open " + path);
    out << "trial,deviation,bound,violated\n";
    for (std::size_t t = 0; t < report.trial_data.size(); ++t)
        out << t << "," << detail::format_double(report.trial_data[t].deviation) << ","
            << detail::format_double(report.trial_data[t].bound) << ","
            << (report.trial_data[t].violated ? 1 : 0) << "\n";
}

/// Metrics trace as `phase,iter,standard_acc,robust_acc,lambda_1..L`.
inline void write_metrics_csv(const TrainMetrics& metrics, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
    const std::size_t L = metrics.rows.empty() ? 0 : metrics.rows.front().lambda.size();
    out << "phase,iter,standard_acc,robust_acc";
    for (std::size_t k = 1; k <= L; ++k) out << ",lambda_" << k;
    out << "\n";
    for (const auto& row : metrics.rows) {
        out << row.phase << "," << row.iter << "," << detail::format_double(row.standard_acc) << ","
            << detail::format_double(row.robust_acc);
        for (double l : row.lambda) out << "," << detail::format_double(l);
        out << "\n";
    }
}

inline json checkpoint_to_json(const MixtureModel& model) {
    json models = json::array();
    for (const auto& m : model.models) models.push_back(json{{"w", m.w}, {"b", m.b}});
    return json{{"models", models}, {"lambda", model.lambda.weights}};
}

inline MixtureModel checkpoint_from_json(const json& j) {
    MixtureModel model;
    for (const auto& m : j.at("models"))
        model.models.push_back(LogisticBinary{m.at("w").get<Vec>(), m.at("b").get<double>()});
    model.lambda.weights = j.at("lambda").get<Vec>();
    if (!model.lambda.in_simplex(1e-9)) throw std::invalid_argument("checkpoint: lambda outside the simplex");
    return model;
}

inline void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json_file: cannot open " + path);
    out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_json_file: cannot open " + path);
    return json::parse(in);
}

}  // namespace mixnash
