#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mixnash {

using Vec = std::vector<double>;

/// Thrown when an operation is not defined for the given classifier kind
/// (e.g. gradient-based attacks on non-differentiable models).
struct UnsupportedOperation : std::logic_error {
    using std::logic_error::logic_error;
};

enum class Metric { L2, Linf };

inline double l2_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double linf_dist(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

inline double distance(Metric m, const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("distance: dimension mismatch");
    return m == Metric::L2 ? l2_dist(a, b) : linf_dist(a, b);
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// One weighted sample. Binary tasks use labels {-1,+1}; enumerated
/// (tabular) multi-class tasks use {1..K}.
struct LabeledPoint {
    Vec x;
    int y = 0;
    double weight = 0.0;
};

struct LabeledDataset {
    std::vector<LabeledPoint> points;
    Metric metric = Metric::L2;
    double epsilon = 0.0;

    std::size_t size() const { return points.size(); }

    std::size_t dim() const { return points.empty() ? 0 : points.front().x.size(); }

    /// Rescales weights to sum to 1 exactly (up to one final rounding).
    void normalize_weights() {
        double total = 0.0;
        for (const auto& p : points) total += p.weight;
        if (total <= 0.0) throw std::invalid_argument("normalize_weights: nonpositive total weight");
        for (auto& p : points) p.weight /= total;
        double s = 0.0;
        for (const auto& p : points) s += p.weight;
        points.front().weight += 1.0 - s;
    }

    void validate() const {
        if (points.empty()) throw std::invalid_argument("dataset: empty");
        if (epsilon < 0.0) throw std::invalid_argument("dataset: epsilon < 0");
        const std::size_t d = points.front().x.size();
        double total = 0.0;
        for (const auto& p : points) {
            if (p.x.size() != d) throw std::invalid_argument("dataset: inconsistent dimension");
            if (!(p.weight >= 0.0)) throw std::invalid_argument("dataset: negative weight");
            total += p.weight;
        }
        if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("dataset: weights must sum to 1");
    }
};

// ---------------------------------------------------------------------------
// Classifiers
// ---------------------------------------------------------------------------

/// Affine score w.x + b, predicts sign. Margin semantics only.
struct LinearBinary {
    Vec w;
    double b = 0.0;
};

/// Same score as LinearBinary but with probabilistic output semantics;
/// cross-entropy evaluates it as a logistic model.
struct LogisticBinary {
    Vec w;
    double b = 0.0;
};

/// Distance-margin classifier: positive where the positive support is nearer.
struct NearestNeighborBinary {
    std::vector<Vec> pos_support;
    std::vector<Vec> neg_support;
    Metric metric = Metric::L2;
};

/// Score table over enumerated inputs (x encodes the row index in x[0]).
/// One column: binary sign convention with labels {-1,+1}. K >= 2 columns:
/// argmax prediction with labels {1..K}; top-score ties misclassify.
struct Tabular {
    std::vector<Vec> scores;
};

struct Classifier {
    std::variant<LinearBinary, LogisticBinary, NearestNeighborBinary, Tabular> model;
    int id = 0;

    bool differentiable() const {
        return std::holds_alternative<LinearBinary>(model) || std::holds_alternative<LogisticBinary>(model);
    }

    /// Linear score (w.x + b) for differentiable kinds.
    const Vec& linear_w() const {
        if (const auto* lin = std::get_if<LinearBinary>(&model)) return lin->w;
        if (const auto* log = std::get_if<LogisticBinary>(&model)) return log->w;
        throw UnsupportedOperation("classifier has no linear parameters");
    }

    double linear_b() const {
        if (const auto* lin = std::get_if<LinearBinary>(&model)) return lin->b;
        if (const auto* log = std::get_if<LogisticBinary>(&model)) return log->b;
        throw UnsupportedOperation("classifier has no linear parameters");
    }
};

inline Classifier make_linear(Vec w, double b, int id = 0) {
    for (double v : w)
        if (!std::isfinite(v)) throw std::invalid_argument("make_linear: non-finite weight");
    return Classifier{LinearBinary{std::move(w), b}, id};
}

inline Classifier make_logistic(Vec w, double b, int id = 0) {
    for (double v : w)
        if (!std::isfinite(v)) throw std::invalid_argument("make_logistic: non-finite weight");
    return Classifier{LogisticBinary{std::move(w), b}, id};
}

inline Classifier make_nearest_neighbor(std::vector<Vec> pos, std::vector<Vec> neg, Metric metric, int id = 0) {
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("make_nearest_neighbor: empty support");
    return Classifier{NearestNeighborBinary{std::move(pos), std::move(neg), metric}, id};
}

inline Classifier make_tabular(std::vector<Vec> scores, int id = 0) {
    if (scores.empty()) throw std::invalid_argument("make_tabular: empty table");
    const std::size_t k = scores.front().size();
    if (k == 0) throw std::invalid_argument("make_tabular: empty score row");
    for (const auto& row : scores)
        if (row.size() != k) throw std::invalid_argument("make_tabular: ragged table");
    return Classifier{Tabular{std::move(scores)}, id};
}

namespace detail {

inline std::size_t tabular_row(const Tabular& t, const Vec& x) {
    if (x.empty()) throw std::invalid_argument("tabular: empty input");
    const long idx = std::lround(x[0]);
    if (idx < 0 || static_cast<std::size_t>(idx) >= t.scores.size())
        throw std::invalid_argument("tabular: input index out of range");
    return static_cast<std::size_t>(idx);
}

}  // namespace detail

/// Real-valued score for binary classifiers; throws for multi-class tables.
inline double score(const Classifier& c, const Vec& x) {
    if (const auto* lin = std::get_if<LinearBinary>(&c.model)) {
        if (lin->w.size() != x.size()) throw std::invalid_argument("score: dimension mismatch");
        return dot(lin->w, x) + lin->b;
    }
    if (const auto* log = std::get_if<LogisticBinary>(&c.model)) {
        if (log->w.size() != x.size()) throw std::invalid_argument("score: dimension mismatch");
        return dot(log->w, x) + log->b;
    }
    if (const auto* nn = std::get_if<NearestNeighborBinary>(&c.model)) {
        double dp = std::numeric_limits<double>::infinity();
        double dn = std::numeric_limits<double>::infinity();
        for (const auto& s : nn->pos_support) dp = std::min(dp, distance(nn->metric, x, s));
        for (const auto& s : nn->neg_support) dn = std::min(dn, distance(nn->metric, x, s));
        return dn - dp;
    }
    const auto& tab = std::get<Tabular>(c.model);
    const auto& row = tab.scores[detail::tabular_row(tab, x)];
    if (row.size() != 1) throw UnsupportedOperation("score: multi-class table has no scalar score");
    return row[0];
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { ZeroOne, CrossEntropy };

/// Bounded loss; every evaluation lands in [0, bound_M]. Cross-entropy is
/// clamped at bound_M, which restricts the surrogate's domain but keeps the
/// boundedness every solver and bound in this library relies on.
struct Loss {
    LossKind kind = LossKind::ZeroOne;
    double bound_M = 1.0;

    static Loss zero_one() { return Loss{LossKind::ZeroOne, 1.0}; }
    static Loss cross_entropy(double bound = 10.0) {
        if (!(bound > 0.0)) throw std::invalid_argument("cross_entropy: bound must be positive");
        return Loss{LossKind::CrossEntropy, bound};
    }
};

namespace detail {

inline double softplus(double z) {
    // log(1 + e^z) without overflow.
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double multiclass_zero_one(const Vec& row, int y) {
    const std::size_t k = row.size();
    if (y < 1 || static_cast<std::size_t>(y) > k)
        throw std::invalid_argument("eval_loss: label out of range for table");
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t j = 1; j < k; ++j) {
        if (row[j] > row[best]) {
            best = j;
            tie = false;
        } else if (row[j] == row[best]) {
            tie = true;
        }
    }
    return (tie || best + 1 != static_cast<std::size_t>(y)) ? 1.0 : 0.0;
}

inline double multiclass_cross_entropy(const Vec& row, int y, double bound) {
    const std::size_t k = row.size();
    if (y < 1 || static_cast<std::size_t>(y) > k)
        throw std::invalid_argument("eval_loss: label out of range for table");
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double s : row) z += std::exp(s - mx);
    const double nll = std::log(z) - (row[static_cast<std::size_t>(y) - 1] - mx);
    return std::clamp(nll, 0.0, bound);
}

}  // namespace detail

/// Evaluates the loss of one classifier on one labeled input.
/// Zero-one counts the tie y*f(x) = 0 as a misclassification.
inline double eval_loss(const Loss& loss, const Classifier& clf, const Vec& x, int y) {
    if (const auto* tab = std::get_if<Tabular>(&clf.model)) {
        const auto& row = tab->scores[detail::tabular_row(*tab, x)];
        if (row.size() > 1) {
            return loss.kind == LossKind::ZeroOne ? detail::multiclass_zero_one(row, y)
                                                  : detail::multiclass_cross_entropy(row, y, loss.bound_M);
        }
    }
    if (y != -1 && y != 1) throw std::invalid_argument("eval_loss: binary label must be -1 or +1");
    const double margin = static_cast<double>(y) * score(clf, x);
    if (loss.kind == LossKind::ZeroOne) return margin <= 0.0 ? 1.0 : 0.0;
    return std::clamp(detail::softplus(-margin), 0.0, loss.bound_M);
}

inline double eval_loss(const Loss& loss, const Classifier& clf, const LabeledPoint& p) {
    return eval_loss(loss, clf, p.x, p.y);
}

// ---------------------------------------------------------------------------
// Mixtures and risks
// ---------------------------------------------------------------------------

/// Probability vector over a finite classifier set.
struct Mixture {
    Vec weights;

    std::size_t size() const { return weights.size(); }

    static Mixture uniform(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Mixture::uniform: empty");
        return Mixture{Vec(n, 1.0 / static_cast<double>(n))};
    }

    static Mixture vertex(std::size_t n, std::size_t k) {
        if (k >= n) throw std::invalid_argument("Mixture::vertex: index out of range");
        Mixture m{Vec(n, 0.0)};
        m.weights[k] = 1.0;
        return m;
    }

    bool in_simplex(double tol = 1e-12) const {
        double s = 0.0;
        for (double w : weights) {
            if (w < -tol || !std::isfinite(w)) return false;
            s += w;
        }
        return std::abs(s - 1.0) <= tol;
    }
};

/// Expected loss of the mixture over the clean data:
///   sum_i w_i sum_k lambda_k l(theta_k, (x_i, y_i)).
/// Linear in lambda.
inline double standard_risk(const Loss& loss, const std::vector<Classifier>& clfs, const Mixture& mix,
                            const LabeledDataset& data) {
    if (mix.size() != clfs.size()) throw std::invalid_argument("standard_risk: mixture length != classifier count");
    double total = 0.0;
    for (const auto& p : data.points) {
        double v = 0.0;
        for (std::size_t k = 0; k < clfs.size(); ++k) v += mix.weights[k] * eval_loss(loss, clfs[k], p);
        total += p.weight * v;
    }
    return total;
}

namespace detail {

template <typename Fn>
void simplex_grid_rec(std::size_t level, std::size_t remaining, std::size_t divisions, Vec& lambda, Fn& fn) {
    if (level + 1 == lambda.size()) {
        lambda[level] = static_cast<double>(remaining) / static_cast<double>(divisions);
        fn(static_cast<const Vec&>(lambda));
        return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
        lambda[level] = static_cast<double>(c) / static_cast<double>(divisions);
        simplex_grid_rec(level + 1, remaining - c, divisions, lambda, fn);
    }
}

}  // namespace detail

/// Enumerates mixtures on a regular grid over the simplex (step 1/divisions)
/// and calls fn(lambda) for each. Vertices are always included.
template <typename Fn>
void for_each_simplex_grid_point(std::size_t L, std::size_t divisions, Fn&& fn) {
    if (L == 0 || divisions == 0) throw std::invalid_argument("simplex grid: empty");
    Vec lambda(L, 0.0);
    detail::simplex_grid_rec(0, divisions, divisions, lambda, fn);
}

/// Checks that the best deterministic classifier matches the best mixture for
/// the standard risk. Returns (min over vertices, min over a lambda-grid).
/// Equal within 1e-9 because the risk is affine in lambda.
inline std::pair<double, double> min_standard_risk_equality_check(const Loss& loss,
                                                                  const std::vector<Classifier>& clfs,
                                                                  const LabeledDataset& data,
                                                                  double grid_step = 1e-3) {
    if (clfs.empty()) throw std::invalid_argument("min_standard_risk_equality_check: no classifiers");
    const std::size_t L = clfs.size();
    double vertex_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < L; ++k)
        vertex_min = std::min(vertex_min, standard_risk(loss, clfs, Mixture::vertex(L, k), data));

    // Per-classifier risks once; the grid scan is then a dot product per node.
    Vec risks(L);
    for (std::size_t k = 0; k < L; ++k) risks[k] = standard_risk(loss, clfs, Mixture::vertex(L, k), data);
    const auto divisions = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    double grid_min = std::numeric_limits<double>::infinity();
    for_each_simplex_grid_point(L, divisions, [&](const Vec& lambda) {
        double v = 0.0;
        for (std::size_t k = 0; k < L; ++k) v += lambda[k] * risks[k];
        grid_min = std::min(grid_min, v);
    });
    return {vertex_min, grid_min};
}

}  // namespace mixnash
