#ifndef BBLM_PROBE_HPP
#define BBLM_PROBE_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/rng.hpp"

namespace bblm {

// One labeled male/female vector pair. Probes are trained and evaluated on
// pairs so that an 80/20 split never separates the two members of a pair.
struct VectorPair {
    Eigen::VectorXd male;    // label +1
    Eigen::VectorXd female;  // label -1
};

struct LinearProbe {
    Eigen::VectorXd w;
    double b = 0.0;
    double l2 = 1.0;
    std::uint64_t split_seed = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

namespace detail {

// L2-regularized logistic regression by full-batch gradient descent with a
// Lipschitz step size; intercept unregularized. Deterministic.
inline void fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         double l2, Eigen::VectorXd& w, double& b,
                         int max_iter = 10000, double tol = 1e-8) {
    const Eigen::Index n = x.rows(), d = x.cols();
    w = Eigen::VectorXd::Zero(d);
    b = 0.0;
    double max_sq = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        max_sq = std::max(max_sq, x.row(i).squaredNorm() + 1.0);
    const double step = 1.0 / (0.25 * max_sq + l2);

    Eigen::VectorXd margin(n), sig(n), gw(d);
    for (int iter = 0; iter < max_iter; ++iter) {
        margin = (x * w).array() + b;
        // d/dm log(1+exp(-y m)) = -y * sigmoid(-y m)
        sig = (-((y.array() * margin.array()).exp() + 1.0).inverse()) * y.array();
        gw = x.transpose() * sig / static_cast<double>(n) + l2 * w;
        double gb = sig.sum() / static_cast<double>(n);
        double gnorm = std::sqrt(gw.squaredNorm() + gb * gb);
        if (gnorm <= tol) break;
        w -= step * gw;
        b -= step * gb;
    }
}

inline double accuracy(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double b) {
    if (x.rows() == 0) return 0.0;
    Eigen::VectorXd score = (x * w).array() + b;
    Eigen::Index correct = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double pred = score(i) >= 0.0 ? 1.0 : -1.0;
        if (pred == y(i)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows());
}

struct PairSplit {
    std::vector<std::size_t> train, test;
};

inline PairSplit split_pairs(std::size_t n_pairs, std::uint64_t seed) {
    std::vector<std::size_t> order(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) order[i] = i;
    Rng rng(seed);
    for (std::size_t i = n_pairs; i > 1; --i) {
        std::size_t j = rng.uniform_int(i);
        std::swap(order[i - 1], order[j]);
    }
    PairSplit split;
    std::size_t n_train = (n_pairs * 8 + 9) / 10;  // ceil(0.8 n)
    for (std::size_t i = 0; i < n_pairs; ++i)
        (i < n_train ? split.train : split.test).push_back(order[i]);
    return split;
}

inline void stack_pairs(const std::vector<VectorPair>& pairs,
                        const std::vector<std::size_t>& idx, Eigen::MatrixXd& x,
                        Eigen::VectorXd& y) {
    const Eigen::Index d = pairs.empty() ? 0 : pairs.front().male.size();
    x.resize(2 * static_cast<Eigen::Index>(idx.size()), d);
    y.resize(2 * static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        x.row(2 * i) = pairs[idx[i]].male;
        y(2 * i) = 1.0;
        x.row(2 * i + 1) = pairs[idx[i]].female;
        y(2 * i + 1) = -1.0;
    }
}

}  // namespace detail

// Trains on an 80/20 pair-level split; both members of a pair always land
// on the same side. At least one pair must reach each side of the split.
inline LinearProbe fit_probe(const std::vector<VectorPair>& pairs, double l2,
                             std::uint64_t split_seed) {
    if (pairs.size() < 2)
        throw DataError("probe needs at least 2 pairs (2 examples per class)");
    auto split = detail::split_pairs(pairs.size(), split_seed);
    Eigen::MatrixXd xtr, xte;
    Eigen::VectorXd ytr, yte;
    detail::stack_pairs(pairs, split.train, xtr, ytr);
    detail::stack_pairs(pairs, split.test, xte, yte);

    LinearProbe probe;
    probe.l2 = l2;
    probe.split_seed = split_seed;
    detail::fit_logistic(xtr, ytr, l2, probe.w, probe.b);
    probe.train_accuracy = detail::accuracy(xtr, ytr, probe.w, probe.b);
    probe.test_accuracy =
        split.test.empty() ? 0.0 : detail::accuracy(xte, yte, probe.w, probe.b);
    return probe;
}

// Axis whose probe weight has the largest magnitude; ties break low.
inline int dominant_unit(const LinearProbe& probe) {
    int best = 0;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < probe.w.size(); ++i) {
        double a = std::abs(probe.w(i));
        if (a > best_abs) {
            best_abs = a;
            best = static_cast<int>(i);
        }
    }
    return best;
}

struct ProbeVariants {
    LinearProbe full;
    LinearProbe unit_only;     // single coordinate `unit`
    LinearProbe unit_removed;  // the d-1 remaining coordinates
};

// Three probes fit on identical pair-level splits: the full embedding, the
// single given coordinate, and everything but that coordinate.
inline ProbeVariants probe_variants(const std::vector<VectorPair>& pairs, int unit,
                                    double l2, std::uint64_t split_seed) {
    if (pairs.empty()) throw DataError("probe_variants: no pairs");
    const Eigen::Index d = pairs.front().male.size();
    if (unit < 0 || unit >= d)
        throw DataError("probe_variants: unit index out of range");
    if (d == 1)
        throw DataError("probe_variants: cannot remove the only dimension");

    auto project = [&](bool only) {
        std::vector<VectorPair> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) {
            VectorPair q;
            if (only) {
                q.male = Eigen::VectorXd::Constant(1, p.male(unit));
                q.female = Eigen::VectorXd::Constant(1, p.female(unit));
            } else {
                q.male.resize(d - 1);
                q.female.resize(d - 1);
                Eigen::Index k = 0;
                for (Eigen::Index i = 0; i < d; ++i) {
                    if (i == unit) continue;
                    q.male(k) = p.male(i);
                    q.female(k) = p.female(i);
                    ++k;
                }
            }
            out.push_back(std::move(q));
        }
        return out;
    };

    ProbeVariants v;
    v.full = fit_probe(pairs, l2, split_seed);
    v.unit_only = fit_probe(project(true), l2, split_seed);
    v.unit_removed = fit_probe(project(false), l2, split_seed);
    return v;
}

// Signed distance (w.x + b) / ||w||; the sign equals the predicted class.
inline double boundary_distance(const LinearProbe& probe, const Eigen::VectorXd& x) {
    double norm = probe.w.norm();
    if (norm == 0.0) throw DataError("boundary_distance: zero weight vector");
    if (x.size() != probe.w.size())
        throw DataError("boundary_distance: dimension mismatch");
    return (probe.w.dot(x) + probe.b) / norm;
}

struct ProbeSeriesRow {
    std::string checkpoint;
    double fraction = 0.0;  // epochs completed, fractional
    double acc_full = 0.0;
    double acc_unit_only = 0.0;
    double acc_unit_removed = 0.0;
    int dominant_unit = 0;
};

using ProbeSeries = std::vector<ProbeSeriesRow>;

inline std::vector<std::vector<bool>> unit_overlap(const ProbeSeries& series) {
    const std::size_t n = series.size();
    std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            m[i][j] = series[i].dominant_unit == series[j].dominant_unit;
    return m;
}

// Earliest index where |distance| >= threshold with the sign the token ends
// up with at the final checkpoint; early wrong-sign excursions are ignored.
inline std::optional<std::size_t> threshold_crossing(
    const std::vector<double>& distances, double threshold) {
    if (threshold <= 0.0) throw ConfigError("threshold must be > 0");
    if (distances.empty()) return std::nullopt;
    const double final_sign = distances.back() >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < distances.size(); ++i)
        if (distances[i] * final_sign >= threshold) return i;
    return std::nullopt;
}

struct Phases {
    std::optional<std::size_t> formation_end;
    std::optional<std::size_t> consolidation_end;
};

// Formation ends at the first checkpoint after which the dominant unit
// never changes (the stable run must cover at least two checkpoints);
// consolidation ends at the first checkpoint where the unit-only accuracy
// reaches the unit-removed accuracy and stays there for `window`
// consecutive checkpoints.
inline Phases detect_phases(const ProbeSeries& series, int window = 3) {
    Phases out;
    if (series.empty()) return out;
    const std::size_t n = series.size();

    std::size_t stable_from = n - 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        if (series[i].dominant_unit == series[n - 1].dominant_unit)
            stable_from = i;
        else
            break;
    }
    if (stable_from < n - 1) out.formation_end = stable_from;

    for (std::size_t i = 0; i + window <= n; ++i) {
        bool ok = true;
        for (int k = 0; k < window; ++k)
            if (series[i + k].acc_unit_only < series[i + k].acc_unit_removed) {
                ok = false;
                break;
            }
        if (ok) {
            out.consolidation_end = i;
            break;
        }
    }
    return out;
}

}  // namespace bblm

#endif
