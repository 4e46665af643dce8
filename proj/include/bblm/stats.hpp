#ifndef BBLM_STATS_HPP
#define BBLM_STATS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bblm/errors.hpp"

namespace bblm {

// Sample Pearson correlation; nullopt when either input is constant.
inline std::optional<double> pearson(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw DataError("pearson: length mismatch");
    const std::size_t n = xs.size();
    if (n < 3) throw DataError("pearson: need at least 3 points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / (std::sqrt(sxx) * std::sqrt(syy));
}

// Average ranks, ties share the mean of their positions (1-based).
inline std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation (Pearson over average ranks).
inline std::optional<double> spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
    return pearson(average_ranks(xs), average_ranks(ys));
}

// Per-occupation dataset features. Undefined PMI entries stay flagged; they
// are dropped pairwise at correlation time, never zero-filled.
struct FeatureRow {
    double word_count = 0.0;
    double pmi_f = 0.0, pmi_m = 0.0, pmi_diff = 0.0;
    bool pmi_f_defined = false, pmi_m_defined = false;
    std::optional<double> labour_pct_female;
    std::optional<double> planted_rho;
};

using FeatureFrame = std::map<std::string, FeatureRow>;

// Feature columns in report order. Labour and planted rates are reported
// male-positive (100 - pct, 1 - rho) so every correlation shares the
// positive = male orientation of the bias scores.
inline const std::vector<std::string> kFeatureNames = {
    "word_count", "pmi_f", "pmi_m", "pmi_diff", "labour_male_pct", "planted_male_rate"};

inline std::optional<double> feature_value(const FeatureRow& row,
                                           const std::string& feature) {
    if (feature == "word_count") return row.word_count;
    if (feature == "pmi_f")
        return row.pmi_f_defined ? std::optional<double>(row.pmi_f) : std::nullopt;
    if (feature == "pmi_m")
        return row.pmi_m_defined ? std::optional<double>(row.pmi_m) : std::nullopt;
    if (feature == "pmi_diff")
        return row.pmi_f_defined && row.pmi_m_defined
                   ? std::optional<double>(row.pmi_diff)
                   : std::nullopt;
    if (feature == "labour_male_pct")
        return row.labour_pct_female
                   ? std::optional<double>(100.0 - *row.labour_pct_female)
                   : std::nullopt;
    if (feature == "planted_male_rate")
        return row.planted_rho ? std::optional<double>(1.0 - *row.planted_rho)
                               : std::nullopt;
    throw ConfigError("unknown feature: " + feature);
}

struct CorrelationCell {
    std::string feature;
    std::optional<double> r;
    std::size_t n = 0;  // rows actually used after pairwise deletion
};

// Pearson r of the given per-word scores against every feature column,
// dropping undefined rows pairwise. Cells with fewer than 3 usable rows or
// a constant column come back undefined.
inline std::vector<CorrelationCell> correlation_report(
    const std::map<std::string, double>& scores, const FeatureFrame& frame) {
    std::vector<CorrelationCell> cells;
    for (const auto& feature : kFeatureNames) {
        CorrelationCell cell;
        cell.feature = feature;
        std::vector<double> xs, ys;
        for (const auto& [word, score] : scores) {
            auto it = frame.find(word);
            if (it == frame.end()) continue;
            auto v = feature_value(it->second, feature);
            if (!v) continue;
            xs.push_back(score);
            ys.push_back(*v);
        }
        cell.n = xs.size();
        if (xs.size() >= 3) cell.r = pearson(xs, ys);
        cells.push_back(std::move(cell));
    }
    return cells;
}

// Pearson r between the two bias metrics across words at one checkpoint.
inline std::optional<double> cross_metric_correlation(
    const std::vector<std::pair<double, double>>& ie_stsb) {
    if (ie_stsb.size() < 3)
        throw DataError("cross_metric_correlation: need at least 3 words");
    std::vector<double> xs, ys;
    for (const auto& [ie, stsb] : ie_stsb) {
        xs.push_back(ie);
        ys.push_back(stsb);
    }
    return pearson(xs, ys);
}

}  // namespace bblm

#endif
