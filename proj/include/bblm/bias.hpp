#ifndef BBLM_BIAS_HPP
#define BBLM_BIAS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/lstm.hpp"
#include "bblm/synth.hpp"
#include "bblm/text.hpp"
#include "bblm/wordlists.hpp"

namespace bblm {

// Unit-norm gender direction from a linear SVM over the seed-word
// embeddings, oriented so the male seed words project nonnegative on
// average. Positive bias scores mean male-associated throughout.
struct GenderSubspace {
    Eigen::VectorXd g;            // unit norm
    Eigen::VectorXd w;            // classifier weights, original coordinates
    double b = 0.0;               // classifier intercept
    double sanity_accuracy = 0.0; // leave-one-pair-out CV accuracy
    bool degenerate = false;
    std::vector<TokenId> male_ids, female_ids;
};

namespace detail {

// Hinge loss + L2 by full-batch subgradient descent, fixed iteration count,
// on rows standardized by their pooled mean and RMS scale. Standardizing
// makes the recovered direction invariant to a global rescaling of the
// embeddings. Returns false when the rows are degenerate (zero spread).
inline bool fit_linear_svm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           double l2, int iterations, Eigen::VectorXd& w_out,
                           double& b_out) {
    const Eigen::Index n = x.rows(), d = x.cols();
    Eigen::RowVectorXd mu = x.colwise().mean();
    Eigen::MatrixXd z = x.rowwise() - mu;
    double scale = std::sqrt(z.squaredNorm() / static_cast<double>(n));
    if (scale <= 0.0) return false;
    z /= scale;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    for (int t = 0; t < iterations; ++t) {
        Eigen::VectorXd margin = y.array() * ((z * w).array() + b);
        Eigen::VectorXd gw = l2 * w;
        double gb = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (margin(i) < 1.0) {
                gw -= y(i) * z.row(i).transpose() / static_cast<double>(n);
                gb -= y(i) / static_cast<double>(n);
            }
        }
        double step = 0.5 / std::sqrt(static_cast<double>(t + 1));
        w -= step * gw;
        b -= step * gb;
    }
    // Map back to original coordinates: w.z + b = (w/scale).(x - mu) + b.
    w_out = w / scale;
    b_out = b - (w_out.transpose() * mu.transpose())(0);
    return w.norm() > 0.0;
}

}  // namespace detail

inline constexpr double kSvmL2 = 0.1;
inline constexpr int kSvmIterations = 20000;

// Fits the gender direction on the embedding rows of aligned seed pairs
// (male label +1, female -1). Sanity accuracy is leave-one-pair-out: each
// pair is predicted by a classifier fit on the remaining pairs.
inline GenderSubspace fit_gender_subspace(const Eigen::MatrixXd& embeddings,
                                          const std::vector<TokenId>& male_ids,
                                          const std::vector<TokenId>& female_ids) {
    if (male_ids.size() != female_ids.size())
        throw DataError("seed lists must pair up male/female words");
    const std::size_t n_pairs = male_ids.size();
    if (n_pairs < 3)
        throw DataError("gender subspace needs at least 3 resolvable seed pairs");

    const Eigen::Index d = embeddings.cols();
    auto stack = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& x,
                     Eigen::VectorXd& y) {
        x.resize(2 * static_cast<Eigen::Index>(idx.size()), d);
        y.resize(2 * static_cast<Eigen::Index>(idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            x.row(2 * i) = embeddings.row(male_ids[idx[i]]);
            y(2 * i) = 1.0;
            x.row(2 * i + 1) = embeddings.row(female_ids[idx[i]]);
            y(2 * i + 1) = -1.0;
        }
    };

    std::vector<std::size_t> all(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) all[i] = i;

    GenderSubspace out;
    out.male_ids = male_ids;
    out.female_ids = female_ids;

    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    stack(all, x, y);
    if (!detail::fit_linear_svm(x, y, kSvmL2, kSvmIterations, out.w, out.b)) {
        out.degenerate = true;
        out.g = Eigen::VectorXd::Zero(d);
        return out;
    }

    // Leave-one-pair-out sanity accuracy.
    int correct = 0;
    for (std::size_t hold = 0; hold < n_pairs; ++hold) {
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n_pairs; ++i)
            if (i != hold) rest.push_back(i);
        Eigen::MatrixXd xr;
        Eigen::VectorXd yr, wf;
        double bf = 0.0;
        stack(rest, xr, yr);
        if (!detail::fit_linear_svm(xr, yr, kSvmL2, kSvmIterations, wf, bf)) continue;
        if (wf.dot(embeddings.row(male_ids[hold])) + bf >= 0.0) ++correct;
        if (wf.dot(embeddings.row(female_ids[hold])) + bf < 0.0) ++correct;
    }
    out.sanity_accuracy = static_cast<double>(correct) / (2.0 * n_pairs);

    out.g = out.w.normalized();
    double male_mean = 0.0;
    for (TokenId id : male_ids) male_mean += out.g.dot(embeddings.row(id));
    if (male_mean < 0.0) out.g = -out.g;
    return out;
}

// Scalar projection of an embedding row onto the gender direction:
// positive = male-associated, negative = female-associated.
inline double ie_bias(const GenderSubspace& subspace, const Eigen::VectorXd& w) {
    if (w.size() != subspace.g.size()) throw DataError("ie_bias: dimension mismatch");
    return subspace.g.dot(w);
}

// Sentence templates with a single {slot} placeholder.
struct TemplateSet {
    std::vector<std::string> templates;
};

inline const std::string kSlotMarker = "{slot}";

inline TemplateSet builtin_templates() {
    using namespace synthwords;
    TemplateSet set;
    // 40 neutral "A {slot} VP ." sentences over the generator vocabulary.
    for (int i = 0; i < 20; ++i) {
        set.templates.push_back(std::string("A {slot} was ") + kVerbs[i] + " the " +
                                kObjects[i] + " .");
        set.templates.push_back(std::string("A {slot} was ") + kVerbs[i] + " the " +
                                kObjects[(i + 7) % 20] + " .");
    }
    return set;
}

inline TemplateSet load_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template file: " + path);
    TemplateSet set;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.find(kSlotMarker) == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": template has no {slot} placeholder");
        set.templates.push_back(line);
    }
    return set;
}

inline std::string fill_template(const std::string& tmpl, const std::string& word) {
    std::string out = tmpl;
    auto pos = out.find(kSlotMarker);
    out.replace(pos, kSlotMarker.size(), word);
    return out;
}

// Top-layer hidden state after consuming the final token, starting from a
// zero hidden state, dropout off.
inline Eigen::VectorXd sentence_embedding(const ModelState& model,
                                          const std::vector<TokenId>& ids) {
    if (ids.empty()) throw DataError("sentence_embedding: empty sentence");
    std::vector<std::vector<TokenId>> steps(ids.size());
    for (std::size_t t = 0; t < ids.size(); ++t) steps[t] = {ids[t]};
    Hidden state = detail::run_lstm(model, steps, zero_hidden(model.config, 1),
                                    false, nullptr, nullptr, nullptr);
    return state.h.back().row(0);
}

// Cosine with degenerate vectors scored 0.
inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double denom = a.norm() * b.norm();
    if (denom == 0.0) return 0.0;
    return a.dot(b) / denom;
}

namespace detail {

inline std::vector<TokenId> template_ids(const Vocabulary& vocab,
                                         const std::string& tmpl,
                                         const std::string& word) {
    auto tokens = tokenize(fill_template(tmpl, word));
    if (!tokens.empty() && tokens.back() == kEosToken) tokens.pop_back();
    return vocab.encode(tokens);
}

}  // namespace detail

// Mean over templates of cos(s(t(occ)), s(t("man"))) - cos(s(t(occ)),
// s(t("woman"))). Positive = male-biased.
inline double stsb_bias(const ModelState& model, const Vocabulary& vocab,
                        const std::string& occupation, const TemplateSet& templates) {
    if (templates.templates.empty()) throw DataError("stsb_bias: empty template set");
    if (!vocab.contains(occupation) || !vocab.contains("man") || !vocab.contains("woman"))
        throw DataError("stsb_bias: occupation, man and woman must be in vocabulary");
    double total = 0.0;
    for (const auto& t : templates.templates) {
        auto s_occ = sentence_embedding(model, detail::template_ids(vocab, t, occupation));
        auto s_man = sentence_embedding(model, detail::template_ids(vocab, t, "man"));
        auto s_woman = sentence_embedding(model, detail::template_ids(vocab, t, "woman"));
        total += cosine(s_occ, s_man) - cosine(s_occ, s_woman);
    }
    return total / static_cast<double>(templates.templates.size());
}

// Per-word bias scores for one checkpoint.
struct BiasRow {
    std::string word;
    double bias_ie = 0.0;
    double bias_stsb = 0.0;
};

struct BiasSnapshot {
    std::vector<BiasRow> rows;
    double mean_abs_ie = 0.0;
    double mean_abs_stsb = 0.0;
    bool has_stsb = false;
    GenderSubspace subspace;
};

// Refits the subspace on this model's embeddings and scores every
// resolvable occupation. When `templates` is null or empty the STS-B column
// is left out. Throws DataError when the subspace is degenerate.
inline BiasSnapshot bias_snapshot(const ModelState& model, const Vocabulary& vocab,
                                  const ResolvedWordLists& words,
                                  const TemplateSet* templates) {
    BiasSnapshot snap;
    std::vector<TokenId> male_ids, female_ids;
    for (const auto& [m_id, f_id] : words.seed_pair_ids) {
        male_ids.push_back(m_id);
        female_ids.push_back(f_id);
    }
    snap.subspace = fit_gender_subspace(model.embedding, male_ids, female_ids);
    if (snap.subspace.degenerate)
        throw DataError("gender subspace is degenerate for this checkpoint");

    snap.has_stsb = templates != nullptr && !templates->templates.empty();
    // Cache man/woman sentence embeddings per template.
    std::vector<Eigen::VectorXd> s_man, s_woman;
    if (snap.has_stsb) {
        for (const auto& t : templates->templates) {
            s_man.push_back(sentence_embedding(model, detail::template_ids(vocab, t, "man")));
            s_woman.push_back(
                sentence_embedding(model, detail::template_ids(vocab, t, "woman")));
        }
    }

    for (std::size_t i = 0; i < words.occupations.size(); ++i) {
        BiasRow row;
        row.word = words.occupations[i];
        row.bias_ie = ie_bias(snap.subspace, model.embedding.row(words.occupation_ids[i]));
        if (snap.has_stsb) {
            double total = 0.0;
            for (std::size_t t = 0; t < templates->templates.size(); ++t) {
                auto s_occ = sentence_embedding(
                    model,
                    detail::template_ids(vocab, templates->templates[t], row.word));
                total += cosine(s_occ, s_man[t]) - cosine(s_occ, s_woman[t]);
            }
            row.bias_stsb = total / static_cast<double>(templates->templates.size());
        }
        snap.mean_abs_ie += std::abs(row.bias_ie);
        snap.mean_abs_stsb += std::abs(row.bias_stsb);
        snap.rows.push_back(std::move(row));
    }
    if (!snap.rows.empty()) {
        snap.mean_abs_ie /= static_cast<double>(snap.rows.size());
        snap.mean_abs_stsb /= static_cast<double>(snap.rows.size());
    }
    return snap;
}

}  // namespace bblm

#endif
