#ifndef BBLM_DEBIAS_HPP
#define BBLM_DEBIAS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "bblm/bias.hpp"
#include "bblm/errors.hpp"
#include "bblm/lstm.hpp"
#include "bblm/stats.hpp"

namespace bblm {

// P = I - g g^T for a unit-norm direction g.
inline Eigen::MatrixXd nullspace_projection(const Eigen::VectorXd& g) {
    double norm = g.norm();
    if (norm == 0.0) throw DataError("nullspace_projection: zero direction");
    if (std::abs(norm - 1.0) > 1e-9)
        throw DataError("nullspace_projection: direction must be unit norm");
    return Eigen::MatrixXd::Identity(g.size(), g.size()) - g * g.transpose();
}

struct ProjectionStep {
    int k = 0;  // 1-based step index
    Eigen::VectorXd direction;
    Eigen::MatrixXd projector;
    double classifier_accuracy = 0.0;  // sanity accuracy after this projection
};

struct InlpResult {
    // embeddings[k] is the matrix after k projections; embeddings[0] is the
    // input.
    std::vector<Eigen::MatrixXd> embeddings;
    std::vector<ProjectionStep> steps;
    double initial_accuracy = 0.0;  // sanity accuracy of the k=0 fit
    bool stopped_early = false;
    std::string stop_reason;
};

inline constexpr double kInlpStopAccuracy = 0.55;

// Iterative null-space projection: fit the gender direction, project every
// vocabulary row onto its null space, refit on the projected seeds and
// record that classifier's accuracy; stop once the accuracy reaches
// stop_accuracy (near chance) or the direction fit degenerates. Diagnostic
// sweeps pass stop_accuracy = 0 to run the full chain.
inline InlpResult inlp(const Eigen::MatrixXd& embeddings,
                       const std::vector<TokenId>& male_ids,
                       const std::vector<TokenId>& female_ids, int k_max,
                       double stop_accuracy = kInlpStopAccuracy) {
    if (k_max < 0) throw ConfigError("k_max must be >= 0");
    InlpResult out;
    out.embeddings.push_back(embeddings);

    GenderSubspace fit = fit_gender_subspace(embeddings, male_ids, female_ids);
    if (fit.degenerate) {
        out.stopped_early = true;
        out.stop_reason = "initial gender direction fit is degenerate";
        return out;
    }
    out.initial_accuracy = fit.sanity_accuracy;

    for (int k = 1; k <= k_max; ++k) {
        ProjectionStep step;
        step.k = k;
        step.direction = fit.g;
        step.projector = nullspace_projection(fit.g);
        Eigen::MatrixXd projected = out.embeddings.back() * step.projector;
        out.embeddings.push_back(projected);

        fit = fit_gender_subspace(projected, male_ids, female_ids);
        if (fit.degenerate) {
            step.classifier_accuracy = 0.5;
            out.steps.push_back(std::move(step));
            out.stopped_early = true;
            out.stop_reason = "gender direction fit degenerated at step " +
                              std::to_string(k);
            break;
        }
        step.classifier_accuracy = fit.sanity_accuracy;
        out.steps.push_back(std::move(step));
        if (fit.sanity_accuracy <= stop_accuracy) {
            out.stopped_early = true;
            out.stop_reason = "classifier accuracy reached " +
                              std::to_string(fit.sanity_accuracy) + " at step " +
                              std::to_string(k);
            break;
        }
    }
    return out;
}

// Swaps in a replacement embedding matrix; with tied weights both the
// encoder lookups and the decoder logits change. Everything else is kept.
inline ModelState apply_to_model(const ModelState& model,
                                 const Eigen::MatrixXd& embeddings) {
    if (embeddings.rows() != model.embedding.rows() ||
        embeddings.cols() != model.embedding.cols())
        throw DataError("apply_to_model: embedding shape mismatch");
    ModelState out = model;
    out.embedding = embeddings;
    return out;
}

// Cosine-distance representational dissimilarity matrix over word rows.
inline Eigen::MatrixXd rdm(const Eigen::MatrixXd& embeddings,
                           const std::vector<TokenId>& words) {
    const std::size_t n = words.size();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            Eigen::VectorXd a = embeddings.row(words[i]);
            Eigen::VectorXd b = embeddings.row(words[j]);
            double dist = 1.0 - cosine(a, b);
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return d;
}

// Spearman rank correlation between the upper triangles of the two
// cosine-distance RDMs. Undefined when either RDM is constant.
inline std::optional<double> rsa(const Eigen::MatrixXd& emb_a,
                                 const Eigen::MatrixXd& emb_b,
                                 const std::vector<TokenId>& words) {
    if (words.size() < 3) throw DataError("rsa: need at least 3 words");
    Eigen::MatrixXd da = rdm(emb_a, words), db = rdm(emb_b, words);
    std::vector<double> ua, ub;
    for (std::size_t i = 0; i < words.size(); ++i) {
        for (std::size_t j = i + 1; j < words.size(); ++j) {
            ua.push_back(da(i, j));
            ub.push_back(db(i, j));
        }
    }
    return spearman(ua, ub);
}

struct InlpReportRow {
    int k = 0;
    double clf_acc = 0.0;
    double mean_abs_stsb = 0.0;
    double stsb_female_list = 0.0;  // mean signed bias over the female list
    double stsb_male_list = 0.0;
    double mean_abs_ie = 0.0;
    double ie_female_list = 0.0;
    double ie_male_list = 0.0;
    std::optional<double> rsa_to_original;
    double ppl_norm = 0.0;  // perplexity / k=0 perplexity
};

struct InlpReport {
    std::vector<InlpReportRow> rows;
    double base_perplexity = 0.0;
    bool stopped_early = false;
    std::string stop_reason;
};

// Occupation sub-lists used for the female/male asymmetry columns.
inline const std::vector<std::string> kFemaleList = {"receptionist", "nurse",
                                                     "librarian", "therapist"};
inline const std::vector<std::string> kMaleList = {"mechanic", "engineer",
                                                   "scientist", "architect"};

// Runs the INLP chain on one checkpoint and re-evaluates bias, RSA against
// the untouched embeddings and normalized perplexity for every k from 0 to
// k_max. The diagnostic sweep keeps projecting past the near-chance
// accuracy point (only a degenerate fit stops it); the accuracy rule
// applies when inlp() is used as a mitigation step. The RSA word set is
// the resolvable occupations plus the seed words.
inline InlpReport debias_sweep(const ModelState& model, const Vocabulary& vocab,
                               const ResolvedWordLists& words,
                               const TemplateSet& templates,
                               const std::vector<TokenId>& eval_ids, int k_max) {
    std::vector<TokenId> male_ids, female_ids;
    for (const auto& [m_id, f_id] : words.seed_pair_ids) {
        male_ids.push_back(m_id);
        female_ids.push_back(f_id);
    }
    InlpResult chain = inlp(model.embedding, male_ids, female_ids, k_max, 0.0);

    std::vector<TokenId> rsa_words = words.occupation_ids;
    rsa_words.insert(rsa_words.end(), male_ids.begin(), male_ids.end());
    rsa_words.insert(rsa_words.end(), female_ids.begin(), female_ids.end());

    InlpReport report;
    report.stopped_early = chain.stopped_early;
    report.stop_reason = chain.stop_reason;
    report.base_perplexity = perplexity(model, eval_ids);

    for (std::size_t k = 0; k < chain.embeddings.size(); ++k) {
        InlpReportRow row;
        row.k = static_cast<int>(k);
        row.clf_acc = k == 0 ? chain.initial_accuracy
                             : chain.steps[k - 1].classifier_accuracy;
        ModelState variant = apply_to_model(model, chain.embeddings[k]);

        GenderSubspace sub = fit_gender_subspace(chain.embeddings[k], male_ids, female_ids);
        std::vector<Eigen::VectorXd> s_man, s_woman;
        for (const auto& t : templates.templates) {
            s_man.push_back(sentence_embedding(variant, detail::template_ids(vocab, t, "man")));
            s_woman.push_back(
                sentence_embedding(variant, detail::template_ids(vocab, t, "woman")));
        }
        double abs_stsb = 0.0, abs_ie = 0.0;
        double stsb_f = 0.0, stsb_m = 0.0, ie_f = 0.0, ie_m = 0.0;
        int n_f = 0, n_m = 0;
        for (std::size_t i = 0; i < words.occupations.size(); ++i) {
            double stsb = 0.0;
            for (std::size_t t = 0; t < templates.templates.size(); ++t) {
                auto s_occ = sentence_embedding(
                    variant, detail::template_ids(vocab, templates.templates[t],
                                                  words.occupations[i]));
                stsb += cosine(s_occ, s_man[t]) - cosine(s_occ, s_woman[t]);
            }
            stsb /= static_cast<double>(templates.templates.size());
            double ie = sub.degenerate
                            ? 0.0
                            : ie_bias(sub, chain.embeddings[k].row(words.occupation_ids[i]));
            abs_stsb += std::abs(stsb);
            abs_ie += std::abs(ie);
            const std::string& occ = words.occupations[i];
            if (std::find(kFemaleList.begin(), kFemaleList.end(), occ) != kFemaleList.end()) {
                stsb_f += stsb;
                ie_f += ie;
                ++n_f;
            }
            if (std::find(kMaleList.begin(), kMaleList.end(), occ) != kMaleList.end()) {
                stsb_m += stsb;
                ie_m += ie;
                ++n_m;
            }
        }
        const double n_occ = static_cast<double>(words.occupations.size());
        row.mean_abs_stsb = n_occ > 0 ? abs_stsb / n_occ : 0.0;
        row.mean_abs_ie = n_occ > 0 ? abs_ie / n_occ : 0.0;
        row.stsb_female_list = n_f > 0 ? stsb_f / n_f : 0.0;
        row.stsb_male_list = n_m > 0 ? stsb_m / n_m : 0.0;
        row.ie_female_list = n_f > 0 ? ie_f / n_f : 0.0;
        row.ie_male_list = n_m > 0 ? ie_m / n_m : 0.0;
        row.rsa_to_original = rsa(model.embedding, chain.embeddings[k], rsa_words);
        row.ppl_norm = perplexity(variant, eval_ids) / report.base_perplexity;
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace bblm

#endif
