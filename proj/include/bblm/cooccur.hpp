#ifndef BBLM_COOCCUR_HPP
#define BBLM_COOCCUR_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/text.hpp"
#include "bblm/wordlists.hpp"

namespace bblm {

// Symmetric windowed co-occurrence counts between a target set and a
// context set. A pair of positions (i, j) with i < j <= i + window - 1
// contributes one count whenever one end is a target occurrence and the
// other a context occurrence; the pair is keyed (target, context) and a
// self-pair (x == y) is counted once, not twice. Windows never cross
// document boundaries but do cross sentence (<eos>) boundaries.
struct CooccurrenceTable {
    int window = 35;
    std::map<std::pair<TokenId, TokenId>, std::int64_t> pair_counts;
    std::unordered_map<TokenId, std::int64_t> totals;  // corpus occurrence counts

    std::int64_t pair_count(TokenId x, TokenId y) const {
        auto it = pair_counts.find({x, y});
        return it == pair_counts.end() ? 0 : it->second;
    }

    std::int64_t total(TokenId x) const {
        auto it = totals.find(x);
        return it == totals.end() ? 0 : it->second;
    }

    // Shard merge; associative and order-independent.
    void merge(const CooccurrenceTable& other) {
        for (const auto& [key, c] : other.pair_counts) pair_counts[key] += c;
        for (const auto& [id, c] : other.totals) totals[id] += c;
    }
};

inline CooccurrenceTable cooccurrence_counts(
    const std::vector<std::vector<TokenId>>& documents,
    const std::set<TokenId>& targets, const std::set<TokenId>& contexts,
    int window) {
    if (window < 1) throw ConfigError("co-occurrence window must be >= 1");
    CooccurrenceTable table;
    table.window = window;

    TokenId max_id = -1;
    for (const auto& doc : documents)
        for (TokenId id : doc) max_id = std::max(max_id, id);
    for (TokenId id : targets) max_id = std::max(max_id, id);
    for (TokenId id : contexts) max_id = std::max(max_id, id);
    std::vector<std::uint8_t> is_target(max_id + 1, 0), is_context(max_id + 1, 0);
    for (TokenId id : targets) is_target[id] = 1;
    for (TokenId id : contexts) is_context[id] = 1;

    for (const auto& doc : documents) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
            TokenId u = doc[i];
            table.totals[u]++;
            if (!is_target[u] && !is_context[u]) continue;
            std::size_t hi = std::min(doc.size(), i + static_cast<std::size_t>(window));
            for (std::size_t j = i + 1; j < hi; ++j) {
                TokenId v = doc[j];
                if (is_target[u] && is_context[v]) table.pair_counts[{u, v}]++;
                if (u != v && is_target[v] && is_context[u]) table.pair_counts[{v, u}]++;
            }
        }
    }
    return table;
}

inline CooccurrenceTable cooccurrence_counts(const std::vector<TokenId>& corpus,
                                             const std::set<TokenId>& targets,
                                             const std::set<TokenId>& contexts,
                                             int window) {
    return cooccurrence_counts(std::vector<std::vector<TokenId>>{corpus},
                               targets, contexts, window);
}

// PMI(x, Y) = log( c(x,Y) / (c(x) * c(Y)) ), natural log, unnormalized
// counts. Returns nullopt when the pooled co-occurrence count is zero; no
// smoothing is applied. Throws when c(x) or c(Y) is zero.
inline std::optional<double> pmi(const CooccurrenceTable& cooc, TokenId x,
                                 const std::set<TokenId>& contexts) {
    std::int64_t cx = cooc.total(x);
    if (cx <= 0) throw DataError("pmi: target word has zero corpus count");
    std::int64_t cy = 0;
    std::int64_t cxy = 0;
    for (TokenId y : contexts) {
        cy += cooc.total(y);
        cxy += cooc.pair_count(x, y);
    }
    if (cy <= 0) throw DataError("pmi: context set has zero corpus count");
    if (cxy == 0) return std::nullopt;
    return std::log(static_cast<double>(cxy) /
                    (static_cast<double>(cx) * static_cast<double>(cy)));
}

// Per-occupation PMI record against the female and male seed sets.
struct PmiRecord {
    std::string word;
    std::int64_t count = 0;  // corpus occurrences of the occupation
    double pmi_f = 0.0;
    double pmi_m = 0.0;
    double pmi_diff = 0.0;  // pmi_m - pmi_f, valid when both defined
    bool defined_f = false;
    bool defined_m = false;
};

using PmiTable = std::vector<PmiRecord>;

inline PmiTable pmi_table(const std::vector<std::vector<TokenId>>& documents,
                          const ResolvedWordLists& words, int window) {
    std::set<TokenId> targets(words.occupation_ids.begin(), words.occupation_ids.end());
    std::set<TokenId> female(words.seed_female_ids.begin(), words.seed_female_ids.end());
    std::set<TokenId> male(words.seed_male_ids.begin(), words.seed_male_ids.end());
    std::set<TokenId> contexts;
    contexts.insert(female.begin(), female.end());
    contexts.insert(male.begin(), male.end());

    CooccurrenceTable cooc = cooccurrence_counts(documents, targets, contexts, window);

    auto set_total = [&](const std::set<TokenId>& ids) {
        std::int64_t total = 0;
        for (TokenId id : ids) total += cooc.total(id);
        return total;
    };
    const bool female_present = set_total(female) > 0;
    const bool male_present = set_total(male) > 0;

    PmiTable table;
    for (std::size_t i = 0; i < words.occupations.size(); ++i) {
        PmiRecord rec;
        rec.word = words.occupations[i];
        TokenId id = words.occupation_ids[i];
        rec.count = cooc.total(id);
        if (rec.count > 0) {
            if (female_present) {
                if (auto f = pmi(cooc, id, female)) {
                    rec.pmi_f = *f;
                    rec.defined_f = true;
                }
            }
            if (male_present) {
                if (auto m = pmi(cooc, id, male)) {
                    rec.pmi_m = *m;
                    rec.defined_m = true;
                }
            }
            if (rec.defined_f && rec.defined_m) rec.pmi_diff = rec.pmi_m - rec.pmi_f;
        }
        table.push_back(rec);
    }
    return table;
}

}  // namespace bblm

#endif
