#ifndef BBLM_WORDLISTS_HPP
#define BBLM_WORDLISTS_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/text.hpp"

namespace bblm {

struct GenderedPair {
    std::string male;
    std::string female;
};

// Gendered pair list, the 9+9 seed pairs used for the gender subspace and
// PMI statistics, and the occupation terms. Seed pairs must be a subset of
// the pair list.
struct WordLists {
    std::vector<GenderedPair> gendered_pairs;
    std::vector<std::string> seed_male;
    std::vector<std::string> seed_female;
    std::vector<std::string> occupations;
};

// occupation -> percentage of female workers, in [0, 100].
using LabourStats = std::map<std::string, double>;

namespace detail {

inline std::vector<std::pair<int, std::string>> data_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open wordlist file: " + path);
    std::vector<std::pair<int, std::string>> lines;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.emplace_back(lineno, line);
    }
    return lines;
}

inline std::vector<GenderedPair> load_pairs(const std::string& path) {
    std::vector<GenderedPair> pairs;
    for (const auto& [lineno, line] : data_lines(path)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected male<TAB>female, got: " + line);
        pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return pairs;
}

}  // namespace detail

// `dir` holds gendered_pairs.tsv, seed_pairs.tsv and occupations.tsv.
inline WordLists load_wordlists(const std::string& dir) {
    namespace fs = std::filesystem;
    WordLists w;
    w.gendered_pairs = detail::load_pairs((fs::path(dir) / "gendered_pairs.tsv").string());
    auto seeds = detail::load_pairs((fs::path(dir) / "seed_pairs.tsv").string());
    std::set<std::pair<std::string, std::string>> pair_set;
    for (const auto& p : w.gendered_pairs) pair_set.insert({p.male, p.female});
    for (const auto& p : seeds) {
        if (!pair_set.count({p.male, p.female}))
            throw DataError("seed pair not present in gendered pair list: " +
                            p.male + "/" + p.female);
        w.seed_male.push_back(p.male);
        w.seed_female.push_back(p.female);
    }
    std::string occ_path = (fs::path(dir) / "occupations.tsv").string();
    std::set<std::string> seen;
    for (const auto& [lineno, line] : detail::data_lines(occ_path)) {
        if (line.find('\t') != std::string::npos)
            throw DataError(occ_path + ":" + std::to_string(lineno) +
                            ": expected a single token, got: " + line);
        if (!seen.insert(line).second)
            throw DataError(occ_path + ":" + std::to_string(lineno) +
                            ": duplicate occupation: " + line);
        w.occupations.push_back(line);
    }
    return w;
}

inline LabourStats load_labour_stats(const std::string& path) {
    LabourStats stats;
    for (const auto& [lineno, line] : detail::data_lines(path)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": expected occupation<TAB>percent_female");
        std::string occ = line.substr(0, tab);
        double pct = 0.0;
        try {
            std::size_t used = 0;
            pct = std::stod(line.substr(tab + 1), &used);
            if (used != line.size() - tab - 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": malformed percentage: " + line.substr(tab + 1));
        }
        if (pct < 0.0 || pct > 100.0)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": percentage out of [0,100]: " + line.substr(tab + 1));
        if (stats.count(occ))
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": duplicate occupation: " + occ);
        stats[occ] = pct;
    }
    return stats;
}

// Wordlists resolved against a vocabulary. Tokens that fail to resolve are
// reported, never dropped silently; a pair is usable only if both members
// resolve.
struct ResolvedWordLists {
    std::vector<std::pair<TokenId, TokenId>> pair_ids;  // (male, female)
    std::vector<GenderedPair> pairs;                    // aligned with pair_ids
    std::vector<TokenId> seed_male_ids;    // independently resolvable seeds
    std::vector<TokenId> seed_female_ids;  // (used as PMI context sets)
    // Seed pairs with both members resolvable, aligned; the gender-subspace
    // classifier trains on these.
    std::vector<std::pair<TokenId, TokenId>> seed_pair_ids;
    std::vector<std::string> occupations;  // resolvable subset, input order
    std::vector<TokenId> occupation_ids;
    std::vector<std::string> missing;  // every unresolvable token, input order
};

inline ResolvedWordLists resolve(const WordLists& w, const Vocabulary& vocab) {
    ResolvedWordLists r;
    for (const auto& p : w.gendered_pairs) {
        bool m = vocab.contains(p.male), f = vocab.contains(p.female);
        if (m && f) {
            r.pair_ids.emplace_back(vocab.id(p.male), vocab.id(p.female));
            r.pairs.push_back(p);
        } else {
            if (!m) r.missing.push_back(p.male);
            if (!f) r.missing.push_back(p.female);
        }
    }
    for (const auto& t : w.seed_male) {
        if (vocab.contains(t)) r.seed_male_ids.push_back(vocab.id(t));
        else r.missing.push_back(t);
    }
    for (const auto& t : w.seed_female) {
        if (vocab.contains(t)) r.seed_female_ids.push_back(vocab.id(t));
        else r.missing.push_back(t);
    }
    for (std::size_t i = 0; i < w.seed_male.size() && i < w.seed_female.size(); ++i) {
        if (vocab.contains(w.seed_male[i]) && vocab.contains(w.seed_female[i]))
            r.seed_pair_ids.emplace_back(vocab.id(w.seed_male[i]),
                                         vocab.id(w.seed_female[i]));
    }
    for (const auto& t : w.occupations) {
        if (vocab.contains(t)) {
            r.occupations.push_back(t);
            r.occupation_ids.push_back(vocab.id(t));
        } else {
            r.missing.push_back(t);
        }
    }
    return r;
}

}  // namespace bblm

#endif
