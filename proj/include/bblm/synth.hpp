#ifndef BBLM_SYNTH_HPP
#define BBLM_SYNTH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "bblm/errors.hpp"
#include "bblm/rng.hpp"
#include "bblm/wordlists.hpp"

namespace bblm {

// Planted-bias corpus: each occupation sentence draws a female-gendered
// subject word with probability rho and a male one otherwise. Gendered-pair
// sentences (fair coin) teach the pair vocabulary, filler sentences pad the
// corpus to a realistic vocabulary size.
struct OccupationPlan {
    std::string word;
    double rho = 0.5;  // female-association rate in [0, 1]
};

struct SynthSpec {
    std::vector<OccupationPlan> occupations;
    std::vector<GenderedPair> pairs;
    std::size_t target_tokens = 1'000'000;
    double occupation_weight = 0.45;
    double pair_weight = 0.35;  // remainder is filler
    int filler_types = 1800;
};

struct ManifestRow {
    std::string occupation;
    double planted_rho = 0.0;
    double realized_rate = 0.0;
    std::int64_t count = 0;  // sentences drawn for this occupation
};

struct SynthCorpus {
    std::vector<std::string> lines;  // one sentence per line
    std::vector<ManifestRow> manifest;
    std::size_t token_count = 0;  // includes one <eos> per line
};

namespace synthwords {

inline const std::array<const char*, 20> kVerbs = {
    "playing", "reading",  "cooking", "driving", "painting",
    "singing", "watching", "holding", "making",  "buying",
    "selling", "opening",  "closing", "carrying", "fixing",
    "cleaning", "teaching", "writing", "pushing", "pulling"};

inline const std::array<const char*, 20> kObjects = {
    "guitar", "book",   "meal",   "car",    "wall",  "song",  "movie",
    "box",    "cake",   "ticket", "door",   "window", "bag",  "table",
    "engine", "road",   "letter", "garden", "lesson", "room"};

// Gendered slot fillers; all of them are seed words so planted rates are
// measurable through seed co-occurrence.
struct GenderSlots {
    const char* pron;
    const char* poss;
    const char* refl;
    const char* name;
    std::array<const char*, 4> nouns;
};

inline const GenderSlots kMale = {"he", "his", "himself", "John",
                                  {"man", "boy", "father", "son"}};
inline const GenderSlots kFemale = {"she", "her", "herself", "Mary",
                                    {"woman", "girl", "mother", "daughter"}};

}  // namespace synthwords

inline std::string filler_word(std::uint64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%04llu", static_cast<unsigned long long>(i));
    return buf;
}

inline SynthCorpus generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
    for (const auto& occ : spec.occupations)
        if (!(occ.rho >= 0.0 && occ.rho <= 1.0))
            throw ConfigError("planted rate out of [0,1] for occupation " + occ.word);
    if (spec.occupation_weight < 0 || spec.pair_weight < 0 ||
        spec.occupation_weight + spec.pair_weight > 1.0)
        throw ConfigError("sentence-type weights must be nonnegative and sum to <= 1");
    if (spec.occupation_weight > 0 && spec.occupations.empty())
        throw ConfigError("occupation sentences requested but no occupations given");
    if (spec.pair_weight > 0 && spec.pairs.empty())
        throw ConfigError("pair sentences requested but no pairs given");
    if (spec.filler_types < 1) throw ConfigError("filler_types must be >= 1");

    using namespace synthwords;
    Rng rng(seed);
    SynthCorpus out;
    std::vector<std::int64_t> occ_total(spec.occupations.size(), 0);
    std::vector<std::int64_t> occ_female(spec.occupations.size(), 0);

    // Zipf-shaped filler frequencies: the full filler inventory shows up in
    // the vocabulary without flooding the gradients with maximum-entropy
    // noise tokens.
    std::vector<double> filler_cdf(spec.filler_types);
    {
        double total = 0.0;
        for (int k = 0; k < spec.filler_types; ++k) {
            total += 1.0 / static_cast<double>(k + 1);
            filler_cdf[k] = total;
        }
        for (double& v : filler_cdf) v /= total;
    }
    auto draw_filler = [&]() {
        double u = rng.uniform();
        auto it = std::lower_bound(filler_cdf.begin(), filler_cdf.end(), u);
        std::uint64_t k = static_cast<std::uint64_t>(it - filler_cdf.begin());
        return filler_word(std::min<std::uint64_t>(k, spec.filler_types - 1));
    };

    auto push = [&](const std::string& line) {
        std::size_t words = 1;  // implicit <eos>
        for (char c : line)
            if (c == ' ') ++words;
        out.token_count += words + 1;
        out.lines.push_back(line);
    };

    // Gendered sentence shapes. All gendered slots in a sentence share the
    // drawn gender, so the manifest rate stays identical to the
    // per-sentence seed co-occurrence rate. Several shapes place gendered
    // words after the object: the downstream similarity measure reads the
    // final hidden state, which only carries subject gender if the corpus
    // rewards carrying it across the clause.
    auto gendered_sentence = [&](const std::string& subject, const GenderSlots& g) {
        const char* vp = kVerbs[rng.uniform_int(kVerbs.size())];
        const char* obj = kObjects[rng.uniform_int(kObjects.size())];
        const char* vp2 = kVerbs[rng.uniform_int(kVerbs.size())];
        const char* obj2 = kObjects[rng.uniform_int(kObjects.size())];
        const char* noun = g.nouns[rng.uniform_int(g.nouns.size())];
        switch (rng.uniform_int(12)) {
            case 0:
                return "The " + subject + " said that " + g.pron + " was " + vp +
                       " the " + obj + " .";
            case 10:
                // Short-range agreement right after the subject.
                return "The " + subject + " , " + g.pron + " said , was " + vp +
                       " the " + obj + " .";
            case 11:
                return "The " + subject + " and " + g.poss + " " + noun + " were " +
                       vp + " the " + obj + " .";
            case 1:
                return "The " + subject + " was " + vp + " " + g.poss + " " + obj + " .";
            case 2:
                return std::string(g.name) + " said the " + subject + " was " + vp +
                       " the " + obj + " .";
            case 3:
                return "The " + subject + " saw the " + noun + " near the " + obj +
                       " .";
            case 4:
                return "A " + subject + " was " + vp + " the " + obj + " by " + g.refl +
                       " .";
            case 5:
                return "The " + subject + " was " + vp + " the " + obj + " and then " +
                       g.pron + " was " + vp2 + " the " + obj2 + " .";
            case 6:
                return "The " + subject + " was " + vp + " the " + obj + " because " +
                       g.pron + " liked the " + obj2 + " .";
            case 7:
                return "The " + subject + " said that " + g.pron + " was " + vp + " " +
                       g.poss + " " + obj + " .";
            case 8:
                return "The " + subject + " saw the " + noun + " and then " + g.pron +
                       " was " + vp + " the " + obj + " .";
            default:
                return "The " + subject + " was " + vp + " the " + obj + " and " +
                       g.pron + " gave " + g.poss + " " + obj2 + " to the " + noun +
                       " .";
        }
    };

    while (out.token_count < spec.target_tokens) {
        double kind = rng.uniform();
        if (kind < spec.occupation_weight) {
            std::size_t oi = rng.uniform_int(spec.occupations.size());
            const auto& occ = spec.occupations[oi];
            bool female = rng.bernoulli(occ.rho);
            occ_total[oi]++;
            if (female) occ_female[oi]++;
            push(gendered_sentence(occ.word, female ? kFemale : kMale));
        } else if (kind < spec.occupation_weight + spec.pair_weight) {
            const auto& pair = spec.pairs[rng.uniform_int(spec.pairs.size())];
            bool female = rng.bernoulli(0.5);
            push(gendered_sentence(female ? pair.female : pair.male,
                                   female ? kFemale : kMale));
        } else {
            const char* vp = kVerbs[rng.uniform_int(kVerbs.size())];
            const char* obj = kObjects[rng.uniform_int(kObjects.size())];
            std::string w1 = draw_filler();
            std::string w2 = draw_filler();
            switch (rng.uniform_int(3)) {
                case 0:
                    push("the " + w1 + " of the " + w2 + " was " + vp + " the " + obj + " .");
                    break;
                case 1:
                    push("a " + w1 + " and a " + w2 + " were near the " + obj + " .");
                    break;
                default:
                    push("the " + w1 + " was " + vp + " the " + obj + " .");
                    break;
            }
        }
    }

    for (std::size_t i = 0; i < spec.occupations.size(); ++i) {
        ManifestRow row;
        row.occupation = spec.occupations[i].word;
        row.planted_rho = spec.occupations[i].rho;
        row.count = occ_total[i];
        row.realized_rate =
            occ_total[i] == 0 ? 0.0
                              : static_cast<double>(occ_female[i]) /
                                    static_cast<double>(occ_total[i]);
        out.manifest.push_back(row);
    }
    return out;
}

}  // namespace bblm

#endif
