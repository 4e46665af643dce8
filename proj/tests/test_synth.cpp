#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "bblm/cooccur.hpp"
#include "bblm/synth.hpp"
#include "bblm/text.hpp"

using namespace bblm;

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.occupations = {{"nurse", 0.9}, {"plumber", 0.1}, {"clerk", 0.5}};
    spec.pairs = {{"king", "queen"}, {"uncle", "aunt"}};
    spec.target_tokens = 20000;
    spec.filler_types = 50;
    return spec;
}

}  // namespace

TEST_CASE("generator is deterministic and hits the token budget") {
    auto spec = small_spec();
    auto a = generate_synthetic_corpus(spec, 42);
    auto b = generate_synthetic_corpus(spec, 42);
    CHECK(a.lines == b.lines);
    CHECK(a.token_count == b.token_count);
    CHECK(a.token_count >= spec.target_tokens);
    // Overshoot is bounded by one sentence.
    std::size_t last_len = 1;
    for (char c : a.lines.back())
        if (c == ' ') ++last_len;
    CHECK(a.token_count - spec.target_tokens <= last_len + 1);

    auto c = generate_synthetic_corpus(spec, 43);
    CHECK(a.lines != c.lines);
}

TEST_CASE("degenerate rates produce single-gender sentences") {
    SynthSpec spec = small_spec();
    spec.occupations = {{"nurse", 1.0}};
    spec.pair_weight = 0.0;
    spec.occupation_weight = 0.6;
    auto corpus = generate_synthetic_corpus(spec, 7);
    REQUIRE(corpus.manifest.size() == 1);
    CHECK(corpus.manifest[0].realized_rate == 1.0);
    // No male seed word may appear anywhere.
    std::set<std::string> male = {"he", "his", "himself", "John",
                                  "man", "boy", "father", "son"};
    for (const auto& line : corpus.lines)
        for (const auto& tok : tokenize(line + "\n"))
            CHECK_FALSE(male.count(tok));
}

TEST_CASE("invalid rates and weights are rejected") {
    SynthSpec spec = small_spec();
    spec.occupations[0].rho = 1.5;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec, 1), ConfigError);
    spec = small_spec();
    spec.occupation_weight = 0.9;
    spec.pair_weight = 0.4;
    CHECK_THROWS_AS(generate_synthetic_corpus(spec, 1), ConfigError);
}

TEST_CASE("realized rates track planted rates within 3 standard errors") {
    SynthSpec spec = small_spec();
    spec.target_tokens = 400000;
    auto corpus = generate_synthetic_corpus(spec, 11);
    for (const auto& row : corpus.manifest) {
        REQUIRE(row.count > 100);
        double se = std::sqrt(row.planted_rho * (1.0 - row.planted_rho) /
                              static_cast<double>(row.count));
        CHECK(std::abs(row.realized_rate - row.planted_rho) <= 3.0 * se + 1e-12);
    }
}

TEST_CASE("per-sentence seed co-occurrence equals the manifest rate") {
    SynthSpec spec = small_spec();
    spec.target_tokens = 60000;
    auto corpus = generate_synthetic_corpus(spec, 5);

    std::set<std::string> female_seeds = {"she", "her", "herself", "Mary",
                                          "woman", "girl", "mother", "daughter"};
    for (const auto& row : corpus.manifest) {
        std::int64_t with_female = 0, total = 0;
        for (const auto& line : corpus.lines) {
            auto toks = tokenize(line);
            bool has_occ = false, has_female = false;
            for (const auto& t : toks) {
                if (t == row.occupation) has_occ = true;
                if (female_seeds.count(t)) has_female = true;
            }
            if (has_occ) {
                ++total;
                if (has_female) ++with_female;
            }
        }
        REQUIRE(total == row.count);
        double rate = static_cast<double>(with_female) / static_cast<double>(total);
        CHECK(rate == Catch::Approx(row.realized_rate).margin(1e-12));
    }
}
