#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "bblm/text.hpp"
#include "bblm/wordlists.hpp"

using namespace bblm;

namespace {
const std::string kDataDir = BBLM_DATA_DIR;

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}
}  // namespace

TEST_CASE("shipped wordlists have the expected cardinalities") {
    auto lists = load_wordlists(kDataDir + "/wordlists");
    CHECK(lists.gendered_pairs.size() == 82);
    CHECK(lists.seed_male.size() == 9);
    CHECK(lists.seed_female.size() == 9);
    CHECK(lists.occupations.size() == 54);
}

TEST_CASE("shipped labour statistics parse with spot values") {
    auto stats = load_labour_stats(kDataDir + "/labour_stats.tsv");
    CHECK(stats.size() == 54);
    CHECK(stats.at("nurse") == 89.58);
    CHECK(stats.at("plumber") == 0.70);
    CHECK(stats.at("pathologist") == 97.50);
}

TEST_CASE("labour stats validation") {
    SECTION("out-of-range percentage") {
        auto p = write_temp("bblm_labour_range.tsv", "nurse\t120\n");
        CHECK_THROWS_AS(load_labour_stats(p.string()), DataError);
    }
    SECTION("malformed row") {
        auto p = write_temp("bblm_labour_bad.tsv", "nurse 89.58\n");
        CHECK_THROWS_AS(load_labour_stats(p.string()), DataError);
    }
    SECTION("duplicate occupation reports the line") {
        auto p = write_temp("bblm_labour_dup.tsv", "nurse\t10\nnurse\t20\n");
        try {
            load_labour_stats(p.string());
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find(":2") != std::string::npos);
        }
    }
    SECTION("trailing junk in the number") {
        auto p = write_temp("bblm_labour_junk.tsv", "nurse\t12.3abc\n");
        CHECK_THROWS_AS(load_labour_stats(p.string()), DataError);
    }
}

TEST_CASE("resolution reports missing tokens instead of dropping them") {
    auto lists = load_wordlists(kDataDir + "/wordlists");
    auto vocab = Vocabulary::build(
        tokenize("man woman he she nurse plumber John Mary his her himself "
                 "herself father mother son daughter male female boy girl"),
        1000);
    auto r = resolve(lists, vocab);
    CHECK(r.seed_male_ids.size() == 9);
    CHECK(r.seed_female_ids.size() == 9);
    CHECK(r.seed_pair_ids.size() == 9);
    CHECK(r.occupations == std::vector<std::string>{"nurse", "plumber"});
    // 52 missing occupations plus every unresolvable pair member.
    CHECK(r.missing.size() >= 52);
    CHECK(r.pair_ids.size() >= 8);
}

TEST_CASE("seed pairs must be a subset of the gendered pairs") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "bblm_wordlists_bad";
    fs::create_directories(dir);
    {
        std::ofstream(dir / "gendered_pairs.tsv") << "man\twoman\n";
        std::ofstream(dir / "seed_pairs.tsv") << "king\tqueen\n";
        std::ofstream(dir / "occupations.tsv") << "nurse\n";
    }
    CHECK_THROWS_AS(load_wordlists(dir.string()), DataError);
}

TEST_CASE("duplicate occupations are rejected") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "bblm_wordlists_dup";
    fs::create_directories(dir);
    {
        std::ofstream(dir / "gendered_pairs.tsv") << "man\twoman\n";
        std::ofstream(dir / "seed_pairs.tsv") << "man\twoman\n";
        std::ofstream(dir / "occupations.tsv") << "nurse\nnurse\n";
    }
    CHECK_THROWS_AS(load_wordlists(dir.string()), DataError);
}
