#include <catch2/catch_amalgamated.hpp>

#include "bblm/rng.hpp"
#include "bblm/text.hpp"

using namespace bblm;

TEST_CASE("tokenize splits on whitespace and marks line ends") {
    CHECK(tokenize("A man .") == std::vector<std::string>{"A", "man", ".", "<eos>"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("she she") == std::vector<std::string>{"she", "she", "<eos>"});
    CHECK(tokenize("a b\nc") ==
          std::vector<std::string>{"a", "b", "<eos>", "c", "<eos>"});
    CHECK(tokenize("  a \t b  ") == std::vector<std::string>{"a", "b", "<eos>"});
    CHECK(tokenize("\n\n").empty());
}

TEST_CASE("build_vocab keeps the most frequent tokens plus <unk>") {
    SECTION("frequency order") {
        auto v = Vocabulary::build({"a", "b", "a"}, 3);
        CHECK(v.size() == 3);
        CHECK(v.contains("a"));
        CHECK(v.contains("b"));
        CHECK(v.count(v.id("a")) == 2);
        CHECK(v.id("z") == v.unk_id());
    }
    SECTION("ties break by first occurrence") {
        auto v = Vocabulary::build({"a", "b", "c"}, 2);
        CHECK(v.size() == 2);
        CHECK(v.contains("a"));
        CHECK_FALSE(v.contains("b"));
        CHECK_FALSE(v.contains("c"));
        CHECK(v.count(v.unk_id()) == 2);
    }
    SECTION("no truncation below max") {
        std::vector<std::string> tokens;
        for (int i = 0; i < 10; ++i) tokens.push_back("t" + std::to_string(i));
        auto v = Vocabulary::build(tokens, 100);
        CHECK(v.size() == 11);
    }
    SECTION("empty stream is an error") {
        CHECK_THROWS_AS(Vocabulary::build({}, 10), DataError);
    }
    SECTION("max_size below 2 is an error") {
        CHECK_THROWS_AS(Vocabulary::build({"a"}, 1), ConfigError);
    }
}

TEST_CASE("vocabulary ids are dense and invertible") {
    auto v = Vocabulary::build({"c", "b", "b", "a", "a", "a"}, 10);
    for (TokenId id = 0; id < static_cast<TokenId>(v.size()); ++id)
        CHECK(v.id(v.token(id)) == id);
    CHECK(v.unk_id() < static_cast<TokenId>(v.size()));
}

TEST_CASE("encode/decode round-trips in-vocabulary text") {
    Rng rng(7);
    std::vector<std::string> types = {"a", "b", "c", "d", "<eos>"};
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> tokens;
        std::size_t len = 5 + rng.uniform_int(200);
        for (std::size_t i = 0; i < len; ++i)
            tokens.push_back(types[rng.uniform_int(types.size())]);
        auto v = Vocabulary::build(tokens, 50);
        CHECK(v.decode(v.encode(tokens)) == tokens);
    }
}

TEST_CASE("vocabulary save/load round-trips") {
    auto v = Vocabulary::build({"b", "a", "b", "c"}, 3);
    std::stringstream ss;
    v.save(ss);
    auto w = Vocabulary::load(ss);
    CHECK(w.size() == v.size());
    CHECK(w.unk_id() == v.unk_id());
    for (TokenId id = 0; id < static_cast<TokenId>(v.size()); ++id) {
        CHECK(w.token(id) == v.token(id));
        CHECK(w.count(id) == v.count(id));
    }
}

TEST_CASE("split_documents honors <doc> markers") {
    auto docs = split_documents("a b\n<doc>\nc d\ne\n<doc>\n");
    REQUIRE(docs.size() == 2);
    CHECK(docs[0] == std::vector<std::string>{"a", "b", "<eos>"});
    CHECK(docs[1] == std::vector<std::string>{"c", "d", "<eos>", "e", "<eos>"});
}
