#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>

#include "ptie/common.hpp"
#include "ptie/corpus.hpp"
#include "ptie/rng.hpp"
#include "ptie/synthgen.hpp"
#include "ptie/tokenizer.hpp"
#include "ptie/utf8.hpp"
#include "support/random_docs.hpp"

using namespace ptie;

TEST_CASE("tokenize: whitespace split plus punctuation detach") {
    TokenizedText tt = tokenize("Pt smokes 1 ppd.");
    CHECK(tt.tokens == std::vector<std::string>{"Pt", "smokes", "1", "ppd", "."});
    REQUIRE(tt.offsets.size() == 5);
    CHECK(tt.offsets[0] == CharSpan{0, 2});
    CHECK(tt.offsets[1] == CharSpan{3, 9});
    CHECK(tt.offsets[2] == CharSpan{10, 11});
    CHECK(tt.offsets[3] == CharSpan{12, 15});
    CHECK(tt.offsets[4] == CharSpan{15, 16});
}

TEST_CASE("tokenize: empty input, pure whitespace") {
    CHECK(tokenize("").size() == 0);
    CHECK(tokenize(" \n\t ").size() == 0);
}

TEST_CASE("tokenize: internal punctuation stays attached") {
    TokenizedText tt = tokenize("on-and-off (daily), e.g. 1.5");
    CHECK(tt.tokens == std::vector<std::string>{"on-and-off", "(", "daily", ")", ",",
                                                "e.g", ".", "1.5"});
}

TEST_CASE("tokenize: offsets are exact substrings, strictly increasing") {
    Rng rng(404);
    for (int i = 0; i < 1000; ++i) {
        std::string text = testsupport::random_text(rng, 0, 30);
        TokenizedText tt = tokenize(text);
        TextIndex ix(text);
        int64_t prev_end = 0;
        for (int t = 0; t < tt.size(); ++t) {
            CHECK(tt.offsets[t].start >= prev_end);
            CHECK(tt.offsets[t].start < tt.offsets[t].end);
            CHECK(ix.slice(tt.offsets[t].start, tt.offsets[t].end) == tt.tokens[t]);
            prev_end = tt.offsets[t].end;
        }
    }
}

TEST_CASE("tokenize: gap reconstruction reproduces the input (oracle)") {
    Rng rng(405);
    for (int i = 0; i < 1000; ++i) {
        std::string text = testsupport::random_text(rng, 0, 40);
        TokenizedText tt = tokenize(text);
        TextIndex ix(text);
        // Stitch tokens back together with the original inter-token gaps.
        std::string rebuilt;
        int64_t cursor = 0;
        for (int t = 0; t < tt.size(); ++t) {
            rebuilt += ix.slice(cursor, tt.offsets[t].start);
            rebuilt += tt.tokens[t];
            cursor = tt.offsets[t].end;
        }
        rebuilt += ix.slice(cursor, ix.scalar_length());
        REQUIRE(rebuilt == text);
    }
}

TEST_CASE("vocab: reserved tokens occupy the fixed low ids") {
    Vocab v;
    CHECK(v.size() == RESERVED_COUNT);
    CHECK(v.token(TOK_PAD) == "[PAD]");
    CHECK(v.token(TOK_UNK) == "[UNK]");
    CHECK(v.token(TOK_BOS) == "[BOS]");
    CHECK(v.token(TOK_EOS) == "[EOS]");
    CHECK(v.token(TOK_SEP) == "[SEP]");
    CHECK(v.token(TOK_ANCHOR_START) == "[S]");
    CHECK(v.token(TOK_ANCHOR_END) == "[E]");
    CHECK(v.id("[S]") == TOK_ANCHOR_START);
    CHECK(v.id("never-seen") == TOK_UNK);
}

TEST_CASE("vocab: build is ordered by frequency then lexicographically") {
    VocabBuilder b;
    b.count_text("b b b a a c");
    b.count_text("a");
    Vocab v = b.build(1);
    // a and b both occur 3 times; a wins the tie.
    CHECK(v.id("a") == RESERVED_COUNT + 0);
    CHECK(v.id("b") == RESERVED_COUNT + 1);
    CHECK(v.id("c") == RESERVED_COUNT + 2);
    Vocab pruned = b.build(2);
    CHECK(pruned.contains("a"));
    CHECK(pruned.contains("b"));
    CHECK(!pruned.contains("c"));
    CHECK(pruned.id("c") == TOK_UNK);
}

TEST_CASE("vocab: built from a corpus, deterministic, UNK for novel words") {
    Corpus c = generate_corpus(make_domain_pair(default_schema(), 0.0, 9).first,
                               default_schema(), GenConfig{9, 30, 1, 3, 0, 2});
    Vocab v1 = build_vocab(c, 1);
    Vocab v2 = build_vocab(c, 1);
    REQUIRE(v1.size() == v2.size());
    for (int i = 0; i < v1.size(); ++i) CHECK(v1.token(i) == v2.token(i));
    TokenizedText tt = tokenize("cigarettes zzz-novel", v1);
    REQUIRE(tt.ids.size() == 2);
    CHECK(tt.ids[0] != TOK_UNK);
    CHECK(tt.ids[1] == TOK_UNK);
}

TEST_CASE("vocab: empty corpus is a usage error") {
    Corpus empty;
    CHECK_THROWS_AS(build_vocab(empty, 1), UsageError);
}

TEST_CASE("vocab: line-list file round-trip") {
    VocabBuilder b;
    b.count_text("alpha beta gamma alpha");
    Vocab v = b.build(1);
    std::string path = "test_vocab_roundtrip.txt";
    v.save(path);
    Vocab back = Vocab::load(path);
    REQUIRE(back.size() == v.size());
    for (int i = 0; i < v.size(); ++i) CHECK(back.token(i) == v.token(i));
    std::remove(path.c_str());
}

TEST_CASE("align: char span to covering token interval and back") {
    TokenizedText tt = tokenize("Pt smokes 1 ppd.");
    // Exactly the second token.
    CHECK(align_to_tokens(tt, {3, 9}) == TokenSpan{1, 1});
    // Partial word coverage widens to the covering token.
    CHECK(align_to_tokens(tt, {4, 7}) == TokenSpan{1, 1});
    // Straddles tokens 1..3.
    CHECK(align_to_tokens(tt, {5, 13}) == TokenSpan{1, 3});
    CHECK(align_to_chars(tt, {1, 1}) == CharSpan{3, 9});
    CHECK(align_to_chars(tt, {1, 3}) == CharSpan{3, 15});
}

TEST_CASE("align: whitespace-only span cannot align") {
    TokenizedText tt = tokenize("a  b");
    CHECK_THROWS_AS(align_to_tokens(tt, {1, 2}), AlignmentError);
}

TEST_CASE("align: random span round-trip is containment-stable (property)") {
    Rng rng(406);
    for (int i = 0; i < 500; ++i) {
        std::string text = testsupport::random_text(rng, 1, 30);
        TokenizedText tt = tokenize(text);
        if (tt.size() == 0) continue;
        int first = static_cast<int>(rng.index(tt.tokens.size()));
        int last = first + static_cast<int>(rng.index(tt.tokens.size() - first));
        CharSpan chars = align_to_chars(tt, {first, last});
        // Token-aligned spans convert back to exactly the same interval.
        CHECK(align_to_tokens(tt, chars) == TokenSpan{first, last});
    }
}
