#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace ptie {

struct Corpus;

// Reserved vocabulary ids. The two anchor tokens mark trigger spans for the
// second MRC stage.
enum ReservedToken : int {
    TOK_PAD = 0,
    TOK_UNK = 1,
    TOK_BOS = 2,
    TOK_EOS = 3,
    TOK_SEP = 4,
    TOK_ANCHOR_START = 5,  // "[S]"
    TOK_ANCHOR_END = 6,    // "[E]"
    RESERVED_COUNT = 7,
};

class Vocab {
public:
    Vocab();  // reserved tokens only

    int id(const std::string& token) const;  // TOK_UNK if absent
    const std::string& token(int id) const;
    bool contains(const std::string& token) const { return map_.count(token) > 0; }
    int size() const { return static_cast<int>(tokens_.size()); }

    // Appends a token; returns its id (existing id if already present).
    int add(const std::string& token);

    // Persisted as an ordered token list, one per line; id = line number.
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

    static const std::vector<std::string>& reserved_tokens();

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> map_;
};

struct CharSpan {
    int64_t start = 0;
    int64_t end = 0;
    bool operator==(const CharSpan& o) const { return start == o.start && end == o.end; }
};

struct TokenSpan {
    int first = 0;
    int last = 0;  // inclusive
    bool operator==(const TokenSpan& o) const { return first == o.first && last == o.last; }
};

// Offset-preserving tokenization: every token is an exact substring of the
// input and offsets are strictly increasing, so character spans and token
// spans convert both ways without loss.
struct TokenizedText {
    std::vector<std::string> tokens;
    std::vector<int> ids;  // empty when tokenized without a vocab
    std::vector<CharSpan> offsets;

    int size() const { return static_cast<int>(tokens.size()); }
};

// Splits on whitespace, then detaches leading/trailing ASCII punctuation
// characters as single-character tokens. Case is preserved. Offsets are in
// Unicode scalar values of the input.
TokenizedText tokenize(const std::string& text);
TokenizedText tokenize(const std::string& text, const Vocab& vocab);

// Counts tokens of corpus document texts (builder form so callers can fold
// extra token streams, e.g. generation targets, into the same vocabulary).
class VocabBuilder {
public:
    void count_text(const std::string& text);
    void count_token(const std::string& token, int64_t n = 1);
    // Tokens with frequency >= min_freq, ordered by (frequency desc, token
    // asc), appended after the reserved ids.
    Vocab build(int64_t min_freq = 1) const;

private:
    std::unordered_map<std::string, int64_t> counts_;
};

Vocab build_vocab(const Corpus& corpus, int64_t min_freq = 1);

enum class AlignDirection { ToTokens, ToChars };

// Minimal token interval covering a character span. Throws AlignmentError if
// the span covers no token (pure whitespace).
TokenSpan align_to_tokens(const TokenizedText& tt, CharSpan span);
// Character span of a token interval: (offsets[first].start, offsets[last].end).
CharSpan align_to_chars(const TokenizedText& tt, TokenSpan span);

}  // namespace ptie
