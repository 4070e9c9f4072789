#include "ptie/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "ptie/common.hpp"
#include "ptie/corpus.hpp"
#include "ptie/utf8.hpp"

namespace ptie {

// ---------------------------------------------------------------------------
// Vocab

const std::vector<std::string>& Vocab::reserved_tokens() {
    static const std::vector<std::string> r = {"[PAD]", "[UNK]", "[BOS]", "[EOS]",
                                               "[SEP]", "[S]",   "[E]"};
    return r;
}

Vocab::Vocab() {
    for (const auto& t : reserved_tokens()) add(t);
}

int Vocab::id(const std::string& token) const {
    auto it = map_.find(token);
    return it == map_.end() ? TOK_UNK : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw UsageError("token id out of range: " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
}

int Vocab::add(const std::string& token) {
    auto it = map_.find(token);
    if (it != map_.end()) return it->second;
    int id = size();
    tokens_.push_back(token);
    map_[token] = id;
    return id;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write file: " + path);
    for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file: " + path);
    Vocab v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        if (lineno < RESERVED_COUNT) {
            if (line != reserved_tokens()[static_cast<size_t>(lineno)])
                throw IngestError(path + ": reserved token mismatch at line " +
                                  std::to_string(lineno));
        } else {
            v.add(line);
        }
        ++lineno;
    }
    if (lineno < RESERVED_COUNT) throw IngestError(path + ": vocab file missing reserved tokens");
    return v;
}

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool ascii_punct(char32_t c) {
    return c < 128 && std::ispunct(static_cast<unsigned char>(c));
}

// Decodes scalar values with their scalar offsets; ASCII fast path not
// needed here since we walk bytes once either way.
struct Scalar {
    char32_t value;
    int64_t offset;  // scalar offset
    size_t byte;     // byte offset
    size_t nbytes;
};

std::vector<Scalar> decode(const std::string& text) {
    std::vector<Scalar> out;
    out.reserve(text.size());
    int64_t scalar = 0;
    size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        size_t len = 1;
        char32_t v = c;
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        if (len > 1) {
            v = c & (0xFF >> (len + 1));
            for (size_t k = 1; k < len && i + k < text.size(); ++k)
                v = (v << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
        }
        out.push_back({v, scalar, i, len});
        ++scalar;
        i += len;
    }
    return out;
}

bool is_space(char32_t c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

TokenizedText tokenize(const std::string& text) {
    TokenizedText tt;
    auto scalars = decode(text);
    size_t i = 0;
    const size_t n = scalars.size();

    auto push = [&](size_t from, size_t to) {  // [from, to) scalar indices
        size_t b0 = scalars[from].byte;
        size_t b1 = (to < n) ? scalars[to].byte : text.size();
        tt.tokens.push_back(text.substr(b0, b1 - b0));
        tt.offsets.push_back({scalars[from].offset, scalars[from].offset +
                                                        static_cast<int64_t>(to - from)});
    };

    while (i < n) {
        while (i < n && is_space(scalars[i].value)) ++i;
        if (i >= n) break;
        size_t j = i;
        while (j < n && !is_space(scalars[j].value)) ++j;
        // word is [i, j); detach punctuation from both ends
        size_t a = i, b = j;
        while (a < b && ascii_punct(scalars[a].value)) ++a;
        while (b > a && ascii_punct(scalars[b - 1].value)) --b;
        for (size_t k = i; k < a; ++k) push(k, k + 1);
        if (a < b) push(a, b);
        for (size_t k = b; k < j; ++k) push(k, k + 1);
        i = j;
    }
    return tt;
}

TokenizedText tokenize(const std::string& text, const Vocab& vocab) {
    TokenizedText tt = tokenize(text);
    tt.ids.reserve(tt.tokens.size());
    for (const auto& t : tt.tokens) tt.ids.push_back(vocab.id(t));
    return tt;
}

// ---------------------------------------------------------------------------
// Vocab building

void VocabBuilder::count_text(const std::string& text) {
    for (const auto& t : tokenize(text).tokens) counts_[t] += 1;
}

void VocabBuilder::count_token(const std::string& token, int64_t n) { counts_[token] += n; }

Vocab VocabBuilder::build(int64_t min_freq) const {
    std::vector<std::pair<std::string, int64_t>> items;
    for (const auto& [tok, freq] : counts_)
        if (freq >= min_freq) items.emplace_back(tok, freq);
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocab v;
    for (const auto& [tok, freq] : items) {
        (void)freq;
        v.add(tok);
    }
    return v;
}

Vocab build_vocab(const Corpus& corpus, int64_t min_freq) {
    if (corpus.documents.empty()) throw UsageError("build_vocab: corpus is empty");
    VocabBuilder b;
    for (const auto& d : corpus.documents) b.count_text(d.text);
    return b.build(min_freq);
}

// ---------------------------------------------------------------------------
// Alignment

TokenSpan align_to_tokens(const TokenizedText& tt, CharSpan span) {
    if (span.start >= span.end) throw AlignmentError("empty character span");
    int first = -1, last = -1;
    for (int i = 0; i < tt.size(); ++i) {
        const auto& o = tt.offsets[static_cast<size_t>(i)];
        if (o.end > span.start && o.start < span.end) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0)
        throw AlignmentError("character span [" + std::to_string(span.start) + "," +
                             std::to_string(span.end) + ") covers no token");
    return {first, last};
}

CharSpan align_to_chars(const TokenizedText& tt, TokenSpan span) {
    if (span.first < 0 || span.last >= tt.size() || span.first > span.last)
        throw AlignmentError("token span out of range");
    return {tt.offsets[static_cast<size_t>(span.first)].start,
            tt.offsets[static_cast<size_t>(span.last)].end};
}

}  // namespace ptie
