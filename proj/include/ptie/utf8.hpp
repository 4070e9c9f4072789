#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ptie {

// Maps between Unicode scalar offsets and byte offsets of a UTF-8 string.
// All span offsets in the data model are scalar offsets; std::string storage
// is UTF-8 bytes. Pure-ASCII text takes an identity fast path. Non-owning:
// the indexed string must outlive the index.
class TextIndex {
public:
    explicit TextIndex(const std::string& text);

    int64_t scalar_length() const { return scalar_len_; }
    // Byte offset of scalar position s; s == scalar_length() maps to size().
    size_t byte_of(int64_t s) const;
    // Scalar offset of a byte position that starts a scalar.
    int64_t scalar_of(size_t byte) const;
    // Substring [start, end) in scalar offsets.
    std::string slice(int64_t start, int64_t end) const;

private:
    const std::string& text_;
    bool ascii_ = true;
    int64_t scalar_len_ = 0;
    std::vector<uint32_t> starts_;  // byte offset per scalar (non-ASCII only)
};

// Scalar length of a UTF-8 string.
int64_t utf8_length(const std::string& s);

}  // namespace ptie
