#include "ptie/utf8.hpp"

#include <algorithm>
#include <stdexcept>

namespace ptie {

namespace {
inline bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }
}

TextIndex::TextIndex(const std::string& text) : text_(text) {
    for (unsigned char c : text) {
        if (c >= 0x80) {
            ascii_ = false;
            break;
        }
    }
    if (ascii_) {
        scalar_len_ = static_cast<int64_t>(text.size());
        return;
    }
    starts_.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        if (!is_continuation(static_cast<unsigned char>(text[i])))
            starts_.push_back(static_cast<uint32_t>(i));
    }
    scalar_len_ = static_cast<int64_t>(starts_.size());
}

size_t TextIndex::byte_of(int64_t s) const {
    if (s < 0 || s > scalar_len_) throw std::out_of_range("scalar offset out of range");
    if (ascii_) return static_cast<size_t>(s);
    if (s == scalar_len_) return text_.size();
    return starts_[static_cast<size_t>(s)];
}

int64_t TextIndex::scalar_of(size_t byte) const {
    if (ascii_) return static_cast<int64_t>(byte);
    if (byte == text_.size()) return scalar_len_;
    auto it = std::lower_bound(starts_.begin(), starts_.end(), static_cast<uint32_t>(byte));
    return static_cast<int64_t>(it - starts_.begin());
}

std::string TextIndex::slice(int64_t start, int64_t end) const {
    size_t b0 = byte_of(start);
    size_t b1 = byte_of(end);
    return text_.substr(b0, b1 - b0);
}

int64_t utf8_length(const std::string& s) {
    int64_t n = 0;
    for (unsigned char c : s)
        if (!is_continuation(c)) ++n;
    return n;
}

}  // namespace ptie
