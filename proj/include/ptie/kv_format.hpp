#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ptie {

// Line-based key-value record format shared by schema, profile and run-config
// files:
//   - one record per line: `<key> <rest-of-line>`
//   - leading/trailing whitespace trimmed; blank lines and lines starting
//     with '#' are ignored
//   - keys may repeat (e.g. `trigger`, `lexicon`); order is preserved
struct KvRecord {
    std::string key;
    std::string value;  // rest of line, trimmed
};

class KvFile {
public:
    static KvFile parse(const std::string& content);
    static KvFile load(const std::string& path);

    void add(std::string key, std::string value);

    const std::vector<KvRecord>& records() const { return records_; }
    std::vector<std::string> values(const std::string& key) const;
    // First value for key, or fallback.
    std::string get(const std::string& key, const std::string& fallback = "") const;
    bool has(const std::string& key) const;

    std::string serialize() const;
    void save(const std::string& path) const;

private:
    std::vector<KvRecord> records_;
};

// Splits on runs of whitespace.
std::vector<std::string> split_fields(const std::string& s);

}  // namespace ptie
