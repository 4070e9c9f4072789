#include "ptie/kv_format.hpp"

#include <fstream>
#include <sstream>

#include "ptie/common.hpp"

namespace ptie {

namespace {
std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
}  // namespace

std::vector<std::string> split_fields(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string f;
    while (is >> f) out.push_back(f);
    return out;
}

KvFile KvFile::parse(const std::string& content) {
    KvFile kv;
    std::istringstream is(content);
    std::string line;
    while (std::getline(is, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t sp = t.find_first_of(" \t");
        if (sp == std::string::npos) {
            kv.records_.push_back({t, ""});
        } else {
            kv.records_.push_back({t.substr(0, sp), trim(t.substr(sp + 1))});
        }
    }
    return kv;
}

KvFile KvFile::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void KvFile::add(std::string key, std::string value) {
    records_.push_back({std::move(key), std::move(value)});
}

std::vector<std::string> KvFile::values(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& r : records_)
        if (r.key == key) out.push_back(r.value);
    return out;
}

std::string KvFile::get(const std::string& key, const std::string& fallback) const {
    for (const auto& r : records_)
        if (r.key == key) return r.value;
    return fallback;
}

bool KvFile::has(const std::string& key) const {
    for (const auto& r : records_)
        if (r.key == key) return true;
    return false;
}

std::string KvFile::serialize() const {
    std::ostringstream ss;
    for (const auto& r : records_) {
        ss << r.key;
        if (!r.value.empty()) ss << ' ' << r.value;
        ss << '\n';
    }
    return ss.str();
}

void KvFile::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write file: " + path);
    out << serialize();
}

}  // namespace ptie
