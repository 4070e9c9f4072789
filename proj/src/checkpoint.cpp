#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ptie/common.hpp"
#include "ptie/nn.hpp"

namespace ptie {

namespace {

constexpr const char* kMagic = "PTIE1";

// Doubles are stored least-significant byte first regardless of host order.
void append_le(std::string& out, double x) {
    uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double read_le(const char* p) {
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
        bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    double x;
    std::memcpy(&x, &bits, sizeof x);
    return x;
}

}  // namespace

void ParamStore::add(const std::string& name, Tensor value, bool trainable) {
    if (name.empty()) throw UsageError("parameter name must not be empty");
    for (char c : name)
        if (std::isspace(static_cast<unsigned char>(c)))
            throw UsageError("parameter name contains whitespace: '" + name + "'");
    if (params_.count(name)) throw UsageError("parameter already registered: " + name);
    Param p;
    p.value = std::move(value);
    p.trainable = trainable;
    params_.emplace(name, std::move(p));
}

Param& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
}

const Param& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw UsageError("unknown parameter: " + name);
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, p] : params_) out.push_back(name);
    return out;  // std::map iterates sorted
}

std::vector<std::string> ParamStore::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [name, p] : params_)
        if (p.trainable) out.push_back(name);
    return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (auto it = params_.lower_bound(prefix); it != params_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        out.push_back(it->first);
    }
    return out;
}

void ParamStore::set_trainable(const std::string& name, bool flag) {
    Param& p = at(name);
    if (p.trainable == flag) return;
    p.trainable = flag;
    if (!flag) {  // frozen parameters carry no optimizer state
        p.m = Tensor();
        p.v = Tensor();
        p.t = 0;
    }
}

void ParamStore::freeze_prefix(const std::string& prefix) {
    for (const auto& name : names_with_prefix(prefix)) set_trainable(name, false);
}

size_t ParamStore::param_count() const {
    size_t n = 0;
    for (const auto& [name, p] : params_) n += p.value.numel();
    return n;
}

size_t ParamStore::trainable_count() const {
    size_t n = 0;
    for (const auto& [name, p] : params_)
        if (p.trainable) n += p.value.numel();
    return n;
}

std::string ParamStore::byte_image(const std::vector<std::string>& names) const {
    std::string out;
    for (const auto& name : names) {
        const Param& p = at(name);
        out += name;
        out.push_back('\0');
        for (double x : p.value.data) append_le(out, x);
    }
    return out;
}

void ParamStore::save(const std::string& path) const {
    std::ostringstream head;
    std::string blob;
    head << kMagic << "\n";
    head << "step " << step << "\n";
    for (const auto& [name, p] : params_) {
        head << "param " << name << ' ' << (p.trainable ? 1 : 0) << ' ' << p.value.shape.size();
        for (int d : p.value.shape) head << ' ' << d;
        head << ' ' << blob.size() << "\n";
        for (double x : p.value.data) append_le(blob, x);
    }
    head << "data " << blob.size() << "\n";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot write checkpoint: " + path);
    const std::string h = head.str();
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!f) throw IngestError("short write on checkpoint: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IngestError("cannot read checkpoint: " + path);

    auto fail = [&path](const std::string& why) -> IngestError {
        return IngestError("malformed checkpoint " + path + ": " + why);
    };

    std::string line;
    if (!std::getline(f, line) || line != kMagic) throw fail("bad magic");
    if (!std::getline(f, line)) throw fail("missing step line");
    std::istringstream step_in(line);
    std::string word;
    ParamStore store;
    if (!(step_in >> word >> store.step) || word != "step") throw fail("bad step line");

    struct Entry {
        std::string name;
        bool trainable;
        std::vector<int> shape;
        size_t offset;
    };
    std::vector<Entry> entries;
    size_t blob_size = 0;
    for (;;) {
        if (!std::getline(f, line)) throw fail("missing data line");
        std::istringstream in(line);
        if (!(in >> word)) throw fail("empty manifest line");
        if (word == "data") {
            if (!(in >> blob_size)) throw fail("bad data line");
            break;
        }
        if (word != "param") throw fail("unexpected manifest line: " + line);
        Entry e;
        int flag = 0, ndim = 0;
        if (!(in >> e.name >> flag >> ndim) || ndim < 0) throw fail("bad param line: " + line);
        e.trainable = flag != 0;
        e.shape.resize(ndim);
        for (int i = 0; i < ndim; ++i)
            if (!(in >> e.shape[i]) || e.shape[i] < 0) throw fail("bad shape: " + line);
        if (!(in >> e.offset)) throw fail("bad offset: " + line);
        entries.push_back(std::move(e));
    }

    std::string blob(blob_size, '\0');
    f.read(blob.data(), static_cast<std::streamsize>(blob_size));
    if (static_cast<size_t>(f.gcount()) != blob_size) throw fail("truncated data blob");

    for (const auto& e : entries) {
        const size_t n = Tensor::numel_of(e.shape);
        if (e.offset + n * 8 > blob_size) throw fail("parameter " + e.name + " overruns blob");
        Tensor t(e.shape);
        for (size_t i = 0; i < n; ++i) t.data[i] = read_le(blob.data() + e.offset + i * 8);
        store.add(e.name, std::move(t), e.trainable);
    }
    return store;
}

}  // namespace ptie
