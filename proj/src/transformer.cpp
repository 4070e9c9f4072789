#include "ptie/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ptie/common.hpp"
#include "ptie/kv_format.hpp"
#include "ptie/rng.hpp"

namespace ptie {

namespace {

constexpr double kInitSd = 0.02;

Tensor randn(std::vector<int> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.normal() * kInitSd;
    return t;
}

Tensor ones(int n) { return Tensor({n}, std::vector<double>(n, 1.0)); }

int parse_int_field(const KvFile& kv, const std::string& key, int fallback) {
    if (!kv.has(key)) return fallback;
    const std::string s = kv.get(key);
    try {
        size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("model descriptor: bad integer for '" + key + "': " + s);
    }
}

}  // namespace

std::string arch_name(Arch a) { return a == Arch::encoder ? "encoder" : "decoder"; }

Arch arch_from_name(const std::string& s) {
    if (s == "encoder") return Arch::encoder;
    if (s == "decoder") return Arch::decoder;
    throw ConfigError("unknown architecture '" + s + "' (want encoder or decoder)");
}

void ModelConfig::check() const {
    if (layers < 1) throw ConfigError("layers must be >= 1, got " + std::to_string(layers));
    if (d_model < 1) throw ConfigError("d_model must be >= 1, got " + std::to_string(d_model));
    if (heads < 1) throw ConfigError("heads must be >= 1, got " + std::to_string(heads));
    if (d_model % heads != 0)
        throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by heads " +
                          std::to_string(heads));
    if (ff < 1) throw ConfigError("ff must be >= 1, got " + std::to_string(ff));
    if (vocab < 1) throw ConfigError("vocab must be >= 1, got " + std::to_string(vocab));
    if (max_seq < 1) throw ConfigError("max_seq must be >= 1, got " + std::to_string(max_seq));
    if (prompt_len < 0)
        throw ConfigError("prompt_len must be >= 0, got " + std::to_string(prompt_len));
}

KvFile ModelConfig::to_kv() const {
    KvFile kv;
    kv.add("arch", arch_name(arch));
    kv.add("layers", std::to_string(layers));
    kv.add("d_model", std::to_string(d_model));
    kv.add("heads", std::to_string(heads));
    kv.add("ff", std::to_string(ff));
    kv.add("vocab", std::to_string(vocab));
    kv.add("max_seq", std::to_string(max_seq));
    kv.add("prompt_len", std::to_string(prompt_len));
    return kv;
}

ModelConfig ModelConfig::from_kv(const KvFile& kv) {
    ModelConfig cfg;
    if (kv.has("arch")) cfg.arch = arch_from_name(kv.get("arch"));
    cfg.layers = parse_int_field(kv, "layers", cfg.layers);
    cfg.d_model = parse_int_field(kv, "d_model", cfg.d_model);
    cfg.heads = parse_int_field(kv, "heads", cfg.heads);
    cfg.ff = parse_int_field(kv, "ff", cfg.ff);
    cfg.vocab = parse_int_field(kv, "vocab", cfg.vocab);
    cfg.max_seq = parse_int_field(kv, "max_seq", cfg.max_seq);
    cfg.prompt_len = parse_int_field(kv, "prompt_len", cfg.prompt_len);
    return cfg;
}

// ---------------------------------------------------------------------------
// Initialization

ParamStore init_model(const ModelConfig& cfg, uint64_t seed) {
    cfg.check();
    Rng rng(seed);
    const int d = cfg.d_model, f = cfg.ff;
    ParamStore store;
    store.add("emb", randn({cfg.vocab, d}, rng), true);
    store.add("pos", randn({cfg.max_seq, d}, rng), true);
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        store.add(p + "ln1.g", ones(d), true);
        store.add(p + "ln1.b", Tensor({d}), true);
        for (const char* w : {"wq", "wk", "wv", "wo"}) {
            store.add(p + w, randn({d, d}, rng), true);
            store.add(p + std::string("b") + (w + 1), Tensor({d}), true);
        }
        store.add(p + "ln2.g", ones(d), true);
        store.add(p + "ln2.b", Tensor({d}), true);
        store.add(p + "w1", randn({d, f}, rng), true);
        store.add(p + "b1", Tensor({f}), true);
        store.add(p + "w2", randn({f, d}, rng), true);
        store.add(p + "b2", Tensor({d}), true);
    }
    store.add("lnf.g", ones(d), true);
    store.add("lnf.b", Tensor({d}), true);
    return store;
}

size_t backbone_param_count(const ModelConfig& cfg) {
    const size_t d = cfg.d_model, f = cfg.ff;
    const size_t per_layer = 2 * d                    // ln1
                             + 4 * (d * d + d)        // q,k,v,o projections
                             + 2 * d                  // ln2
                             + (d * f + f)            // ff in
                             + (f * d + d);           // ff out
    return static_cast<size_t>(cfg.vocab) * d + static_cast<size_t>(cfg.max_seq) * d +
           static_cast<size_t>(cfg.layers) * per_layer + 2 * d;
}

std::string SoftPromptBank::pk_name(const std::string& key, int layer) {
    return key + ".l" + std::to_string(layer) + ".pk";
}

std::string SoftPromptBank::pv_name(const std::string& key, int layer) {
    return key + ".l" + std::to_string(layer) + ".pv";
}

bool SoftPromptBank::has_key(const std::string& key) const {
    return std::find(keys.begin(), keys.end(), key) != keys.end();
}

size_t SoftPromptBank::per_key_count() const {
    const size_t md = static_cast<size_t>(prompt_len) * d_model;
    return md + static_cast<size_t>(layers) * 2 * md;
}

SoftPromptBank init_prompt_bank(const ModelConfig& cfg, const std::vector<std::string>& keys,
                                uint64_t seed) {
    cfg.check();
    SoftPromptBank bank;
    bank.prompt_len = cfg.prompt_len;
    bank.layers = cfg.layers;
    bank.d_model = cfg.d_model;
    bank.keys = keys;
    std::sort(bank.keys.begin(), bank.keys.end());
    if (std::adjacent_find(bank.keys.begin(), bank.keys.end()) != bank.keys.end())
        throw UsageError("prompt bank keys must be unique");
    Rng rng(seed);
    const int m = cfg.prompt_len, d = cfg.d_model;
    for (const auto& key : bank.keys) {
        bank.params.add(SoftPromptBank::e_name(key), randn({m, d}, rng), true);
        for (int l = 0; l < cfg.layers; ++l) {
            bank.params.add(SoftPromptBank::pk_name(key, l), randn({m, d}, rng), true);
            bank.params.add(SoftPromptBank::pv_name(key, l), randn({m, d}, rng), true);
        }
    }
    return bank;
}

// ---------------------------------------------------------------------------
// Tape forward (both architectures)

namespace {

Tape::Id forward_impl(Tape& t, TapeBind& bb, const ModelConfig& cfg,
                      const std::vector<int>& ids, TapeBind* bank, const std::string& key) {
    cfg.check();
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw UsageError("transformer forward: empty input");
    const bool prompted = bank != nullptr && cfg.prompt_len > 0;
    const int m = prompted ? cfg.prompt_len : 0;
    if (n + m > cfg.max_seq)
        throw SequenceLengthError("sequence of " + std::to_string(n) + " tokens + " +
                                  std::to_string(m) + " prompt positions exceeds max_seq " +
                                  std::to_string(cfg.max_seq));
    const bool causal = cfg.arch == Arch::decoder;

    Tape::Id x = t.add(t.embed(bb["emb"], ids), t.slice_rows(bb["pos"], 0, n));
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        Tape::Id hn = t.layer_norm(x, bb[p + "ln1.g"], bb[p + "ln1.b"]);
        Tape::Id q = t.add_bias(t.matmul(hn, bb[p + "wq"]), bb[p + "bq"]);
        Tape::Id k = t.add_bias(t.matmul(hn, bb[p + "wk"]), bb[p + "bk"]);
        Tape::Id v = t.add_bias(t.matmul(hn, bb[p + "wv"]), bb[p + "bv"]);
        if (prompted) {
            Tape::Id pk = (*bank)[SoftPromptBank::pk_name(key, l)];
            Tape::Id pv = (*bank)[SoftPromptBank::pv_name(key, l)];
            if (l == 0) {
                // The input-layer prompt embedding rides into the first
                // layer through the frozen K/V projections.
                Tape::Id e = (*bank)[SoftPromptBank::e_name(key)];
                pk = t.add(pk, t.add_bias(t.matmul(e, bb[p + "wk"]), bb[p + "bk"]));
                pv = t.add(pv, t.add_bias(t.matmul(e, bb[p + "wv"]), bb[p + "bv"]));
            }
            k = t.concat_rows(pk, k);
            v = t.concat_rows(pv, v);
        }
        Tape::Id att = t.attention(q, k, v, cfg.heads, causal, m);
        x = t.add(x, t.add_bias(t.matmul(att, bb[p + "wo"]), bb[p + "bo"]));
        Tape::Id hn2 = t.layer_norm(x, bb[p + "ln2.g"], bb[p + "ln2.b"]);
        Tape::Id act = t.gelu(t.add_bias(t.matmul(hn2, bb[p + "w1"]), bb[p + "b1"]));
        x = t.add(x, t.add_bias(t.matmul(act, bb[p + "w2"]), bb[p + "b2"]));
    }
    x = t.layer_norm(x, bb["lnf.g"], bb["lnf.b"]);
    if (cfg.arch == Arch::decoder) x = t.matmul_nt(x, bb["emb"]);
    return x;
}

}  // namespace

Tape::Id encoder_forward(Tape& t, TapeBind& backbone, const ModelConfig& cfg,
                         const std::vector<int>& ids, TapeBind* bank, const std::string& key) {
    if (cfg.arch != Arch::encoder) throw UsageError("encoder_forward on a decoder config");
    return forward_impl(t, backbone, cfg, ids, bank, key);
}

Tape::Id decoder_forward(Tape& t, TapeBind& backbone, const ModelConfig& cfg,
                         const std::vector<int>& ids, TapeBind* bank, const std::string& key) {
    if (cfg.arch != Arch::decoder) throw UsageError("decoder_forward on an encoder config");
    return forward_impl(t, backbone, cfg, ids, bank, key);
}

// ---------------------------------------------------------------------------
// Tapeless incremental decoding. The row kernels below mirror the tape ops'
// accumulation order exactly, so cached decoding reproduces the tape forward
// to the last bit.

namespace {

// out[j] += sum_k x[k] W[k,j], then + b[j]; k ascends as in the tape matmul.
std::vector<double> linear_row(const std::vector<double>& x, const Tensor& w, const Tensor& b) {
    const int rows = w.shape[0], cols = w.shape[1];
    std::vector<double> out(cols, 0.0);
    for (int k = 0; k < rows; ++k) {
        const double xk = x[k];
        if (xk == 0.0) continue;
        const double* wp = w.data.data() + static_cast<size_t>(k) * cols;
        for (int j = 0; j < cols; ++j) out[j] += xk * wp[j];
    }
    for (int j = 0; j < cols; ++j) out[j] += b.data[j];
    return out;
}

std::vector<double> ln_row(const std::vector<double>& x, const Tensor& g, const Tensor& b) {
    const int d = static_cast<int>(x.size());
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= d;
    double var = 0.0;
    for (double v : x) var += (v - mu) * (v - mu);
    var /= d;
    const double is = 1.0 / std::sqrt(var + 1e-5);
    std::vector<double> out(d);
    for (int j = 0; j < d; ++j) out[j] = g.data[j] * ((x[j] - mu) * is) + b.data[j];
    return out;
}

void gelu_row(std::vector<double>& x) {
    for (double& v : x) v = v * (0.5 * (1.0 + std::erf(v * 0.7071067811865475)));
}

}  // namespace

DecodeSession::DecodeSession(const ParamStore& backbone, const ModelConfig& cfg,
                             const SoftPromptBank* bank, const std::string& key)
    : backbone_(backbone), cfg_(cfg) {
    cfg_.check();
    if (cfg_.arch != Arch::decoder) throw UsageError("DecodeSession needs a decoder config");
    const int d = cfg_.d_model;
    const bool prompted = bank != nullptr && cfg_.prompt_len > 0;
    const int m = prompted ? cfg_.prompt_len : 0;
    if (prompted) {
        if (!bank->has_key(key)) throw UsageError("prompt bank has no entry for '" + key + "'");
        if (bank->prompt_len != cfg_.prompt_len || bank->layers != cfg_.layers ||
            bank->d_model != d)
            throw ConfigError("prompt bank shape does not match model config");
    }
    cfg_.prompt_len = m;  // promptless session behaves as m = 0
    kcache_.reserve(cfg_.layers);
    vcache_.reserve(cfg_.layers);
    for (int l = 0; l < cfg_.layers; ++l) {
        Tensor kp({m, d}), vp({m, d});
        if (prompted) {
            kp = bank->params.at(SoftPromptBank::pk_name(key, l)).value;
            vp = bank->params.at(SoftPromptBank::pv_name(key, l)).value;
            if (l == 0) {
                const Tensor& e = bank->params.at(SoftPromptBank::e_name(key)).value;
                const std::string p = "l0.";
                for (int r = 0; r < m; ++r) {
                    std::vector<double> row(e.data.begin() + static_cast<size_t>(r) * d,
                                            e.data.begin() + static_cast<size_t>(r + 1) * d);
                    std::vector<double> pk =
                        linear_row(row, backbone_.at(p + "wk").value, backbone_.at(p + "bk").value);
                    std::vector<double> pv =
                        linear_row(row, backbone_.at(p + "wv").value, backbone_.at(p + "bv").value);
                    for (int j = 0; j < d; ++j) {
                        kp.at(r, j) += pk[j];
                        vp.at(r, j) += pv[j];
                    }
                }
            }
        }
        kcache_.push_back(std::move(kp));
        vcache_.push_back(std::move(vp));
    }
}

std::vector<double> DecodeSession::feed(int id) {
    const int d = cfg_.d_model, m = cfg_.prompt_len, h = cfg_.heads, dh = d / h;
    if (id < 0 || id >= cfg_.vocab)
        throw UsageError("decode: token id " + std::to_string(id) + " outside vocab " +
                         std::to_string(cfg_.vocab));
    if (m + n_fed_ + 1 > cfg_.max_seq)
        throw SequenceLengthError("decode past max_seq " + std::to_string(cfg_.max_seq));
    const Tensor& emb = backbone_.at("emb").value;
    const Tensor& pos = backbone_.at("pos").value;

    std::vector<double> x(d);
    for (int j = 0; j < d; ++j) x[j] = emb.at(id, j) + pos.at(n_fed_, j);

    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string p = "l" + std::to_string(l) + ".";
        std::vector<double> hn = ln_row(x, backbone_.at(p + "ln1.g").value,
                                        backbone_.at(p + "ln1.b").value);
        std::vector<double> q =
            linear_row(hn, backbone_.at(p + "wq").value, backbone_.at(p + "bq").value);
        std::vector<double> kn =
            linear_row(hn, backbone_.at(p + "wk").value, backbone_.at(p + "bk").value);
        std::vector<double> vn =
            linear_row(hn, backbone_.at(p + "wv").value, backbone_.at(p + "bv").value);
        Tensor& K = kcache_[l];
        Tensor& V = vcache_[l];
        K.data.insert(K.data.end(), kn.begin(), kn.end());
        V.data.insert(V.data.end(), vn.begin(), vn.end());
        K.shape[0] += 1;
        V.shape[0] += 1;

        const int ctx = m + n_fed_ + 1;
        std::vector<double> att(d, 0.0), row(ctx);
        for (int hh = 0; hh < h; ++hh) {
            const int off = hh * dh;
            double mx = -1e300;
            for (int j = 0; j < ctx; ++j) {
                double s = 0.0;
                const double* kp = K.data.data() + static_cast<size_t>(j) * d + off;
                for (int c = 0; c < dh; ++c) s += q[off + c] * kp[c];
                row[j] = s * inv_sqrt;
                mx = std::max(mx, row[j]);
            }
            double z = 0.0;
            for (int j = 0; j < ctx; ++j) {
                row[j] = std::exp(row[j] - mx);
                z += row[j];
            }
            for (int j = 0; j < ctx; ++j) {
                const double pj = row[j] / z;
                if (pj == 0.0) continue;
                const double* vp = V.data.data() + static_cast<size_t>(j) * d + off;
                for (int c = 0; c < dh; ++c) att[off + c] += pj * vp[c];
            }
        }
        std::vector<double> o =
            linear_row(att, backbone_.at(p + "wo").value, backbone_.at(p + "bo").value);
        for (int j = 0; j < d; ++j) x[j] += o[j];
        std::vector<double> hn2 = ln_row(x, backbone_.at(p + "ln2.g").value,
                                         backbone_.at(p + "ln2.b").value);
        std::vector<double> a =
            linear_row(hn2, backbone_.at(p + "w1").value, backbone_.at(p + "b1").value);
        gelu_row(a);
        std::vector<double> f =
            linear_row(a, backbone_.at(p + "w2").value, backbone_.at(p + "b2").value);
        for (int j = 0; j < d; ++j) x[j] += f[j];
    }
    x = ln_row(x, backbone_.at("lnf.g").value, backbone_.at("lnf.b").value);

    std::vector<double> logits(cfg_.vocab);
    for (int v = 0; v < cfg_.vocab; ++v) {
        const double* ep = emb.data.data() + static_cast<size_t>(v) * d;
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += x[j] * ep[j];
        logits[v] = s;
    }
    n_fed_ += 1;
    return logits;
}

std::vector<int> greedy_decode(const ParamStore& backbone, const ModelConfig& cfg,
                               const std::vector<int>& input_ids, int max_new, int stop_id,
                               const SoftPromptBank* bank, const std::string& key) {
    if (max_new < 0) throw UsageError("greedy_decode: max_new must be >= 0");
    if (input_ids.empty()) throw UsageError("greedy_decode: empty input");
    DecodeSession session(backbone, cfg, bank, key);
    std::vector<double> logits;
    for (int id : input_ids) logits = session.feed(id);

    std::vector<int> out;
    while (static_cast<int>(out.size()) < max_new) {
        int best = 0;
        for (int v = 1; v < cfg.vocab; ++v)
            if (logits[v] > logits[best]) best = v;  // ties keep the lowest id
        if (best == stop_id) break;
        out.push_back(best);
        if (static_cast<int>(out.size()) == max_new) break;
        logits = session.feed(best);
    }
    return out;
}

}  // namespace ptie
