#pragma once

#include <string>
#include <vector>

#include "ptie/nn.hpp"

namespace ptie {

class KvFile;

// ---------------------------------------------------------------------------
// Desk-scale transformer with deep soft-prompt injection: per-layer trainable
// key/value prefixes plus an input-layer prompt embedding, over a backbone
// that stays frozen during prompt tuning. Encoder variant returns hidden
// states; decoder variant applies a causal mask over token positions (prefix
// positions stay visible to every query) and returns tied-embedding logits.

enum class Arch { encoder, decoder };

struct ModelConfig {
    Arch arch = Arch::encoder;
    int layers = 4;
    int d_model = 128;
    int heads = 4;
    int ff = 256;
    int vocab = 0;
    int max_seq = 256;
    int prompt_len = 16;

    void check() const;  // ConfigError with the offending field

    KvFile to_kv() const;
    static ModelConfig from_kv(const KvFile& kv);
};

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);  // ConfigError on unknown

// Backbone parameters. Layout (layer index ℓ in 0..L-1):
//   emb [V,d], pos [max_seq,d],
//   l<ℓ>.ln1.{g,b}, l<ℓ>.{wq,wk,wv,wo} [d,d], l<ℓ>.{bq,bk,bv,bo} [d],
//   l<ℓ>.ln2.{g,b}, l<ℓ>.w1 [d,ff], l<ℓ>.b1 [ff], l<ℓ>.w2 [ff,d], l<ℓ>.b2 [d],
//   lnf.{g,b}
// Weights drawn N(0, 0.02); biases and norm shifts zero; norm gains one.
ParamStore init_model(const ModelConfig& cfg, uint64_t seed);

// Closed-form scalar count for init_model's layout.
size_t backbone_param_count(const ModelConfig& cfg);

// One prompt entry per category key: an input embedding <key>.e [m,d] and
// per-layer prefixes <key>.l<ℓ>.pk / .pv [m,d], all trainable. The input
// embedding feeds the first layer through the frozen K/V projections
// (prefix_1 + e·Wk + bk), so it trains through the same loss as the rest.
struct SoftPromptBank {
    int prompt_len = 0;
    int layers = 0;
    int d_model = 0;
    std::vector<std::string> keys;  // sorted
    ParamStore params;

    bool has_key(const std::string& key) const;
    size_t per_key_count() const;  // m·d + L·2·m·d

    static std::string e_name(const std::string& key) { return key + ".e"; }
    static std::string pk_name(const std::string& key, int layer);
    static std::string pv_name(const std::string& key, int layer);
};

SoftPromptBank init_prompt_bank(const ModelConfig& cfg, const std::vector<std::string>& keys,
                                uint64_t seed);

// Tape forwards for training. `bank`/`key` select the prompt entry; pass
// bank = nullptr for the promptless backbone (bit-identical to prompt_len 0).
// Precondition: len(ids) ≥ 1 and len(ids) + m ≤ max_seq (SequenceLengthError).
// encoder_forward -> hidden states [n,d]; decoder_forward -> logits [n,V].
Tape::Id encoder_forward(Tape& t, TapeBind& backbone, const ModelConfig& cfg,
                         const std::vector<int>& ids, TapeBind* bank = nullptr,
                         const std::string& key = "");
Tape::Id decoder_forward(Tape& t, TapeBind& backbone, const ModelConfig& cfg,
                         const std::vector<int>& ids, TapeBind* bank = nullptr,
                         const std::string& key = "");

// Tapeless incremental decoder with per-layer K/V caching; logits match the
// tape forward position-for-position. Prefix K/V are computed once up front.
class DecodeSession {
public:
    DecodeSession(const ParamStore& backbone, const ModelConfig& cfg,
                  const SoftPromptBank* bank = nullptr, const std::string& key = "");

    // Appends one token and returns the next-token logits [vocab].
    std::vector<double> feed(int id);
    int length() const { return n_fed_; }

private:
    const ParamStore& backbone_;
    ModelConfig cfg_;
    int n_fed_ = 0;
    std::vector<Tensor> kcache_, vcache_;  // per layer, rows m + fed
};

// Greedy continuation: argmax (ties -> lowest id) appended until stop_id or
// max_new tokens. Returns generated ids only; stop_id is not included.
std::vector<int> greedy_decode(const ParamStore& backbone, const ModelConfig& cfg,
                               const std::vector<int>& input_ids, int max_new, int stop_id,
                               const SoftPromptBank* bank = nullptr,
                               const std::string& key = "");

}  // namespace ptie
