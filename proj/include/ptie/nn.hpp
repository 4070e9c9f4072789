#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ptie/tensor.hpp"

namespace ptie {

// ---------------------------------------------------------------------------
// Parameter store: named tensors with a trainable flag and per-parameter
// Adam state. Frozen parameters never allocate optimizer state and are
// expected to stay byte-identical across any number of training steps.

struct Param {
    Tensor value;
    bool trainable = true;
    Tensor m, v;     // Adam moments; allocated on first update, trainable only
    int64_t t = 0;   // per-parameter update count (drives bias correction)
};

class ParamStore {
public:
    // Names must be whitespace-free (they appear in the checkpoint manifest).
    void add(const std::string& name, Tensor value, bool trainable);
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;

    std::vector<std::string> names() const;            // sorted
    std::vector<std::string> trainable_names() const;  // sorted
    std::vector<std::string> names_with_prefix(const std::string& prefix) const;

    void set_trainable(const std::string& name, bool flag);  // freezing drops moments
    void freeze_prefix(const std::string& prefix);

    size_t param_count() const;      // total scalar values
    size_t trainable_count() const;

    // Little-endian byte image of the named parameters' values, for
    // frozen-immutability assertions.
    std::string byte_image(const std::vector<std::string>& names) const;

    // Checkpoint: "PTIE1" magic, text manifest (name, trainable flag, shape,
    // byte offset), then raw little-endian doubles. Values round-trip
    // bit-exactly; optimizer moments are not persisted.
    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

    int64_t step = 0;  // adam_step invocations

private:
    std::map<std::string, Param> params_;
};

// Bias-corrected Adam over the supplied gradients. Every gradient name must
// be a trainable parameter (frozen or unknown names are usage errors);
// trainable parameters absent from `grads` are untouched, so per-category
// training only advances the parameters it actually used.
void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// ---------------------------------------------------------------------------
// Reverse-mode autodiff over a recorded tape. Ops validate shapes up front
// (DimensionError naming both shapes) and use stabilized forms, so finite
// inputs never produce NaN/Inf. Backward walks the tape once in reverse;
// nodes that no trainable leaf feeds into are skipped entirely.

class Tape {
public:
    using Id = int;

    Id leaf(const Tensor& t, bool requires_grad);

    const Tensor& value(Id id) const;
    const Tensor& grad(Id id) const;  // UsageError if the node has none
    bool has_grad(Id id) const;

    Id matmul(Id a, Id b);     // [n,k]·[k,m]
    Id matmul_nt(Id a, Id b);  // [n,k]·[m,k]^T -> [n,m]
    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);        // elementwise
    Id add_bias(Id a, Id bias);  // [n,m] + [m], row broadcast
    Id scale(Id a, double s);
    Id reshape(Id a, std::vector<int> shape);
    Id concat_rows(Id a, Id b);
    Id slice_rows(Id a, int r0, int r1);
    Id gelu(Id a);
    Id sigmoid(Id a);
    Id layer_norm(Id x, Id gamma, Id beta);  // row-wise, eps 1e-5
    Id softmax_rows(Id a);
    Id embed(Id table, const std::vector<int>& ids);
    // Multi-head attention with an optional prefix: q is [n,d], k and v are
    // [n_prefix+n_ctx,d]. Every query sees all prefix positions; with
    // `causal`, query i additionally sees context positions 0..i (n_ctx must
    // equal n). Scores are scaled by 1/sqrt(d/n_heads).
    Id attention(Id q, Id k, Id v, int n_heads, bool causal, int n_prefix);
    Id outer_sum(Id a, Id b);  // [n] + [m] -> [n,m]: out[i][j] = a[i]+b[j]
    Id sum_all(Id a);          // scalar
    Id mean_all(Id a);
    // Mean over mask>0 rows of -log softmax(logits)[target]. Scalar.
    Id cross_entropy(Id logits, const std::vector<int>& targets,
                     const std::vector<double>& mask);
    // Mean over mask>0 entries of stabilized BCE-with-logits. Scalar.
    Id bce(Id logits, const Tensor& labels, const Tensor& mask);

    void backward(Id loss);  // UsageError unless loss is scalar

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        bool grad_alloc = false;
        std::function<void(Tape&, const Tensor&)> back;  // receives dL/dout
    };

    Tensor& grad_buf(Id id);  // lazily allocated accumulator
    Id push(Tensor value, bool requires_grad,
            std::function<void(Tape&, const Tensor&)> back);

    // Deque keeps value()/grad() references stable while ops keep recording.
    std::deque<Node> nodes_;
};

// Binds store parameters to tape leaves on demand (one leaf per name) and
// collects the trainable gradients after backward.
class TapeBind {
public:
    TapeBind(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

    Tape::Id operator[](const std::string& name);

    // Gradients of every bound trainable parameter that received one.
    std::map<std::string, Tensor> grads() const;

private:
    Tape& tape_;
    ParamStore& store_;
    std::map<std::string, Tape::Id> bound_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient audit: analytic gradients versus central
// differences (f(t+eps)-f(t-eps))/(2 eps) on randomly sampled trainable
// coordinates. The loss builder must read parameter values through the
// supplied TapeBind so perturbations are visible on rebuild.

struct GradCheckResult {
    double max_rel_err = 0.0;
    int n_checked = 0;
    std::string worst_param;
    int worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

using LossBuilder = std::function<Tape::Id(Tape&, TapeBind&)>;

GradCheckResult finite_diff_check(const LossBuilder& build, ParamStore& store, double eps,
                                  int n_coords, uint64_t seed);

}  // namespace ptie
