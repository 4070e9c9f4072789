#include "ptie/nn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ptie/common.hpp"
#include "ptie/rng.hpp"

namespace ptie {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                         b.shape_str());
}

// Matmul kernels, all accumulating (targets are pre-zeroed). Loop orders keep
// the k-summation ascending for every output cell, so results match the
// naive triple loop bit-for-bit while staying cache-friendly.

// C[n,m] += A[n,k] B[k,m]
void mm_nn(double* C, const double* A, const double* B, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * m;
        for (int kk = 0; kk < k; ++kk) {
            const double aik = a[kk];
            if (aik == 0.0) continue;
            const double* b = B + static_cast<size_t>(kk) * m;
            for (int j = 0; j < m; ++j) c[j] += aik * b[j];
        }
    }
}

// C[n,m] += A[n,k] B[m,k]^T
void mm_nt(double* C, const double* A, const double* B, int n, int k, int m) {
    for (int i = 0; i < n; ++i) {
        const double* a = A + static_cast<size_t>(i) * k;
        double* c = C + static_cast<size_t>(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* b = B + static_cast<size_t>(j) * k;
            double s = 0.0;
            for (int kk = 0; kk < k; ++kk) s += a[kk] * b[kk];
            c[j] += s;
        }
    }
}

// C[n,m] += A[k,n]^T B[k,m]
void mm_tn(double* C, const double* A, const double* B, int n, int k, int m) {
    for (int kk = 0; kk < k; ++kk) {
        const double* a = A + static_cast<size_t>(kk) * n;
        const double* b = B + static_cast<size_t>(kk) * m;
        for (int i = 0; i < n; ++i) {
            const double aki = a[i];
            if (aki == 0.0) continue;
            double* c = C + static_cast<size_t>(i) * m;
            for (int j = 0; j < m; ++j) c[j] += aki * b[j];
        }
    }
}

double stable_bce(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

double norm_cdf(double x) { return 0.5 * (1.0 + std::erf(x * 0.7071067811865475)); }
double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014327; }

}  // namespace

// ---------------------------------------------------------------------------
// Tape plumbing

Tape::Id Tape::push(Tensor value, bool requires_grad,
                    std::function<void(Tape&, const Tensor&)> back) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::leaf(const Tensor& t, bool requires_grad) {
    return push(t, requires_grad, nullptr);
}

const Tensor& Tape::value(Id id) const { return nodes_.at(id).value; }

bool Tape::has_grad(Id id) const { return nodes_.at(id).grad_alloc; }

const Tensor& Tape::grad(Id id) const {
    const Node& n = nodes_.at(id);
    if (!n.grad_alloc) throw UsageError("node has no gradient (frozen or unreached)");
    return n.grad;
}

Tensor& Tape::grad_buf(Id id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
        n.grad = Tensor(n.value.shape);
        n.grad_alloc = true;
    }
    return n.grad;
}

void Tape::backward(Id loss) {
    const Node& ln = nodes_.at(loss);
    if (ln.value.numel() != 1) throw UsageError("backward requires a scalar loss node");
    if (!ln.requires_grad) return;  // nothing trainable feeds the loss
    grad_buf(loss).data[0] = 1.0;
    for (Id id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad_alloc && n.back) n.back(*this, n.grad);
    }
}

// ---------------------------------------------------------------------------
// Primitives

Tape::Id Tape::matmul(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0])
        shape_error("matmul", A, B);
    const int n = A.shape[0], k = A.shape[1], m = B.shape[1];
    Tensor C({n, m});
    mm_nn(C.data.data(), A.data.data(), B.data.data(), n, k, m);
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b, n, k, m](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad)  // dA += dC B^T
            mm_nt(t.grad_buf(a).data.data(), g.data.data(), t.value(b).data.data(), n, m, k);
        if (t.nodes_[b].requires_grad)  // dB += A^T dC
            mm_tn(t.grad_buf(b).data.data(), t.value(a).data.data(), g.data.data(), k, n, m);
    });
}

Tape::Id Tape::matmul_nt(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[1])
        shape_error("matmul_nt", A, B);
    const int n = A.shape[0], k = A.shape[1], m = B.shape[0];
    Tensor C({n, m});
    mm_nt(C.data.data(), A.data.data(), B.data.data(), n, k, m);
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b, n, k, m](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad)  // dA += dC B
            mm_nn(t.grad_buf(a).data.data(), g.data.data(), t.value(b).data.data(), n, m, k);
        if (t.nodes_[b].requires_grad)  // dB += dC^T A
            mm_tn(t.grad_buf(b).data.data(), g.data.data(), t.value(a).data.data(), m, n, k);
    });
}

Tape::Id Tape::add(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("add", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.numel(); ++i) C.data[i] += B.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
        }
        if (t.nodes_[b].requires_grad) {
            Tensor& db = t.grad_buf(b);
            for (size_t i = 0; i < g.numel(); ++i) db.data[i] += g.data[i];
        }
    });
}

Tape::Id Tape::sub(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("sub", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.numel(); ++i) C.data[i] -= B.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
        }
        if (t.nodes_[b].requires_grad) {
            Tensor& db = t.grad_buf(b);
            for (size_t i = 0; i < g.numel(); ++i) db.data[i] -= g.data[i];
        }
    });
}

Tape::Id Tape::mul(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("mul", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.numel(); ++i) C.data[i] *= B.data[i];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            const Tensor& B2 = t.value(b);
            for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i] * B2.data[i];
        }
        if (t.nodes_[b].requires_grad) {
            Tensor& db = t.grad_buf(b);
            const Tensor& A2 = t.value(a);
            for (size_t i = 0; i < g.numel(); ++i) db.data[i] += g.data[i] * A2.data[i];
        }
    });
}

Tape::Id Tape::add_bias(Id a, Id bias) {
    const Tensor& A = value(a);
    const Tensor& B = value(bias);
    if (A.shape.size() != 2 || B.numel() != static_cast<size_t>(A.shape[1]))
        shape_error("add_bias", A, B);
    const int n = A.shape[0], m = A.shape[1];
    Tensor C = A;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) C.at(i, j) += B.data[j];
    bool rg = nodes_[a].requires_grad || nodes_[bias].requires_grad;
    return push(std::move(C), rg, [a, bias, n, m](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
        }
        if (t.nodes_[bias].requires_grad) {
            Tensor& db = t.grad_buf(bias);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) db.data[j] += g.at(i, j);
        }
    });
}

Tape::Id Tape::scale(Id a, double s) {
    Tensor C = value(a);
    for (double& v : C.data) v *= s;
    return push(std::move(C), nodes_[a].requires_grad, [a, s](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        for (size_t i = 0; i < g.numel(); ++i) da.data[i] += s * g.data[i];
    });
}

Tape::Id Tape::reshape(Id a, std::vector<int> shape) {
    const Tensor& A = value(a);
    if (Tensor::numel_of(shape) != A.numel())
        throw DimensionError("reshape: " + A.shape_str() + " to " + ptie::shape_str(shape) +
                             " changes element count");
    Tensor C(std::move(shape), A.data);
    return push(std::move(C), nodes_[a].requires_grad, [a](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        for (size_t i = 0; i < g.numel(); ++i) da.data[i] += g.data[i];
    });
}

Tape::Id Tape::concat_rows(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[1])
        shape_error("concat_rows", A, B);
    Tensor C({A.shape[0] + B.shape[0], A.shape[1]});
    std::copy(A.data.begin(), A.data.end(), C.data.begin());
    std::copy(B.data.begin(), B.data.end(), C.data.begin() + A.numel());
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    size_t na = A.numel();
    return push(std::move(C), rg, [a, b, na](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            for (size_t i = 0; i < na; ++i) da.data[i] += g.data[i];
        }
        if (t.nodes_[b].requires_grad) {
            Tensor& db = t.grad_buf(b);
            for (size_t i = na; i < g.numel(); ++i) db.data[i - na] += g.data[i];
        }
    });
}

Tape::Id Tape::slice_rows(Id a, int r0, int r1) {
    const Tensor& A = value(a);
    if (A.shape.size() != 2 || r0 < 0 || r1 < r0 || r1 > A.shape[0])
        throw DimensionError("slice_rows: rows [" + std::to_string(r0) + "," +
                             std::to_string(r1) + ") of " + A.shape_str());
    const int m = A.shape[1];
    Tensor C({r1 - r0, m});
    std::copy(A.data.begin() + static_cast<size_t>(r0) * m,
              A.data.begin() + static_cast<size_t>(r1) * m, C.data.begin());
    return push(std::move(C), nodes_[a].requires_grad, [a, r0, m](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        for (size_t i = 0; i < g.numel(); ++i)
            da.data[static_cast<size_t>(r0) * m + i] += g.data[i];
    });
}

Tape::Id Tape::gelu(Id a) {
    const Tensor& A = value(a);
    Tensor C = A;
    for (double& v : C.data) v = v * norm_cdf(v);
    return push(std::move(C), nodes_[a].requires_grad, [a](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        const Tensor& A2 = t.value(a);
        for (size_t i = 0; i < g.numel(); ++i) {
            double x = A2.data[i];
            da.data[i] += g.data[i] * (norm_cdf(x) + x * norm_pdf(x));
        }
    });
}

Tape::Id Tape::sigmoid(Id a) {
    const Tensor& A = value(a);
    Tensor C = A;
    for (double& v : C.data) v = 1.0 / (1.0 + std::exp(-v));
    Id out = push(C, nodes_[a].requires_grad, nullptr);
    nodes_[out].back = [a, out](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        const Tensor& Y = t.value(out);
        for (size_t i = 0; i < g.numel(); ++i)
            da.data[i] += g.data[i] * Y.data[i] * (1.0 - Y.data[i]);
    };
    return out;
}

Tape::Id Tape::layer_norm(Id x, Id gamma, Id beta) {
    const Tensor& X = value(x);
    const Tensor& G = value(gamma);
    const Tensor& B = value(beta);
    if (X.shape.size() != 2) throw DimensionError("layer_norm: input must be 2-D, got " +
                                                  X.shape_str());
    const int n = X.shape[0], d = X.shape[1];
    if (G.numel() != static_cast<size_t>(d)) shape_error("layer_norm", X, G);
    if (B.numel() != static_cast<size_t>(d)) shape_error("layer_norm", X, B);
    const double eps = 1e-5;

    auto xhat = std::make_shared<Tensor>(Tensor({n, d}));
    auto inv_std = std::make_shared<std::vector<double>>(n);
    Tensor C({n, d});
    for (int i = 0; i < n; ++i) {
        double mu = 0.0;
        for (int j = 0; j < d; ++j) mu += X.at(i, j);
        mu /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            double c = X.at(i, j) - mu;
            var += c * c;
        }
        var /= d;
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (int j = 0; j < d; ++j) {
            double h = (X.at(i, j) - mu) * is;
            xhat->at(i, j) = h;
            C.at(i, j) = G.data[j] * h + B.data[j];
        }
    }
    bool rg = nodes_[x].requires_grad || nodes_[gamma].requires_grad ||
              nodes_[beta].requires_grad;
    return push(std::move(C), rg,
                [x, gamma, beta, n, d, xhat, inv_std](Tape& t, const Tensor& g) {
                    if (t.nodes_[gamma].requires_grad) {
                        Tensor& dg = t.grad_buf(gamma);
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < d; ++j) dg.data[j] += g.at(i, j) * xhat->at(i, j);
                    }
                    if (t.nodes_[beta].requires_grad) {
                        Tensor& db = t.grad_buf(beta);
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < d; ++j) db.data[j] += g.at(i, j);
                    }
                    if (t.nodes_[x].requires_grad) {
                        Tensor& dx = t.grad_buf(x);
                        const Tensor& G2 = t.value(gamma);
                        for (int i = 0; i < n; ++i) {
                            double mean_dh = 0.0, mean_dh_xhat = 0.0;
                            for (int j = 0; j < d; ++j) {
                                double dh = g.at(i, j) * G2.data[j];
                                mean_dh += dh;
                                mean_dh_xhat += dh * xhat->at(i, j);
                            }
                            mean_dh /= d;
                            mean_dh_xhat /= d;
                            for (int j = 0; j < d; ++j) {
                                double dh = g.at(i, j) * G2.data[j];
                                dx.at(i, j) += (*inv_std)[i] *
                                               (dh - mean_dh - xhat->at(i, j) * mean_dh_xhat);
                            }
                        }
                    }
                });
}

Tape::Id Tape::softmax_rows(Id a) {
    const Tensor& A = value(a);
    if (A.shape.size() != 2)
        throw DimensionError("softmax_rows: input must be 2-D, got " + A.shape_str());
    const int n = A.shape[0], m = A.shape[1];
    Tensor C({n, m});
    for (int i = 0; i < n; ++i) {
        double mx = A.at(i, 0);
        for (int j = 1; j < m; ++j) mx = std::max(mx, A.at(i, j));
        double z = 0.0;
        for (int j = 0; j < m; ++j) {
            double e = std::exp(A.at(i, j) - mx);
            C.at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < m; ++j) C.at(i, j) /= z;
    }
    Id out = push(std::move(C), nodes_[a].requires_grad, nullptr);
    nodes_[out].back = [a, out, n, m](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        const Tensor& P = t.value(out);
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int j = 0; j < m; ++j) dot += P.at(i, j) * g.at(i, j);
            for (int j = 0; j < m; ++j) da.at(i, j) += P.at(i, j) * (g.at(i, j) - dot);
        }
    };
    return out;
}

Tape::Id Tape::embed(Id table, const std::vector<int>& ids) {
    const Tensor& T = value(table);
    if (T.shape.size() != 2)
        throw DimensionError("embed: table must be 2-D, got " + T.shape_str());
    const int V = T.shape[0], d = T.shape[1];
    for (int id : ids)
        if (id < 0 || id >= V)
            throw DimensionError("embed: id " + std::to_string(id) + " outside table " +
                                 T.shape_str());
    const int n = static_cast<int>(ids.size());
    Tensor C({n, d});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) C.at(i, j) = T.at(ids[i], j);
    return push(std::move(C), nodes_[table].requires_grad,
                [table, ids, d](Tape& t, const Tensor& g) {
                    if (!t.nodes_[table].requires_grad) return;
                    Tensor& dt = t.grad_buf(table);
                    for (size_t i = 0; i < ids.size(); ++i)
                        for (int j = 0; j < d; ++j)
                            dt.at(ids[i], j) += g.at(static_cast<int>(i), j);
                });
}

Tape::Id Tape::attention(Id q, Id k, Id v, int n_heads, bool causal, int n_prefix) {
    const Tensor& Q = value(q);
    const Tensor& K = value(k);
    const Tensor& V = value(v);
    if (Q.shape.size() != 2 || K.shape.size() != 2 || Q.shape[1] != K.shape[1])
        shape_error("attention", Q, K);
    if (!K.same_shape(V)) shape_error("attention", K, V);
    const int n = Q.shape[0], d = Q.shape[1], ctx = K.shape[0];
    if (n_heads < 1 || d % n_heads != 0)
        throw DimensionError("attention: width " + std::to_string(d) +
                             " not divisible by heads " + std::to_string(n_heads));
    if (n_prefix < 0 || n_prefix > ctx)
        throw DimensionError("attention: prefix " + std::to_string(n_prefix) +
                             " exceeds context " + std::to_string(ctx));
    if (causal && ctx - n_prefix != n)
        throw DimensionError("attention: causal mask needs " + std::to_string(n) +
                             " context positions, got " + std::to_string(ctx - n_prefix));
    const int dh = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    // probs: [n_heads, n, ctx], masked entries zero.
    auto probs = std::make_shared<Tensor>(Tensor({n_heads * n, ctx}));
    Tensor C({n, d});
    std::vector<double> row(ctx);
    for (int hh = 0; hh < n_heads; ++hh) {
        const int off = hh * dh;
        for (int i = 0; i < n; ++i) {
            const int limit = causal ? n_prefix + i + 1 : ctx;
            double mx = -1e300;
            for (int j = 0; j < limit; ++j) {
                double s = 0.0;
                const double* qp = Q.data.data() + static_cast<size_t>(i) * d + off;
                const double* kp = K.data.data() + static_cast<size_t>(j) * d + off;
                for (int c = 0; c < dh; ++c) s += qp[c] * kp[c];
                row[j] = s * inv_sqrt;
                mx = std::max(mx, row[j]);
            }
            double z = 0.0;
            for (int j = 0; j < limit; ++j) {
                row[j] = std::exp(row[j] - mx);
                z += row[j];
            }
            double* pr = probs->data.data() + (static_cast<size_t>(hh) * n + i) * ctx;
            for (int j = 0; j < limit; ++j) pr[j] = row[j] / z;
            for (int j = limit; j < ctx; ++j) pr[j] = 0.0;
            double* cp = C.data.data() + static_cast<size_t>(i) * d + off;
            for (int j = 0; j < limit; ++j) {
                const double p = pr[j];
                if (p == 0.0) continue;
                const double* vp = V.data.data() + static_cast<size_t>(j) * d + off;
                for (int c = 0; c < dh; ++c) cp[c] += p * vp[c];
            }
        }
    }
    bool rg = nodes_[q].requires_grad || nodes_[k].requires_grad || nodes_[v].requires_grad;
    return push(std::move(C), rg,
                [q, k, v, n_heads, n, d, ctx, dh, inv_sqrt, probs](Tape& t, const Tensor& g) {
                    const bool need_q = t.nodes_[q].requires_grad;
                    const bool need_k = t.nodes_[k].requires_grad;
                    const bool need_v = t.nodes_[v].requires_grad;
                    if (!need_q && !need_k && !need_v) return;
                    const Tensor& Q2 = t.value(q);
                    const Tensor& K2 = t.value(k);
                    const Tensor& V2 = t.value(v);
                    double* dQ = need_q ? t.grad_buf(q).data.data() : nullptr;
                    double* dK = need_k ? t.grad_buf(k).data.data() : nullptr;
                    double* dV = need_v ? t.grad_buf(v).data.data() : nullptr;
                    std::vector<double> dp(ctx), ds(ctx);
                    for (int hh = 0; hh < n_heads; ++hh) {
                        const int off = hh * dh;
                        for (int i = 0; i < n; ++i) {
                            const double* pr =
                                probs->data.data() + (static_cast<size_t>(hh) * n + i) * ctx;
                            const double* go = g.data.data() + static_cast<size_t>(i) * d + off;
                            // dp[j] = dC_i . V_j ; dV_j += p * dC_i
                            for (int j = 0; j < ctx; ++j) {
                                if (pr[j] == 0.0) {
                                    dp[j] = 0.0;
                                    continue;
                                }
                                const double* vp =
                                    V2.data.data() + static_cast<size_t>(j) * d + off;
                                double s = 0.0;
                                for (int c = 0; c < dh; ++c) s += go[c] * vp[c];
                                dp[j] = s;
                                if (need_v) {
                                    double* dvp = dV + static_cast<size_t>(j) * d + off;
                                    for (int c = 0; c < dh; ++c) dvp[c] += pr[j] * go[c];
                                }
                            }
                            // softmax backward within the row
                            double dot = 0.0;
                            for (int j = 0; j < ctx; ++j) dot += pr[j] * dp[j];
                            for (int j = 0; j < ctx; ++j)
                                ds[j] = pr[j] == 0.0 ? 0.0 : pr[j] * (dp[j] - dot) * inv_sqrt;
                            if (need_q) {
                                double* dqp = dQ + static_cast<size_t>(i) * d + off;
                                for (int j = 0; j < ctx; ++j) {
                                    if (ds[j] == 0.0) continue;
                                    const double* kp =
                                        K2.data.data() + static_cast<size_t>(j) * d + off;
                                    for (int c = 0; c < dh; ++c) dqp[c] += ds[j] * kp[c];
                                }
                            }
                            if (need_k) {
                                const double* qp =
                                    Q2.data.data() + static_cast<size_t>(i) * d + off;
                                for (int j = 0; j < ctx; ++j) {
                                    if (ds[j] == 0.0) continue;
                                    double* dkp = dK + static_cast<size_t>(j) * d + off;
                                    for (int c = 0; c < dh; ++c) dkp[c] += ds[j] * qp[c];
                                }
                            }
                        }
                    }
                });
}

Tape::Id Tape::outer_sum(Id a, Id b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.shape.size() != 1 || B.shape.size() != 1) shape_error("outer_sum", A, B);
    const int n = A.shape[0], m = B.shape[0];
    Tensor C({n, m});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) C.at(i, j) = A.data[i] + B.data[j];
    bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return push(std::move(C), rg, [a, b, n, m](Tape& t, const Tensor& g) {
        if (t.nodes_[a].requires_grad) {
            Tensor& da = t.grad_buf(a);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) da.data[i] += g.at(i, j);
        }
        if (t.nodes_[b].requires_grad) {
            Tensor& db = t.grad_buf(b);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) db.data[j] += g.at(i, j);
        }
    });
}

Tape::Id Tape::sum_all(Id a) {
    const Tensor& A = value(a);
    double s = 0.0;
    for (double x : A.data) s += x;
    return push(Tensor::scalar(s), nodes_[a].requires_grad, [a](Tape& t, const Tensor& g) {
        if (!t.nodes_[a].requires_grad) return;
        Tensor& da = t.grad_buf(a);
        for (double& x : da.data) x += g.data[0];
    });
}

Tape::Id Tape::mean_all(Id a) {
    const Tensor& A = value(a);
    double s = 0.0;
    for (double x : A.data) s += x;
    const double inv = 1.0 / static_cast<double>(A.numel());
    return push(Tensor::scalar(s * inv), nodes_[a].requires_grad,
                [a, inv](Tape& t, const Tensor& g) {
                    if (!t.nodes_[a].requires_grad) return;
                    Tensor& da = t.grad_buf(a);
                    for (double& x : da.data) x += g.data[0] * inv;
                });
}

Tape::Id Tape::cross_entropy(Id logits, const std::vector<int>& targets,
                             const std::vector<double>& mask) {
    const Tensor& L = value(logits);
    if (L.shape.size() != 2 || targets.size() != static_cast<size_t>(L.shape[0]) ||
        mask.size() != targets.size())
        throw DimensionError("cross_entropy: logits " + L.shape_str() + " with " +
                             std::to_string(targets.size()) + " targets, " +
                             std::to_string(mask.size()) + " mask entries");
    const int n = L.shape[0], V = L.shape[1];
    double count = 0.0;
    for (double mv : mask) count += mv > 0.0 ? 1.0 : 0.0;
    const double denom = std::max(count, 1.0);

    auto probs = std::make_shared<Tensor>(Tensor({n, V}));
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double mx = L.at(i, 0);
        for (int j = 1; j < V; ++j) mx = std::max(mx, L.at(i, j));
        double z = 0.0;
        for (int j = 0; j < V; ++j) {
            double e = std::exp(L.at(i, j) - mx);
            probs->at(i, j) = e;
            z += e;
        }
        for (int j = 0; j < V; ++j) probs->at(i, j) /= z;
        if (mask[i] > 0.0) {
            if (targets[i] < 0 || targets[i] >= V)
                throw DimensionError("cross_entropy: target " + std::to_string(targets[i]) +
                                     " outside vocab " + std::to_string(V));
            loss += -(L.at(i, targets[i]) - mx - std::log(z));
        }
    }
    loss /= denom;
    return push(Tensor::scalar(loss), nodes_[logits].requires_grad,
                [logits, targets, mask, denom, probs, n, V](Tape& t, const Tensor& g) {
                    if (!t.nodes_[logits].requires_grad) return;
                    Tensor& dl = t.grad_buf(logits);
                    const double go = g.data[0] / denom;
                    for (int i = 0; i < n; ++i) {
                        if (!(mask[i] > 0.0)) continue;
                        for (int j = 0; j < V; ++j) dl.at(i, j) += go * probs->at(i, j);
                        dl.at(i, targets[i]) -= go;
                    }
                });
}

Tape::Id Tape::bce(Id logits, const Tensor& labels, const Tensor& mask) {
    const Tensor& L = value(logits);
    if (!L.same_shape(labels)) shape_error("bce labels", L, labels);
    if (!L.same_shape(mask)) shape_error("bce mask", L, mask);
    double count = 0.0;
    for (double mv : mask.data) count += mv > 0.0 ? 1.0 : 0.0;
    const double denom = std::max(count, 1.0);
    double loss = 0.0;
    for (size_t i = 0; i < L.numel(); ++i)
        if (mask.data[i] > 0.0) loss += stable_bce(L.data[i], labels.data[i]);
    loss /= denom;
    return push(Tensor::scalar(loss), nodes_[logits].requires_grad,
                [logits, labels, mask, denom](Tape& t, const Tensor& g) {
                    if (!t.nodes_[logits].requires_grad) return;
                    Tensor& dl = t.grad_buf(logits);
                    const Tensor& L2 = t.value(logits);
                    const double go = g.data[0] / denom;
                    for (size_t i = 0; i < L2.numel(); ++i) {
                        if (!(mask.data[i] > 0.0)) continue;
                        double sig = 1.0 / (1.0 + std::exp(-L2.data[i]));
                        dl.data[i] += go * (sig - labels.data[i]);
                    }
                });
}

// ---------------------------------------------------------------------------
// Store binding

Tape::Id TapeBind::operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Param& p = store_.at(name);
    Tape::Id id = tape_.leaf(p.value, p.trainable);
    bound_.emplace(name, id);
    return id;
}

std::map<std::string, Tensor> TapeBind::grads() const {
    std::map<std::string, Tensor> out;
    for (const auto& [name, id] : bound_)
        if (store_.at(name).trainable && tape_.has_grad(id)) out.emplace(name, tape_.grad(id));
    return out;
}

// ---------------------------------------------------------------------------
// Optimizer

void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads, double lr,
               double beta1, double beta2, double eps) {
    for (const auto& [name, g] : grads) {
        if (!store.has(name)) throw UsageError("adam_step: unknown parameter " + name);
        Param& p = store.at(name);
        if (!p.trainable) throw UsageError("adam_step: gradient for frozen parameter " + name);
        if (!p.value.same_shape(g)) shape_error("adam_step", p.value, g);
    }
    for (const auto& [name, g] : grads) {
        Param& p = store.at(name);
        if (p.m.numel() == 0) {
            p.m = Tensor(p.value.shape);
            p.v = Tensor(p.value.shape);
        }
        p.t += 1;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(p.t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(p.t));
        for (size_t i = 0; i < p.value.numel(); ++i) {
            const double gi = g.data[i];
            p.m.data[i] = beta1 * p.m.data[i] + (1.0 - beta1) * gi;
            p.v.data[i] = beta2 * p.v.data[i] + (1.0 - beta2) * gi * gi;
            const double mhat = p.m.data[i] / bc1;
            const double vhat = p.v.data[i] / bc2;
            p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
    store.step += 1;
}

// ---------------------------------------------------------------------------
// Finite differences

GradCheckResult finite_diff_check(const LossBuilder& build, ParamStore& store, double eps,
                                  int n_coords, uint64_t seed) {
    if (!(eps > 0.0)) throw UsageError("finite_diff_check: eps must be positive");

    std::map<std::string, Tensor> analytic;
    {
        Tape tape;
        TapeBind bind(tape, store);
        Tape::Id loss = build(tape, bind);
        tape.backward(loss);
        analytic = bind.grads();
    }
    auto eval_loss = [&]() {
        Tape tape;
        TapeBind bind(tape, store);
        Tape::Id loss = build(tape, bind);
        return tape.value(loss).data[0];
    };

    std::vector<std::string> names = store.trainable_names();
    size_t total = 0;
    for (const auto& n : names) total += store.at(n).value.numel();
    GradCheckResult res;
    if (total == 0) return res;

    Rng rng(seed);
    for (int c = 0; c < n_coords; ++c) {
        size_t flat = rng.index(total);
        std::string pname;
        size_t idx = 0;
        for (const auto& n : names) {
            size_t sz = store.at(n).value.numel();
            if (flat < sz) {
                pname = n;
                idx = flat;
                break;
            }
            flat -= sz;
        }
        double& coord = store.at(pname).value.data[idx];
        const double saved = coord;
        coord = saved + eps;
        const double up = eval_loss();
        coord = saved - eps;
        const double down = eval_loss();
        coord = saved;
        const double numeric = (up - down) / (2.0 * eps);
        double a = 0.0;
        auto it = analytic.find(pname);
        if (it != analytic.end()) a = it->second.data[idx];
        const double rel =
            std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-12});
        res.n_checked += 1;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_param = pname;
            res.worst_index = static_cast<int>(idx);
            res.worst_analytic = a;
            res.worst_numeric = numeric;
        }
    }
    return res;
}

}  // namespace ptie
