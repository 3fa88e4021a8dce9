#pragma once

#include <cmath>
#include <memory>

#include "sstrec/nn/layers.hpp"

namespace sstrec::nn {

/// Multi-head self-attention over (N, T, D):
/// softmax(QK^T / sqrt(D/heads)) V per head, concatenated, projected.
class MultiHeadAttention : public Layer {
public:
    MultiHeadAttention(int d_model, int heads, std::mt19937_64& rng, std::string name = "mha")
        : d_(d_model), heads_(heads), dh_(d_model / heads),
          wq_(d_model, d_model, rng, name + ".wq"), wk_(d_model, d_model, rng, name + ".wk"),
          wv_(d_model, d_model, rng, name + ".wv"), wo_(d_model, d_model, rng, name + ".wo") {
        if (d_model % heads != 0)
            throw std::invalid_argument("MultiHeadAttention: d_model not divisible by heads");
    }

    Tensor forward(const Tensor& x, bool train) override {
        if (x.rank() != 3 || x.dim(2) != d_) throw std::invalid_argument("MultiHeadAttention: shape");
        N_ = x.dim(0);
        T_ = x.dim(1);
        q_ = wq_.forward(x, train);
        k_ = wk_.forward(x, train);
        v_ = wv_.forward(x, train);
        attn_ = Tensor({N_, heads_, T_, T_});
        Tensor ctx({N_, T_, d_});
        float scale = 1.0f / std::sqrt(static_cast<float>(dh_));
        for (int n = 0; n < N_; ++n)
            for (int h = 0; h < heads_; ++h) {
                for (int t = 0; t < T_; ++t) {
                    float* arow = attn_row(n, h, t);
                    const float* qv = head_ptr(q_, n, t, h);
                    float maxv = -1e30f;
                    for (int u = 0; u < T_; ++u) {
                        const float* kv = head_ptr(k_, n, u, h);
                        float s = 0;
                        for (int i = 0; i < dh_; ++i) s += qv[i] * kv[i];
                        arow[u] = s * scale;
                        maxv = std::max(maxv, arow[u]);
                    }
                    float sum = 0;
                    for (int u = 0; u < T_; ++u) {
                        arow[u] = std::exp(arow[u] - maxv);
                        sum += arow[u];
                    }
                    for (int u = 0; u < T_; ++u) arow[u] /= sum;
                    float* out = head_ptr(ctx, n, t, h);
                    for (int i = 0; i < dh_; ++i) out[i] = 0;
                    for (int u = 0; u < T_; ++u) {
                        const float* vv = head_ptr(v_, n, u, h);
                        float a = arow[u];
                        for (int i = 0; i < dh_; ++i) out[i] += a * vv[i];
                    }
                }
            }
        ctx_ = ctx;
        return wo_.forward(ctx, train);
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dctx = wo_.backward(dy);
        Tensor dq({N_, T_, d_}), dk({N_, T_, d_}), dv({N_, T_, d_});
        std::vector<float> dattn(T_);
        for (int n = 0; n < N_; ++n)
            for (int h = 0; h < heads_; ++h)
                for (int t = 0; t < T_; ++t) {
                    const float* arow = attn_row(n, h, t);
                    const float* go = head_ptr(dctx, n, t, h);
                    // gradient w.r.t. attention weights and V
                    double dot = 0;
                    for (int u = 0; u < T_; ++u) {
                        const float* vv = head_ptr(v_, n, u, h);
                        float* dvv = head_ptr(dv, n, u, h);
                        float s = 0;
                        for (int i = 0; i < dh_; ++i) {
                            s += go[i] * vv[i];
                            dvv[i] += arow[u] * go[i];
                        }
                        dattn[u] = s;
                        dot += static_cast<double>(s) * arow[u];
                    }
                    // softmax backward, then scores -> q, k
                    float scale = 1.0f / std::sqrt(static_cast<float>(dh_));
                    const float* qv = head_ptr(q_, n, t, h);
                    float* dqv = head_ptr(dq, n, t, h);
                    for (int u = 0; u < T_; ++u) {
                        float ds = arow[u] * (dattn[u] - static_cast<float>(dot)) * scale;
                        const float* kv = head_ptr(k_, n, u, h);
                        float* dkv = head_ptr(dk, n, u, h);
                        for (int i = 0; i < dh_; ++i) {
                            dqv[i] += ds * kv[i];
                            dkv[i] += ds * qv[i];
                        }
                    }
                }
        Tensor dx = wq_.backward(dq);
        Tensor dxk = wk_.backward(dk);
        Tensor dxv = wv_.backward(dv);
        for (size_t i = 0; i < dx.size(); ++i) dx[i] += dxk[i] + dxv[i];
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        wq_.collect(out);
        wk_.collect(out);
        wv_.collect(out);
        wo_.collect(out);
    }

    /// Attention weights from the last forward pass, (N, heads, T, T).
    const Tensor& attention() const { return attn_; }

private:
    float* head_ptr(Tensor& t, int n, int tok, int h) {
        return &t.data[((static_cast<size_t>(n) * T_ + tok) * d_) + static_cast<size_t>(h) * dh_];
    }
    const float* head_ptr(const Tensor& t, int n, int tok, int h) const {
        return &t.data[((static_cast<size_t>(n) * T_ + tok) * d_) + static_cast<size_t>(h) * dh_];
    }
    float* attn_row(int n, int h, int t) {
        return &attn_.data[(((static_cast<size_t>(n) * heads_ + h) * T_) + t) * T_];
    }
    const float* attn_row(int n, int h, int t) const {
        return &attn_.data[(((static_cast<size_t>(n) * heads_ + h) * T_) + t) * T_];
    }

    int d_, heads_, dh_;
    Linear wq_, wk_, wv_, wo_;
    int N_ = 0, T_ = 0;
    Tensor q_, k_, v_, attn_, ctx_;
};

/// Pre-norm transformer block: x + MHA(LN(x)), then x + MLP(LN(x)).
class TransformerBlock : public Layer {
public:
    TransformerBlock(int d_model, int heads, int mlp_ratio, std::mt19937_64& rng,
                     std::string name = "block")
        : ln1_(d_model, name + ".ln1"), mha_(d_model, heads, rng, name + ".mha"),
          ln2_(d_model, name + ".ln2"),
          fc1_(d_model, d_model * mlp_ratio, rng, name + ".fc1"),
          fc2_(d_model * mlp_ratio, d_model, rng, name + ".fc2") {}

    Tensor forward(const Tensor& x, bool train) override {
        Tensor a = mha_.forward(ln1_.forward(x, train), train);
        Tensor mid(x.shape);
        for (size_t i = 0; i < mid.size(); ++i) mid[i] = x[i] + a[i];
        Tensor m = fc2_.forward(gelu_.forward(fc1_.forward(ln2_.forward(mid, train), train), train), train);
        Tensor y(x.shape);
        for (size_t i = 0; i < y.size(); ++i) y[i] = mid[i] + m[i];
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dmid = ln2_.backward(fc1_.backward(gelu_.backward(fc2_.backward(dy))));
        for (size_t i = 0; i < dmid.size(); ++i) dmid[i] += dy[i];
        Tensor dx = ln1_.backward(mha_.backward(dmid));
        for (size_t i = 0; i < dx.size(); ++i) dx[i] += dmid[i];
        return dx;
    }

    void collect(std::vector<Param*>& out) override {
        ln1_.collect(out);
        mha_.collect(out);
        ln2_.collect(out);
        fc1_.collect(out);
        fc2_.collect(out);
    }

private:
    LayerNorm ln1_;
    MultiHeadAttention mha_;
    LayerNorm ln2_;
    Linear fc1_;
    GELU gelu_;
    Linear fc2_;
};

}  // namespace sstrec::nn
